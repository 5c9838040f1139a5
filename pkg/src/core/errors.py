"""Исключения проекта. Все ошибки модулей наследуются от FlowFilterError."""
from typing import Iterable, Optional, Sequence


class FlowFilterError(Exception):
    """Базовая ошибка"""


class ShapeMismatchError(FlowFilterError):
    def __init__(self, left: Sequence[int], right: Sequence[int], op: str = ""):
        self.left = tuple(left)
        self.right = tuple(right)
        prefix = f"{op}: " if op else ""
        super().__init__(f"{prefix}несовместимые формы {self.left} и {self.right}")


class DomainError(FlowFilterError):
    """Аргумент вне области определения (log от неположительного и т.п.)"""


class InvalidAxisError(FlowFilterError):
    pass


class MaskError(FlowFilterError):
    """Строка маски полностью закрыта"""


class NonScalarLossError(FlowFilterError):
    pass


class NonFiniteError(FlowFilterError):
    def __init__(self, message: str, where: Optional[str] = None, indices: Iterable[int] = ()):
        self.where = where
        self.indices = list(indices)
        details = []
        if where:
            details.append(f"где: {where}")
        if self.indices:
            details.append(f"индексы: {self.indices[:20]}")
        suffix = f" ({'; '.join(details)})" if details else ""
        super().__init__(message + suffix)


class SingularLayerError(FlowFilterError):
    pass


class DimensionError(FlowFilterError):
    pass


class InitialConditionError(FlowFilterError):
    pass


class TrajectoryTooShortError(FlowFilterError):
    pass


class InsufficientSamplesError(FlowFilterError):
    pass


class DegenerateDistanceError(FlowFilterError):
    pass


class ZeroDenominatorError(FlowFilterError):
    def __init__(self, indices: Iterable[int]):
        self.indices = list(indices)
        super().__init__(f"нулевые знаменатели в позициях {self.indices}")


class WindowLengthError(FlowFilterError):
    pass


class ConfigError(FlowFilterError):
    def __init__(self, message: str, fields: Iterable[str] = ()):
        self.fields = list(fields)
        if self.fields:
            message = f"{message}: {', '.join(self.fields)}"
        super().__init__(message)


class SchemaError(FlowFilterError):
    def __init__(self, message: str, rows: Iterable[int] = ()):
        self.rows = list(rows)
        if self.rows:
            message = f"{message} (строки: {self.rows[:20]})"
        super().__init__(message)


class CheckpointError(FlowFilterError):
    def __init__(self, message: str, expected=None, actual=None):
        self.expected = expected
        self.actual = actual
        if expected is not None or actual is not None:
            message = f"{message}; ожидалось {expected}, получено {actual}"
        super().__init__(message)
