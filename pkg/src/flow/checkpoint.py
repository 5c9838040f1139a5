"""
Бинарный контейнер контрольной точки:

    b"FLOWFILT" | версия (u32 LE) | длина заголовка (u64 LE) | JSON-заголовок | float64 LE

Заголовок (ключи отсортированы) хранит конфигурации, константы нормализации,
индекс параметров (имя, форма, смещение) и происхождение. Одинаковые
параметры дают побайтно одинаковый файл.
"""
import hashlib
import json
import logging
import os
import struct
from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from config import constants as C
from src.core.errors import CheckpointError

logger = logging.getLogger(__name__)

_PREFIX = struct.Struct("<8sIQ")


@dataclass
class Checkpoint:
    flow_config: Dict
    encoder_config: Optional[Dict]
    normalization: Dict
    parameters: Dict[str, np.ndarray]
    provenance: Dict = field(default_factory=dict)

    def to_bytes(self) -> bytes:
        index, offset, chunks = [], 0, []
        for name in sorted(self.parameters):
            values = np.ascontiguousarray(self.parameters[name], dtype="<f8")
            index.append({"name": name, "shape": list(values.shape), "offset": offset})
            offset += values.size
            chunks.append(values.tobytes())
        header = {
            "flow": self.flow_config,
            "encoder": self.encoder_config,
            "normalization": self.normalization,
            "parameters": index,
            "provenance": self.provenance,
        }
        header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
        return _PREFIX.pack(C.CHECKPOINT_MAGIC, C.CHECKPOINT_VERSION, len(header_bytes)) + header_bytes + b"".join(chunks)

    @classmethod
    def from_bytes(cls, blob: bytes) -> "Checkpoint":
        if len(blob) < _PREFIX.size:
            raise CheckpointError("файл короче заголовка", expected=_PREFIX.size, actual=len(blob))
        magic, version, header_len = _PREFIX.unpack_from(blob)
        if magic != C.CHECKPOINT_MAGIC:
            raise CheckpointError("неверная сигнатура", expected=C.CHECKPOINT_MAGIC, actual=magic)
        if version != C.CHECKPOINT_VERSION:
            raise CheckpointError("неподдерживаемая версия", expected=C.CHECKPOINT_VERSION, actual=version)
        start = _PREFIX.size
        try:
            header = json.loads(blob[start:start + header_len].decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            raise CheckpointError(f"заголовок не читается: {e}")
        payload = np.frombuffer(blob[start + header_len:], dtype="<f8")
        parameters = {}
        for entry in header["parameters"]:
            size = int(np.prod(entry["shape"], dtype=np.int64))
            chunk = payload[entry["offset"]:entry["offset"] + size]
            if chunk.size != size:
                raise CheckpointError(f"данные параметра {entry['name']} обрезаны", expected=size, actual=chunk.size)
            parameters[entry["name"]] = chunk.astype(np.float64).reshape(entry["shape"])
        return cls(header["flow"], header["encoder"], header["normalization"], parameters, header["provenance"])

    @property
    def checkpoint_id(self) -> str:
        return hashlib.sha256(self.to_bytes()).hexdigest()[:16]

    def save(self, path: str) -> str:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        blob = self.to_bytes()
        with open(path, 'wb') as f:
            f.write(blob)
        logger.info(f"✓ Контрольная точка сохранена: {path} ({len(self.parameters)} тензоров, {len(blob)} байт)")
        return path

    @classmethod
    def load(cls, path: str) -> "Checkpoint":
        if not os.path.exists(path):
            raise CheckpointError(f"файл не найден: {path}")
        with open(path, 'rb') as f:
            return cls.from_bytes(f.read())

    def section(self, prefix: str) -> Dict[str, np.ndarray]:
        """Параметры с префиксом 'prefix.' без него"""
        head = prefix + "."
        return {name[len(head):]: value for name, value in self.parameters.items() if name.startswith(head)}
