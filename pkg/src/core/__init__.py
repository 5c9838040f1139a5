from .errors import ConfigError, FlowFilterError
from .resource_manager import resource_manager
