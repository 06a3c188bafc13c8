from .config import TrainConfig, reference_mode_enabled, set_reference_mode
from .container import ArrayContainer, read_container, write_container

__all__ = [
    "ArrayContainer",
    "TrainConfig",
    "read_container",
    "reference_mode_enabled",
    "set_reference_mode",
    "write_container",
]
