"""Two-cell coordinated zero-forcing downlink with quantized CSI exchanged
over a limited backhaul, and the bit-allocation schemes that share it."""

from backhaul.errors import (
    BackhaulError,
    ConfigError,
    DomainError,
    NumericalGuardError,
    OracleSizeError,
    SingularStackError,
)
from backhaul.geometry import ScenarioConfig, UserGeometry, build_geometry, load_config, path_loss

__version__ = "0.1.0"

__all__ = [
    "BackhaulError",
    "ConfigError",
    "DomainError",
    "NumericalGuardError",
    "OracleSizeError",
    "SingularStackError",
    "ScenarioConfig",
    "UserGeometry",
    "build_geometry",
    "load_config",
    "path_loss",
]
