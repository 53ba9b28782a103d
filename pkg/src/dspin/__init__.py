"""Spin-1/2 transport along curves embedded in curved surfaces."""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    ConfigError,
    ConfigInvalid,
    DspinError,
    GeometryError,
    NumericalError,
)
