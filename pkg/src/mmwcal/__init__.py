"""Planning, simulation and verification of mmWave XPD and penetration-loss measurements."""

from .kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
