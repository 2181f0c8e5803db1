"""Kernel backend selection.

The compiled extension is used when it was built; otherwise the numpy
fallback is loaded. Setting ``MMWCAL_PURE_PYTHON=1`` forces the fallback.
"""

import os
from types import ModuleType

from . import _kernels_py

_compiled: ModuleType | None
try:
    from . import _kernels as _compiled  # type: ignore[attr-defined]
except ImportError:
    _compiled = None

if _compiled is not None and os.environ.get("MMWCAL_PURE_PYTHON", "") not in ("1", "true"):
    _active = _compiled
    BACKEND = "cython"
else:
    _active = _kernels_py
    BACKEND = "python"


def available_backends() -> list[str]:
    return ["python"] + (["cython"] if _compiled is not None else [])


def get_backend(name: str | None = None) -> ModuleType:
    if name is None:
        return _active
    if name == "python":
        return _kernels_py
    if name == "cython":
        if _compiled is None:
            raise ImportError("compiled kernels are not built")
        return _compiled
    raise ValueError(f"unknown kernel backend {name!r}")
