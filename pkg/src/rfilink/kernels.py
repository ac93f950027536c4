"""Backend selection for the hot loops.

The compiled extension is preferred. Set ``RFILINK_PURE_PYTHON=1`` to force
the pure-Python fallback (used by the equivalence tests and the benchmark).
"""

from __future__ import annotations

import os
from types import ModuleType

from . import _kernels_py


def _load_compiled() -> ModuleType | None:
    if os.environ.get("RFILINK_PURE_PYTHON", "") not in ("", "0"):
        return None
    try:
        from . import _kernels  # type: ignore[attr-defined]
    except ImportError:
        return None
    return _kernels


_compiled = _load_compiled()
BACKEND = "cython" if _compiled is not None else "python"
_impl: ModuleType = _compiled if _compiled is not None else _kernels_py

lfsr_bits = _impl.lfsr_bits
dfe_equalize = _impl.dfe_equalize


def get_backend(name: str) -> ModuleType:
    """Return a specific backend module ("cython" or "python")."""
    if name == "python":
        return _kernels_py
    if name == "cython":
        if _compiled is None:
            from . import _kernels  # type: ignore[attr-defined]

            return _kernels
        return _compiled
    raise ValueError(f"unknown kernel backend {name!r}")
