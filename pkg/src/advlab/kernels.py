"""Hot-kernel backend selection.

The compiled Cython extension is preferred when importable; otherwise the
pure-numpy fallback is used. Override with ADVLAB_KERNELS=numpy|cython|auto
(``cython`` raises if the extension is missing). Both backends implement
identical semantics; ``advlab bench`` compares their speed.
"""

from __future__ import annotations

import os
from types import ModuleType

from .errors import ConfigError

_ENV_VAR = "ADVLAB_KERNELS"


def load_backend(name: str) -> ModuleType:
    """Import a kernel backend by name ('numpy' or 'cython')."""
    if name == "numpy":
        from . import _kernels_np

        return _kernels_np
    if name == "cython":
        from . import _kernels_cy  # type: ignore[attr-defined]

        return _kernels_cy
    raise ConfigError(f"unknown kernel backend {name!r}")


def _select() -> ModuleType:
    choice = os.environ.get(_ENV_VAR, "auto")
    if choice not in ("auto", "numpy", "cython"):
        raise ConfigError(f"{_ENV_VAR} must be auto, numpy, or cython; got {choice!r}")
    if choice in ("auto", "cython"):
        try:
            return load_backend("cython")
        except ImportError:
            if choice == "cython":
                raise
    return load_backend("numpy")


_impl = _select()

BACKEND: str = _impl.BACKEND
maxout_reduce = _impl.maxout_reduce
maxout_scatter = _impl.maxout_scatter
softmax_xent = _impl.softmax_xent
