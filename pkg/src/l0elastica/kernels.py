"""Backend selection for the hot kernels.

The compiled ``_kernels`` extension is used when importable; otherwise, or
when the ``L0ELASTICA_PURE_PYTHON`` environment variable is set to a
non-empty value other than ``0``, the numpy versions in ``_kernels_py`` are
used.  ``use_backend`` switches at runtime (tests, benchmarks).
"""

import os
from types import ModuleType

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

BACKENDS = ("cython", "python")


def _default() -> ModuleType:
    if os.environ.get("L0ELASTICA_PURE_PYTHON", "") not in ("", "0") or _compiled is None:
        return _kernels_py
    return _compiled


impl: ModuleType = _default()


def available_backends() -> list[str]:
    return ["cython", "python"] if _compiled is not None else ["python"]


def backend_name() -> str:
    return "cython" if impl is _compiled and _compiled is not None else "python"


def get_backend(name: str) -> ModuleType:
    if name == "python":
        return _kernels_py
    if name == "cython":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not built; run `pip install -e .`")
        return _compiled
    raise ValueError(f"unknown backend {name!r}; expected one of {BACKENDS}")


def use_backend(name: str) -> str:
    """Select the active backend; returns the previously active name."""
    global impl
    previous = backend_name()
    impl = get_backend(name)
    return previous
