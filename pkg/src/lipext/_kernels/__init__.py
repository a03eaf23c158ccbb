"""Hot kernels, compiled when available.

The Cython extension ``_core`` is used if it was built; otherwise the
pure-Python module ``_fallback`` is used. Setting ``LIPEXT_PURE_PYTHON=1``
forces the fallback.
"""
import os

from . import _fallback

BACKEND = "python"
_impl = _fallback

if os.environ.get("LIPEXT_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _core  # type: ignore[attr-defined]
    except ImportError:  # extension not built
        pass
    else:
        _impl = _core
        BACKEND = "cython"


def get_backend(name=None):
    """Return the kernel module for ``name`` (``"cython"``, ``"python"`` or default)."""
    if name is None:
        return _impl
    if name == "python":
        return _fallback
    if name == "cython":
        from . import _core  # raises ImportError when not compiled

        return _core
    raise ValueError(f"unknown kernel backend {name!r}")


def available_backends():
    names = ["python"]
    try:
        from . import _core  # noqa: F401
    except ImportError:
        return names
    return ["cython"] + names


transport_simplex = _impl.transport_simplex
tableau_simplex = _impl.tableau_simplex
greedy_select = _impl.greedy_select

__all__ = [
    "BACKEND",
    "available_backends",
    "get_backend",
    "greedy_select",
    "tableau_simplex",
    "transport_simplex",
]
