"""Numba detection and the pure-numpy fallback switch.

Set ``REPGEOM_DISABLE_NUMBA=1`` to make the numpy kernels the default
path. Explicit ``backend="numba"`` requests still work when numba is
importable, which is what the equivalence tests and the benchmark rely on.
"""
import os

_FLAG = os.environ.get("REPGEOM_DISABLE_NUMBA", "").strip().lower()
NUMBA_DISABLED = _FLAG in {"1", "true", "yes", "on"}

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

NUMBA_AVAILABLE = numba is not None
if NUMBA_AVAILABLE and "NUMBA_THREADING_LAYER" not in os.environ:
    # skip the TBB probe, which warns on older system TBB builds
    numba.config.THREADING_LAYER = "omp"
USE_NUMBA = NUMBA_AVAILABLE and not NUMBA_DISABLED

BACKENDS = ("numpy", "numba", "kdtree")


def default_backend():
    return "numba" if USE_NUMBA else "numpy"


def resolve_backend(backend):
    if backend is None:
        return default_backend()
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}; expected one of {BACKENDS}")
    if backend == "numba" and not NUMBA_AVAILABLE:
        raise RuntimeError("numba backend requested but numba is not installed")
    return backend


def njit(*args, **kwargs):
    """``numba.njit`` with caching on; identity decorator without numba."""
    kwargs.setdefault("cache", True)
    if numba is None:
        if args and callable(args[0]):
            return args[0]
        return lambda f: f
    return numba.njit(*args, **kwargs)
