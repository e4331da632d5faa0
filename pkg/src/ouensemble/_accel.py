"""Backend selection for the hot kernels.

The simulation kernels exist twice: a numba ``@njit`` version and a plain
numpy version. ``OUENSEMBLE_BACKEND`` picks one (``numba`` or ``numpy``);
when unset, numba is used if it imports.
"""
import contextlib
import os
import warnings

ENV_FLAG = "OUENSEMBLE_BACKEND"

try:
    import numba

    HAVE_NUMBA = True
    # an outdated system TBB only means numba falls back to another layer
    warnings.filterwarnings("ignore", message="The TBB threading layer", category=numba.NumbaWarning)
except ImportError:  # pragma: no cover - numba is a hard dependency in CI
    numba = None
    HAVE_NUMBA = False

BACKENDS = ("numba", "numpy")


def get_backend(override=None):
    """Return the active backend name, honouring an explicit override."""
    name = override or os.environ.get(ENV_FLAG, "").strip().lower() or None
    if name is None:
        return "numba" if HAVE_NUMBA else "numpy"
    if name not in BACKENDS:
        raise ValueError(f"{ENV_FLAG} must be one of {BACKENDS}, got {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not installed")
    return name


def njit(*args, **kwargs):
    """``numba.njit`` with caching on; identity decorator without numba."""
    kwargs.setdefault("cache", True)
    if not HAVE_NUMBA:
        if args and callable(args[0]):
            return args[0]
        return lambda f: f
    return numba.njit(*args, **kwargs)


@contextlib.contextmanager
def worker_threads(workers):
    """Temporarily set the numba thread count (``None`` or 0 keeps default)."""
    if not HAVE_NUMBA or not workers:
        yield
        return
    previous = numba.get_num_threads()
    numba.set_num_threads(min(int(workers), numba.config.NUMBA_NUM_THREADS))
    try:
        yield
    finally:
        numba.set_num_threads(previous)
