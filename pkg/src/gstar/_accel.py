"""Switch between numba-compiled kernels and the pure-numpy fallback.

Set ``GSTAR_DISABLE_NUMBA=1`` before import to force the numpy path.
"""
import os

DISABLED = os.environ.get("GSTAR_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    if DISABLED:
        raise ImportError
    from numba import config as _config, njit, prange, set_num_threads, get_num_threads
    HAS_NUMBA = True
    if "NUMBA_THREADING_LAYER" not in os.environ:
        # skip probing TBB: old system TBB builds only produce a warning
        _config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
except ImportError:
    HAS_NUMBA = False
    prange = range

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def wrap(fn):
            return fn
        return wrap

    def set_num_threads(n):
        pass

    def get_num_threads():
        return 1


def set_threads(n):
    """Cap numba's worker pool. Results do not depend on this."""
    if HAS_NUMBA and n is not None:
        from numba import config
        set_num_threads(max(1, min(int(n), config.NUMBA_NUM_THREADS)))
