"""JIT switch for the numeric kernels.

Set ``SCHEDWIDTH_DISABLE_NUMBA=1`` before import to run every kernel as plain
Python/numpy.  The flag is read once; ``use_numba()`` reports the active path.
"""

import os

_DISABLED = os.environ.get("SCHEDWIDTH_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    if _DISABLED:
        raise ImportError
    from numba import njit as _njit

    HAS_NUMBA = True
except ImportError:
    HAS_NUMBA = False
    _njit = None


def use_numba():
    return HAS_NUMBA


def maybe_njit(*args, **kwargs):
    """``numba.njit`` when enabled, identity decorator otherwise."""
    if args and callable(args[0]) and not kwargs:
        fn = args[0]
        return _njit(cache=True)(fn) if HAS_NUMBA else fn

    def wrap(fn):
        if not HAS_NUMBA:
            return fn
        kwargs.setdefault("cache", True)
        return _njit(*args, **kwargs)(fn)

    return wrap
