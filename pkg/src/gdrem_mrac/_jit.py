"""Numba switch.

Set ``GDREM_MRAC_DISABLE_NUMBA=1`` to run every kernel as plain numpy/Python.
The kernels are written in the subset of numpy that numba compiles, so both
paths execute the same source.
"""
import os

_FLAG = "GDREM_MRAC_DISABLE_NUMBA"

USE_NUMBA = os.environ.get(_FLAG, "0").strip().lower() not in ("1", "true", "yes", "on")

if USE_NUMBA:
    try:
        import numba
    except ImportError:  # pragma: no cover - numba is a hard dependency but stay usable
        USE_NUMBA = False

if USE_NUMBA:

    def njit(func=None, **kwargs):
        kwargs.setdefault("cache", True)
        if func is None:
            return lambda f: numba.njit(**kwargs)(f)
        return numba.njit(**kwargs)(func)

else:

    def njit(func=None, **kwargs):
        if func is None:
            return lambda f: f
        return func


def backend():
    return "numba" if USE_NUMBA else "numpy"
