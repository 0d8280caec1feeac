"""Selects the pair-kernel backend at import time.

The compiled Cython extension is preferred; the numpy fallback is used when
the extension is missing or when ``HYDROLIM_BACKEND=fallback`` is set.
``HYDROLIM_THREADS`` caps the OpenMP thread count of the compiled kernels;
thread count never changes results (per-particle accumulation is sequential).
"""

import os

from . import _fallback

try:
    from . import _kernels as _compiled
except ImportError:
    _compiled = None


def available_backends():
    names = ["fallback"]
    if _compiled is not None:
        names.insert(0, "compiled")
    return tuple(names)


def get_backend(name=None):
    """Return the kernel module for `name` ("compiled"/"fallback", None = active)."""
    if name is None:
        name = _ACTIVE.BACKEND_NAME
    if name == "compiled":
        if _compiled is None:
            raise ValueError("compiled backend is not available")
        return _compiled
    if name == "fallback":
        return _fallback
    raise ValueError(f"unknown backend {name!r}")


def _select_active():
    forced = os.environ.get("HYDROLIM_BACKEND", "").strip().lower()
    if forced == "fallback":
        return _fallback
    if forced == "compiled":
        if _compiled is None:
            raise ImportError("HYDROLIM_BACKEND=compiled but the extension is missing")
        return _compiled
    return _compiled if _compiled is not None else _fallback


_ACTIVE = _select_active()
BACKEND_NAME = _ACTIVE.BACKEND_NAME


def num_threads():
    raw = os.environ.get("HYDROLIM_THREADS", "").strip()
    if raw:
        try:
            cap = int(raw)
        except ValueError as exc:
            raise ValueError(f"HYDROLIM_THREADS must be an integer, got {raw!r}") from exc
        if cap < 1:
            raise ValueError("HYDROLIM_THREADS must be >= 1")
        return cap
    return os.cpu_count() or 1


def accel_power_law(pos, sigma, p):
    return _ACTIVE.accel_power_law(pos, sigma, p, num_threads())


def min_pair_distance(pos):
    return _ACTIVE.min_pair_distance(pos, num_threads())


def pair_potential_sums_power_law(pos, sigma, p):
    return _ACTIVE.pair_potential_sums_power_law(pos, sigma, p, num_threads())


def force_sums_power_law(pos, sigma, p):
    return _ACTIVE.force_sums_power_law(pos, sigma, p, num_threads())
