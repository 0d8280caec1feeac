"""Pure-numpy implementations of the O(N^2) pair kernels.

Drop-in replacements for the compiled ``hydrolim._kernels`` module, used when
the extension is unavailable (or forced via ``HYDROLIM_BACKEND=fallback``).
Work is chunked over particle blocks to bound temporary memory.  Within a
chunk numpy reduces over j with its fixed pairwise tree, so results are
deterministic run to run; they may differ from the compiled kernels in the
last bits because the reduction order differs.
"""

import numpy as np

BACKEND_NAME = "fallback"

# Rows per chunk are sized so a (rows, n) temporary stays around ~4M doubles.
_CHUNK_DOUBLES = 4_000_000


def _row_chunks(n):
    rows = max(1, _CHUNK_DOUBLES // max(n, 1))
    for start in range(0, n, rows):
        yield start, min(start + rows, n)


def accel_power_law(pos, sigma, p, num_threads=0):
    """Accelerations plus the minimum pair distance; mirrors the compiled kernel."""
    pos = np.asarray(pos, dtype=np.float64)
    n = pos.shape[0]
    acc = np.empty((n, 3), dtype=np.float64)
    sp = sigma ** (p - 1.0)
    min_dist = np.inf
    for lo, hi in _row_chunks(n):
        diff = pos[lo:hi, None, :] - pos[None, :, :]
        r2 = np.einsum("ijk,ijk->ij", diff, diff)
        idx = np.arange(lo, hi)
        r2[idx - lo, idx] = np.inf
        r = np.sqrt(r2)
        min_dist = min(min_dist, float(r.min()))
        with np.errstate(divide="ignore", invalid="ignore"):
            s = sp * r ** -(p + 1.0)
        s[idx - lo, idx] = 0.0
        s[~np.isfinite(s)] = 0.0
        acc[lo:hi] = np.einsum("ij,ijk->ik", s, diff)
    return acc, min_dist


def min_pair_distance(pos, num_threads=0):
    """Minimum over unordered pairs of |x_i - x_j| (0.0 on coincidence)."""
    pos = np.asarray(pos, dtype=np.float64)
    n = pos.shape[0]
    best = np.inf
    for lo, hi in _row_chunks(n):
        diff = pos[lo:hi, None, :] - pos[None, :, :]
        r2 = np.einsum("ijk,ijk->ij", diff, diff)
        idx = np.arange(lo, hi)
        r2[idx - lo, idx] = np.inf
        best = min(best, float(r2.min()))
    return float(np.sqrt(best))


def pair_potential_sums_power_law(pos, sigma, p, num_threads=0):
    """Per-particle sums over j != i of Phi(|x_i - x_j|/sigma), Phi(q) = q^(1-p)/(p-1)."""
    pos = np.asarray(pos, dtype=np.float64)
    n = pos.shape[0]
    out = np.empty(n, dtype=np.float64)
    for lo, hi in _row_chunks(n):
        diff = pos[lo:hi, None, :] - pos[None, :, :]
        r = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        with np.errstate(divide="ignore"):
            phi = (r / sigma) ** (1.0 - p) / (p - 1.0)
        idx = np.arange(lo, hi)
        phi[idx - lo, idx] = 0.0
        out[lo:hi] = phi.sum(axis=1)
    return out


def force_sums_power_law(pos, sigma, p, num_threads=0):
    """Per-particle certificate sums sigma^(p-1) * sum_{j != i} |x_i - x_j|^(-p)."""
    pos = np.asarray(pos, dtype=np.float64)
    n = pos.shape[0]
    sp = sigma ** (p - 1.0)
    out = np.empty(n, dtype=np.float64)
    for lo, hi in _row_chunks(n):
        diff = pos[lo:hi, None, :] - pos[None, :, :]
        r = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        with np.errstate(divide="ignore"):
            f = sp * r**-p
        idx = np.arange(lo, hi)
        f[idx - lo, idx] = 0.0
        out[lo:hi] = f.sum(axis=1)
    return out
