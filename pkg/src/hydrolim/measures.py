"""Empirical measures on position-velocity space and their diagnostics.

An EmpiricalSnapshot is the probability measure (1/N) sum_i delta at
(x_i(t), u_i(t)); a SpaceTimeMeasure stacks snapshots with trapezoid weights
in t, so integrals against it approximate integral over [0, T] of the
per-snapshot integrals dt (total mass T).
"""

from dataclasses import dataclass

import numpy as np

from .dynamics import Trajectory


@dataclass(frozen=True)
class EmpiricalSnapshot:
    """Point measure with weight 1/N at each (x_i, v_i)."""

    t: float
    x: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        x = np.ascontiguousarray(self.x, dtype=np.float64)
        v = np.ascontiguousarray(self.v, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != 3 or x.shape != v.shape:
            raise ValueError("x and v must both have shape (N, 3)")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "v", v)

    @property
    def n(self) -> int:
        return self.x.shape[0]


def snapshot(traj: Trajectory, k: int) -> EmpiricalSnapshot:
    return EmpiricalSnapshot(float(traj.times[k]), traj.positions[k], traj.velocities[k])


@dataclass(frozen=True)
class SpaceTimeMeasure:
    """Trapezoid-in-t stack of snapshots over [0, T]; weights sum to T."""

    snapshots: tuple
    weights: np.ndarray

    @classmethod
    def from_trajectory(cls, traj: Trajectory) -> "SpaceTimeMeasure":
        snaps = tuple(snapshot(traj, k) for k in range(traj.n_samples))
        return cls(snapshots=snaps, weights=trapezoid_weights(traj.times))

    @classmethod
    def single(cls, snap: EmpiricalSnapshot, T) -> "SpaceTimeMeasure":
        """Degenerate one-snapshot measure carrying the full horizon weight T."""
        T = float(T)
        if T <= 0:
            raise ValueError("horizon T must be positive")
        return cls(snapshots=(snap,), weights=np.array([T]))

    @property
    def total_time(self) -> float:
        return float(self.weights.sum())


def trapezoid_weights(times) -> np.ndarray:
    times = np.asarray(times, dtype=np.float64)
    if times.ndim != 1 or times.size < 2:
        raise ValueError("trapezoid weights need at least two sample times")
    w = np.empty_like(times)
    w[0] = 0.5 * (times[1] - times[0])
    w[-1] = 0.5 * (times[-1] - times[-2])
    w[1:-1] = 0.5 * (times[2:] - times[:-2])
    return w


def _component(snap: EmpiricalSnapshot, which: str) -> np.ndarray:
    if which == "velocity":
        return snap.v
    if which == "position":
        return snap.x
    raise ValueError(f"which must be 'position' or 'velocity', got {which!r}")


def moment(snap: EmpiricalSnapshot, q, which="velocity") -> float:
    """(1/N) sum_i |x_i|^q or |v_i|^q."""
    q = float(q)
    if q < 0:
        raise ValueError("moment order must be nonnegative")
    pts = _component(snap, which)
    norms = np.sqrt(np.einsum("ij,ij->i", pts, pts))
    if q == 0.0:
        return 1.0
    return float(np.mean(norms**q))


def tail_mass(snap: EmpiricalSnapshot, q, R, which="velocity") -> float:
    """(1/N) sum over points with |.|^q > R of |.|^q.

    Bounded by R^(-eps/q) * moment(q + eps) for every eps > 0: the tails of
    a family with bounded higher moments vanish uniformly.
    """
    q = float(q)
    R = float(R)
    if q <= 0 or R <= 0:
        raise ValueError("q and R must be positive")
    pts = _component(snap, which)
    norms_q = np.sqrt(np.einsum("ij,ij->i", pts, pts)) ** q
    return float(norms_q[norms_q > R].sum() / snap.n)


def char_fn(snap: EmpiricalSnapshot, y, w) -> complex:
    """(1/N) sum_j exp(i (y . x_j + w . v_j)); modulus <= 1, value 1 at 0."""
    y = np.asarray(y, dtype=np.float64).reshape(3)
    w = np.asarray(w, dtype=np.float64).reshape(3)
    phase = snap.x @ y + snap.v @ w
    return complex(np.exp(1j * phase).mean())


def char_fn_grid(snap: EmpiricalSnapshot, Y, W) -> np.ndarray:
    """Characteristic function at many (y, w) rows at once; returns (G,) complex."""
    Y = np.asarray(Y, dtype=np.float64)
    W = np.asarray(W, dtype=np.float64)
    phases = snap.x @ Y.T + snap.v @ W.T  # (N, G)
    return np.exp(1j * phases).mean(axis=0)


def default_char_grid():
    """Deterministic subsample (<= 4096 rows) of the tensor grid {-2..2}^3 x {-2..2}^3."""
    axis = np.array([-2.0, -1.0, 0.0, 1.0, 2.0])
    grids = np.meshgrid(*([axis] * 6), indexing="ij")
    full = np.stack([g.ravel() for g in grids], axis=1)  # (5^6, 6)
    step = int(np.ceil(full.shape[0] / 4096))
    sub = full[::step]
    return sub[:, :3].copy(), sub[:, 3:].copy()


def char_distance(a: EmpiricalSnapshot, b: EmpiricalSnapshot, grid=None) -> float:
    """Max over the (y, w) grid of |char_fn(a) - char_fn(b)|."""
    if grid is None:
        grid = default_char_grid()
    Y, W = grid
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    W = np.atleast_2d(np.asarray(W, dtype=np.float64))
    if Y.shape != W.shape or Y.shape[1] != 3 or Y.shape[0] == 0:
        raise ValueError("grid must be a nonempty pair of matching (G, 3) arrays")
    return float(np.abs(char_fn_grid(a, Y, W) - char_fn_grid(b, Y, W)).max())


def tightness_bound(B, T, R) -> float:
    """Chebyshev bound (2BT + T^3/3) / R^2 on space-time mass outside radius R."""
    B, T, R = float(B), float(T), float(R)
    if B <= 0 or T <= 0 or R <= 0:
        raise ValueError("B, T and R must be positive")
    return (2.0 * B * T + T**3 / 3.0) / R**2


def spacetime_moment(m: SpaceTimeMeasure, q, which="velocity") -> float:
    """Trapezoid-in-t integral over [0, T] of the per-snapshot moment."""
    vals = np.array([moment(s, q, which) for s in m.snapshots])
    return float(m.weights @ vals)


def spacetime_moment_richardson(m: SpaceTimeMeasure, q, which="velocity"):
    """(value, error estimate) where the estimate compares double-stride quadrature."""
    value = spacetime_moment(m, q, which)
    if len(m.snapshots) < 3:
        return value, np.nan
    coarse_snaps = m.snapshots[::2]
    if (len(m.snapshots) - 1) % 2 == 1:
        coarse_snaps = coarse_snaps + (m.snapshots[-1],)
    times = np.array([s.t for s in coarse_snaps])
    vals = np.array([moment(s, q, which) for s in coarse_snaps])
    coarse = float(trapezoid_weights(times) @ vals)
    return value, abs(value - coarse)


def morrey_constant(m: SpaceTimeMeasure) -> float:
    """Max over snapshots of the larger of the position/velocity second moments."""
    vals = [max(moment(s, 2, "position"), moment(s, 2, "velocity")) for s in m.snapshots]
    return float(max(vals))


def outside_mass(m: SpaceTimeMeasure, R) -> float:
    """Space-time mass of {t^2 + |x|^2 + |v|^2 > R^2} under the trapezoid weights."""
    R = float(R)
    if R <= 0:
        raise ValueError("R must be positive")
    fracs = np.empty(len(m.snapshots))
    for k, s in enumerate(m.snapshots):
        sq = s.t**2 + np.einsum("ij,ij->i", s.x, s.x) + np.einsum("ij,ij->i", s.v, s.v)
        fracs[k] = np.count_nonzero(sq > R**2) / s.n
    return float(m.weights @ fracs)
