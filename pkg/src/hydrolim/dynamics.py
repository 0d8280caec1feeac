"""Rescaled N-body dynamics: direct O(N^2) forces and velocity-Verlet integration.

The equations of motion for positions x_i and velocities u_i are

    dx_i/dt = u_i
    du_i/dt = -sum_{j != i} (1/sigma) Phi'(|x_i - x_j|/sigma) (x_i - x_j)/|x_i - x_j|

on the admissible set of pairwise-distinct positions.  Masses are 1/N and are
already divided out of the acceleration.  Forces are accumulated per particle
in ascending j (deterministic for any thread count); coincident pairs are a
hard DomainError, never softened.
"""

from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import DomainError
from .potentials import PotentialSpec

_FALLBACK_CHUNK = 2_000_000


def _as_points(arr, name):
    out = np.ascontiguousarray(arr, dtype=np.float64)
    if out.ndim != 2 or out.shape[1] != 3:
        raise ValueError(f"{name} must have shape (N, 3), got {out.shape}")
    if not np.isfinite(out).all():
        raise ValueError(f"{name} contains non-finite components")
    return out


@dataclass(frozen=True)
class SystemState:
    """Positions and velocities of N >= 2 particles at a time instant.

    Arrays are stored read-only; operations return new states.  Pairwise
    distinctness (membership in the admissible set) is not checked here --
    force and energy evaluations raise DomainError when it fails.
    """

    t: float
    positions: np.ndarray
    velocities: np.ndarray

    def __post_init__(self):
        pos = _as_points(self.positions, "positions")
        vel = _as_points(self.velocities, "velocities")
        if pos.shape[0] != vel.shape[0]:
            raise ValueError("positions and velocities must have equal length")
        if pos.shape[0] < 2:
            raise ValueError("a system needs at least N = 2 particles")
        if not np.isfinite(self.t):
            raise ValueError("time must be finite")
        pos.flags.writeable = False
        vel.flags.writeable = False
        object.__setattr__(self, "t", float(self.t))
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "velocities", vel)

    @property
    def n(self) -> int:
        return self.positions.shape[0]


@dataclass(frozen=True)
class Trajectory:
    """Uniformly strided samples of an integrated run.

    times[k] = k * stride * h; positions/velocities have shape (S, N, 3).
    sigma, potential and seed describe how the run was produced.
    """

    times: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    h: float
    stride: int
    sigma: float
    potential: PotentialSpec
    seed: int | None = None

    def __post_init__(self):
        times = np.ascontiguousarray(self.times, dtype=np.float64)
        if times.ndim != 1 or times.shape[0] < 2:
            raise ValueError("a trajectory needs at least two samples")
        if times[0] != 0.0:
            raise ValueError("first sample must be at t = 0")
        if not (np.diff(times) > 0).all():
            raise ValueError("sample times must be strictly increasing")
        pos = np.ascontiguousarray(self.positions, dtype=np.float64)
        vel = np.ascontiguousarray(self.velocities, dtype=np.float64)
        if pos.shape != vel.shape or pos.ndim != 3 or pos.shape[2] != 3:
            raise ValueError("positions/velocities must both have shape (S, N, 3)")
        if pos.shape[0] != times.shape[0]:
            raise ValueError("sample count mismatch between times and states")
        if not (np.isfinite(pos).all() and np.isfinite(vel).all()):
            raise ValueError("trajectory contains non-finite components")
        for arr in (times, pos, vel):
            arr.flags.writeable = False
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "velocities", vel)

    @property
    def n_samples(self) -> int:
        return self.times.shape[0]

    @property
    def n(self) -> int:
        return self.positions.shape[1]

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    def state(self, k: int) -> SystemState:
        return SystemState(float(self.times[k]), self.positions[k], self.velocities[k])


def _check_sigma(sigma):
    sigma = float(sigma)
    if not np.isfinite(sigma) or sigma <= 0.0:
        raise ValueError(f"sigma must be a positive scalar, got {sigma}")
    return sigma


def _raise_coincident(pos, t=None):
    diff = pos[:, None, :] - pos[None, :, :]
    r2 = np.einsum("ijk,ijk->ij", diff, diff)
    np.fill_diagonal(r2, np.inf)
    i, j = np.unravel_index(np.argmin(r2), r2.shape)
    when = "" if t is None else f" at t={t:.17g}"
    raise DomainError(
        f"state left the admissible set{when}: particles {min(i, j)} and "
        f"{max(i, j)} coincide" + ("" if t is None else "; reduce the step h")
    )


def _accel_custom(pos, potential, sigma):
    """Chunked numpy accelerations for callable potentials; returns (acc, min_dist)."""
    n = pos.shape[0]
    acc = np.empty((n, 3), dtype=np.float64)
    rows = max(1, _FALLBACK_CHUNK // n)
    min_dist = np.inf
    for lo in range(0, n, rows):
        hi = min(lo + rows, n)
        diff = pos[lo:hi, None, :] - pos[None, :, :]
        r = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        idx = np.arange(lo, hi)
        r[idx - lo, idx] = np.inf
        min_dist = min(min_dist, float(r.min()))
        if min_dist == 0.0:
            return acc, 0.0
        s = -potential.dphi(r / sigma) / (sigma * r)
        s[idx - lo, idx] = 0.0
        acc[lo:hi] = np.einsum("ij,ijk->ik", s, diff)
    return acc, min_dist


def _accelerations_raw(pos, potential, sigma):
    """Accelerations plus min pair distance on a raw (N, 3) array."""
    if potential.is_power_law:
        return _backend.accel_power_law(pos, sigma, potential.p)
    if potential.kind == "free":
        return np.zeros_like(pos), _backend.min_pair_distance(pos)
    return _accel_custom(pos, potential, sigma)


def pair_acceleration(potential: PotentialSpec, sigma, xi, xj):
    """Acceleration contribution on a particle at xi from one at xj.

    The single summand -(1/sigma) Phi'(|xi-xj|/sigma) (xi-xj)/|xi-xj|;
    antisymmetric under swapping the arguments.
    """
    sigma = _check_sigma(sigma)
    xi = np.asarray(xi, dtype=np.float64).reshape(3)
    xj = np.asarray(xj, dtype=np.float64).reshape(3)
    diff = xi - xj
    r = float(np.sqrt(diff @ diff))
    if r == 0.0:
        raise DomainError("state left the admissible set: coincident pair")
    return -float(potential.dphi(r / sigma)) / (sigma * r) * diff


def accelerations(state: SystemState, potential: PotentialSpec, sigma):
    """All N accelerations; raises DomainError naming a coincident pair."""
    sigma = _check_sigma(sigma)
    acc, min_dist = _accelerations_raw(state.positions, potential, sigma)
    if min_dist == 0.0:
        _raise_coincident(state.positions)
    return acc


def min_pair_distance(state: SystemState) -> float:
    """Min over unordered pairs of |x_i - x_j|; 0.0 flags a coincident pair."""
    return _backend.min_pair_distance(state.positions)


def max_acceleration_norm(state: SystemState, potential: PotentialSpec, sigma) -> float:
    """Max over particles of |du_i/dt|."""
    acc = accelerations(state, potential, sigma)
    return float(np.sqrt(np.einsum("ij,ij->i", acc, acc)).max())


def _interaction_sum(pos, potential, sigma):
    """Ordered-pair sum over i != j of Phi(|x_i - x_j|/sigma)."""
    if potential.kind == "free":
        return 0.0
    if potential.is_power_law:
        per_i = _backend.pair_potential_sums_power_law(pos, sigma, potential.p)
    else:
        n = pos.shape[0]
        per_i = np.empty(n, dtype=np.float64)
        rows = max(1, _FALLBACK_CHUNK // n)
        for lo in range(0, n, rows):
            hi = min(lo + rows, n)
            diff = pos[lo:hi, None, :] - pos[None, :, :]
            r = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
            idx = np.arange(lo, hi)
            r[idx - lo, idx] = np.inf
            if r.min() == 0.0:
                return np.inf
            vals = potential.phi(r / sigma)
            vals[idx - lo, idx] = 0.0
            per_i[lo:hi] = vals.sum(axis=1)
    return float(per_i.sum())


def total_energy(state: SystemState, potential: PotentialSpec, sigma) -> float:
    """E_N = (1/2N) sum_i |u_i|^2 + (1/N) sum_{i != j} Phi(|x_i - x_j|/sigma).

    The interaction sum runs over ordered pairs, counting each unordered pair
    twice.  This is the displayed energy of the model; the quantity conserved
    by the equations of motion is ``conserved_energy`` (half the interaction
    term), which drift diagnostics monitor.
    """
    sigma = _check_sigma(sigma)
    n = state.n
    kinetic = 0.5 / n * float(np.einsum("ij,ij->", state.velocities, state.velocities))
    pair = _interaction_sum(state.positions, potential, sigma)
    if not np.isfinite(pair):
        _raise_coincident(state.positions)
    return kinetic + pair / n


def conserved_energy(state: SystemState, potential: PotentialSpec, sigma) -> float:
    """Kinetic term plus the unordered-pair interaction sum (1/N) sum_{i<j} Phi.

    This is the Hamiltonian the equations of motion conserve exactly; the
    ordered-pair ``total_energy`` double-counts the interaction and drifts by
    the change of the pair term even along exact solutions.
    """
    sigma = _check_sigma(sigma)
    n = state.n
    kinetic = 0.5 / n * float(np.einsum("ij,ij->", state.velocities, state.velocities))
    pair = _interaction_sum(state.positions, potential, sigma)
    if not np.isfinite(pair):
        _raise_coincident(state.positions)
    return kinetic + 0.5 * pair / n


def step_verlet(state: SystemState, potential: PotentialSpec, sigma, h) -> SystemState:
    """One kick-drift-kick velocity-Verlet step of size h (h may be negative)."""
    sigma = _check_sigma(sigma)
    h = float(h)
    if h == 0.0 or not np.isfinite(h):
        raise ValueError(f"step size must be a nonzero finite number, got {h}")
    pos = state.positions
    vel = state.velocities
    acc, min_dist = _accelerations_raw(pos, potential, sigma)
    if min_dist == 0.0 and potential.kind != "free":
        _raise_coincident(pos, state.t)
    vel_half = vel + (0.5 * h) * acc
    new_pos = pos + h * vel_half
    new_acc, min_dist = _accelerations_raw(new_pos, potential, sigma)
    if min_dist == 0.0 and potential.kind != "free":
        _raise_coincident(new_pos, state.t + h)
    new_vel = vel_half + (0.5 * h) * new_acc
    return SystemState(state.t + h, new_pos, new_vel)


def default_step(T, d_min0, U, B_N, stride=1) -> float:
    """Default step size: h = min(1e-3 T, 0.1 d_min(0) / max(U, sqrt(B_N d_min(0)))).

    Rounded down so T/h is an integer multiple of stride: keeps per-step
    displacement well below the initial minimum separation.
    """
    T = float(T)
    if T <= 0:
        raise ValueError("horizon T must be positive")
    if stride < 1:
        raise ValueError("stride must be a positive integer")
    scale = max(float(U), np.sqrt(max(float(B_N), 0.0) * float(d_min0)))
    h_raw = 1e-3 * T
    if scale > 0.0 and d_min0 > 0.0:
        h_raw = min(h_raw, 0.1 * float(d_min0) / scale)
    n_steps = int(np.ceil(T / h_raw / stride)) * stride
    return T / n_steps


def integrate(ic: SystemState, potential: PotentialSpec, sigma, T, h, stride=1) -> Trajectory:
    """Velocity-Verlet integration over [0, T], sampling every stride-th step.

    T/h must be a positive integer multiple of stride.  The returned
    trajectory includes t = 0 and t = T and is bit-reproducible for
    identical inputs.
    """
    sigma = _check_sigma(sigma)
    T = float(T)
    h = float(h)
    stride = int(stride)
    if T <= 0 or h <= 0:
        raise ValueError("horizon T and step h must be positive")
    if stride < 1:
        raise ValueError("stride must be a positive integer")
    n_steps = int(round(T / h))
    if n_steps < 1 or abs(n_steps * h - T) > 1e-9 * max(T, 1.0):
        raise ValueError(f"T/h = {T / h} is not a positive integer")
    if n_steps % stride != 0:
        raise ValueError(f"T/h = {n_steps} is not a multiple of stride = {stride}")
    if ic.t != 0.0:
        raise ValueError("initial state must be at t = 0")

    pos = ic.positions
    vel = ic.velocities
    acc, min_dist = _accelerations_raw(pos, potential, sigma)
    if min_dist == 0.0 and potential.kind != "free":
        _raise_coincident(pos, 0.0)

    n_samples = n_steps // stride + 1
    times = np.empty(n_samples, dtype=np.float64)
    all_pos = np.empty((n_samples, ic.n, 3), dtype=np.float64)
    all_vel = np.empty((n_samples, ic.n, 3), dtype=np.float64)
    times[0] = 0.0
    all_pos[0] = pos
    all_vel[0] = vel

    half = 0.5 * h
    for k in range(1, n_steps + 1):
        vel_half = vel + half * acc
        pos = pos + h * vel_half
        acc, min_dist = _accelerations_raw(pos, potential, sigma)
        if min_dist == 0.0 and potential.kind != "free":
            _raise_coincident(pos, k * h)
        vel = vel_half + half * acc
        if k % stride == 0:
            s = k // stride
            times[s] = k * h
            all_pos[s] = pos
            all_vel[s] = vel

    return Trajectory(
        times=times,
        positions=all_pos,
        velocities=all_vel,
        h=h,
        stride=stride,
        sigma=sigma,
        potential=potential,
    )


def energy_drift(traj: Trajectory) -> float:
    """Max over samples of |H(t) - H(0)| / max(|H(0)|, 1) for the conserved H."""
    values = np.array(
        [conserved_energy(traj.state(k), traj.potential, traj.sigma) for k in range(traj.n_samples)]
    )
    return float(np.abs(values - values[0]).max() / max(abs(values[0]), 1.0))


def min_distance_profile(traj: Trajectory) -> np.ndarray:
    """Min pair distance at every sample."""
    return np.array([_backend.min_pair_distance(traj.positions[k]) for k in range(traj.n_samples)])
