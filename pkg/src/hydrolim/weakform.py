"""Test functions, interaction terms, and weak-form residuals.

Test functions are separable compactly supported bumps

    phi(t, x) = A * b((t - t0)/rho_t) * b(|x - x0|/rho_x),
    b(s) = exp(1 - 1/(1 - s^2)) for |s| < 1, else 0,

with analytic derivatives that vanish identically outside the support.  The
discrete residuals integrate the N-system identities over sampled
trajectories (they vanish in the continuum, so the values are pure
discretization error); the limit residuals evaluate the macroscopic
continuity and momentum equations on coarse-grained fields.
"""

from dataclasses import dataclass

import numpy as np

from .dynamics import Trajectory, _accelerations_raw, _raise_coincident
from .fields import CoarseFields
from .measures import trapezoid_weights
from .potentials import PotentialSpec


@dataclass(frozen=True)
class TestFunction:
    """Smooth bump supported on |t - t0| < rho_t, |x - x0| < rho_x."""

    t0: float
    x0: np.ndarray
    rho_t: float
    rho_x: float
    amplitude: float = 1.0

    def __post_init__(self):
        x0 = np.ascontiguousarray(self.x0, dtype=np.float64).reshape(3)
        x0.flags.writeable = False
        object.__setattr__(self, "x0", x0)
        object.__setattr__(self, "t0", float(self.t0))
        object.__setattr__(self, "rho_t", float(self.rho_t))
        object.__setattr__(self, "rho_x", float(self.rho_x))
        object.__setattr__(self, "amplitude", float(self.amplitude))
        if self.rho_t <= 0 or self.rho_x <= 0:
            raise ValueError("test-function radii must be positive")

    def check_horizon(self, T: float):
        if self.t0 - self.rho_t < 0.0 or self.t0 + self.rho_t > T:
            raise ValueError(
                f"test-function time support ({self.t0 - self.rho_t:.6g}, "
                f"{self.t0 + self.rho_t:.6g}) is not contained in (0, {T:.6g})"
            )

    def check_box(self, lo, hi):
        lo = np.asarray(lo, dtype=np.float64)
        hi = np.asarray(hi, dtype=np.float64)
        if ((self.x0 - self.rho_x) < lo).any() or ((self.x0 + self.rho_x) > hi).any():
            raise ValueError("test-function space support extends past the grid box")


def _bump(s2):
    """b as a function of s^2, zero for s^2 >= 1."""
    out = np.zeros_like(s2)
    inside = s2 < 1.0
    with np.errstate(over="ignore", under="ignore"):
        out[inside] = np.exp(1.0 - 1.0 / (1.0 - s2[inside]))
    return out


def eval_bump_batch(tf: TestFunction, t: float, x):
    """phi, d phi/dt and grad phi at one time for many points.

    Returns (phi (N,), dphi_dt (N,), grad (N, 3)); all exactly zero outside
    the support.  The gradient is computed in the smooth form
    -2 A b(st) b(sx) (x - x0) / (rho_x^2 (1 - sx^2)^2), regular at x = x0.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    st = (float(t) - tf.t0) / tf.rho_t
    st2 = st * st
    n = x.shape[0]
    if st2 >= 1.0:
        return np.zeros(n), np.zeros(n), np.zeros((n, 3))
    bt = float(np.exp(1.0 - 1.0 / (1.0 - st2)))
    dbt = -2.0 * st / (1.0 - st2) ** 2 * bt

    dx = x - tf.x0
    sx2 = np.einsum("ij,ij->i", dx, dx) / tf.rho_x**2
    bx = _bump(sx2)
    phi = tf.amplitude * bt * bx
    dphi_dt = tf.amplitude * (dbt / tf.rho_t) * bx
    grad = np.zeros((n, 3))
    inside = sx2 < 1.0
    if inside.any():
        coef = -2.0 * tf.amplitude * bt * bx[inside] / (tf.rho_x**2 * (1.0 - sx2[inside]) ** 2)
        grad[inside] = coef[:, None] * dx[inside]
    return phi, dphi_dt, grad


def eval_bump(tf: TestFunction, t, x):
    """Scalar-point variant of eval_bump_batch."""
    phi, dphi_dt, grad = eval_bump_batch(tf, float(t), np.asarray(x, dtype=np.float64).reshape(1, 3))
    return float(phi[0]), float(dphi_dt[0]), grad[0]


def _halton(index, base):
    f, r = 1.0, 0.0
    while index > 0:
        f /= base
        r += f * (index % base)
        index //= base
    return r


def default_test_functions(lo, hi, T, count=8, radius_frac=0.25, amplitude=1.0):
    """Deterministic bump set: Halton centers inside the space-time box.

    Radii are radius_frac of the horizon (time) and of the smallest box
    extent (space); centers are placed so every support stays inside
    (0, T) x box.
    """
    lo = np.asarray(lo, dtype=np.float64).reshape(3)
    hi = np.asarray(hi, dtype=np.float64).reshape(3)
    T = float(T)
    if not 0.0 < radius_frac < 0.5:
        raise ValueError("radius_frac must lie in (0, 0.5)")
    if count < 1:
        raise ValueError("count must be positive")
    extent = hi - lo
    if (extent <= 0).any() or T <= 0:
        raise ValueError("box and horizon must have positive extent")
    rho_t = radius_frac * T
    rho_x = radius_frac * float(extent.min())
    tfs = []
    for k in range(1, count + 1):
        u = np.array([_halton(k, b) for b in (2, 3, 5, 7)])
        t0 = rho_t + u[0] * (T - 2.0 * rho_t)
        x0 = lo + rho_x + u[1:] * (extent - 2.0 * rho_x)
        tfs.append(TestFunction(t0=t0, x0=x0, rho_t=rho_t, rho_x=rho_x, amplitude=amplitude))
    return tfs


def sample_accelerations(traj: Trajectory, potential: PotentialSpec, sigma) -> np.ndarray:
    """Accelerations at every sample, shape (S, N, 3)."""
    out = np.empty_like(traj.positions)
    for k in range(traj.n_samples):
        acc, min_dist = _accelerations_raw(traj.positions[k], potential, sigma)
        if min_dist == 0.0 and potential.kind != "free":
            _raise_coincident(traj.positions[k], float(traj.times[k]))
        out[k] = acc
    return out


def interaction_term(state, potential: PotentialSpec, sigma, tf: TestFunction, acc=None):
    """I(t, phi) = (1/N) sum_i phi(t, x_i) du_i/dt; |I| <= sup|phi| max|a_i|."""
    if acc is None:
        acc, min_dist = _accelerations_raw(state.positions, potential, sigma)
        if min_dist == 0.0 and potential.kind != "free":
            _raise_coincident(state.positions, state.t)
    phi, _, _ = eval_bump_batch(tf, state.t, state.positions)
    return (phi @ acc) / state.n


def _interaction_samples(traj, potential, sigma, tf, accelerations=None):
    if accelerations is None:
        accelerations = sample_accelerations(traj, potential, sigma)
    vals = np.empty((traj.n_samples, 3))
    for k in range(traj.n_samples):
        phi, _, _ = eval_bump_batch(tf, float(traj.times[k]), traj.positions[k])
        vals[k] = (phi @ accelerations[k]) / traj.n
    return vals


def interaction_functional(traj: Trajectory, potential: PotentialSpec, sigma, tf: TestFunction, accelerations=None):
    """Time integral of the interaction term over [0, T] (trapezoid)."""
    tf.check_horizon(traj.horizon)
    vals = _interaction_samples(traj, potential, sigma, tf, accelerations)
    return trapezoid_weights(traj.times) @ vals


def sup_interaction_norm(traj, potential, sigma, tf, accelerations=None) -> float:
    """sup over samples of |I(t, phi)|."""
    tf.check_horizon(traj.horizon)
    vals = _interaction_samples(traj, potential, sigma, tf, accelerations)
    return float(np.sqrt(np.einsum("ij,ij->i", vals, vals)).max())


def discrete_continuity_residual(traj: Trajectory, tf: TestFunction) -> float:
    """Trapezoid-in-t of (1/N) sum_i [dphi/dt + grad phi . u_i].

    The exact value is zero (total derivative of a compactly supported
    function along the flow), so the result is pure discretization error.
    """
    tf.check_horizon(traj.horizon)
    vals = np.empty(traj.n_samples)
    for k in range(traj.n_samples):
        phi_t, dphi_dt, grad = eval_bump_batch(tf, float(traj.times[k]), traj.positions[k])
        vals[k] = (dphi_dt.sum() + np.einsum("ij,ij->", grad, traj.velocities[k])) / traj.n
    return float(trapezoid_weights(traj.times) @ vals)


def discrete_momentum_residual(traj: Trajectory, potential: PotentialSpec, sigma, tf: TestFunction, accelerations=None):
    """Trapezoid-in-t of (1/N) sum_i [dphi/dt u_i + (grad phi . u_i) u_i]
    plus the interaction functional; zero in the continuum."""
    tf.check_horizon(traj.horizon)
    vals = np.empty((traj.n_samples, 3))
    for k in range(traj.n_samples):
        _, dphi_dt, grad = eval_bump_batch(tf, float(traj.times[k]), traj.positions[k])
        u = traj.velocities[k]
        vals[k] = (dphi_dt @ u + np.einsum("ij,ij->i", grad, u) @ u) / traj.n
    transport = trapezoid_weights(traj.times) @ vals
    return transport + interaction_functional(traj, potential, sigma, tf, accelerations)


def limit_continuity_residual(fields: CoarseFields, tf: TestFunction) -> float:
    """Cell-center midpoint evaluation of the macroscopic continuity equation."""
    grid = fields.grid
    tf.check_horizon(float(grid.t_edges[-1]))
    tf.check_box(grid.lo, grid.hi)
    centers = grid.cell_centers().reshape(-1, 3)
    dt = np.diff(grid.t_edges)
    total = 0.0
    for b, t_mid in enumerate(grid.t_centers):
        mass = fields.mass[b].reshape(-1)
        occ = mass > 0
        if not occ.any():
            continue
        _, dphi_dt, grad = eval_bump_batch(tf, float(t_mid), centers[occ])
        ubar = fields.mean_velocity[b].reshape(-1, 3)[occ]
        total += dt[b] * float(mass[occ] @ (dphi_dt + np.einsum("ij,ij->i", grad, ubar)))
    return total


def limit_momentum_residual(fields: CoarseFields, tf: TestFunction, interaction=None):
    """Cell-center midpoint evaluation of the macroscopic momentum equation.

    Computes sum of mass * [dphi/dt ubar + (grad phi . ubar) ubar + S grad phi]
    minus the supplied interaction vector (zero by default, the regime where
    the interaction functional vanishes with N).
    """
    grid = fields.grid
    tf.check_horizon(float(grid.t_edges[-1]))
    tf.check_box(grid.lo, grid.hi)
    if interaction is None:
        interaction = np.zeros(3)
    interaction = np.asarray(interaction, dtype=np.float64).reshape(3)
    centers = grid.cell_centers().reshape(-1, 3)
    dt = np.diff(grid.t_edges)
    total = np.zeros(3)
    for b, t_mid in enumerate(grid.t_centers):
        mass = fields.mass[b].reshape(-1)
        occ = mass > 0
        if not occ.any():
            continue
        _, dphi_dt, grad = eval_bump_batch(tf, float(t_mid), centers[occ])
        ubar = fields.mean_velocity[b].reshape(-1, 3)[occ]
        stress = fields.fluct_tensor[b].reshape(-1, 3, 3)[occ]
        m = mass[occ]
        term = (
            dphi_dt[:, None] * ubar
            + np.einsum("ij,ij->i", grad, ubar)[:, None] * ubar
            + np.einsum("ijk,ik->ij", stress, grad)
        )
        total += dt[b] * (m @ term)
    return total - interaction


def interaction_decay(sweep) -> float:
    """Least-squares slope of log sup|I| against log N over a sweep.

    `sweep` is a sequence of (N, sup_t |I^{(N)}(t, phi)|) pairs, all positive,
    at least three of them.
    """
    pts = [(float(n), float(v)) for n, v in sweep]
    if len(pts) < 3:
        raise ValueError("interaction decay fit needs at least 3 sweep points")
    if any(n <= 0 or v <= 0 for n, v in pts):
        raise ValueError("sweep entries must be positive")
    log_n = np.log([n for n, _ in pts])
    log_v = np.log([v for _, v in pts])
    slope, _ = np.polyfit(log_n, log_v, 1)
    return float(slope)


@dataclass(frozen=True)
class ResidualRow:
    """Residual diagnostics for one test function."""

    tf: TestFunction
    disc_continuity: float
    disc_momentum: np.ndarray
    interaction: np.ndarray  # time integral of I(t, phi)
    sup_interaction: float
    limit_continuity: float
    limit_momentum: np.ndarray


@dataclass(frozen=True)
class ResidualReport:
    rows: tuple
    h: float
    stride: int
    grid_descriptor: str
