"""Admissible initial configurations and the uniform-in-N scaling certificates.

A configuration is admissible for the scaling machinery when every pair has
positively aligned increments: (x_i(0)-x_j(0)) . (u_i(0)-u_j(0)) > 0.  From an
aligned configuration the acceleration bound B_N is chosen so that for every
pair, with X = x_i(0)-x_j(0) and V = u_i(0)-u_j(0),

    X.V - 2T|X| B - 3T^2|V| B - 2T^3 B^2 >= 0,

and the interaction scale sigma_N so that for every particle i

    -(1/sigma) sum_{j != i} Phi'(|X_ij|/sigma) < B_N.

Together these guarantee monotone pair separation, |du_i/dt| <= B_N,
|u_i(t)| <= U + B_N T and |x_i(t)| <= X + U T + B_N T^2 on [0, T].
"""

from dataclasses import dataclass

import numpy as np

from . import _backend
from .errors import DomainError
from .potentials import PotentialSpec

_CHUNK = 2_000_000

GENERAL_QUADRATIC = "general_quadratic"
BURST_CLOSED_FORM = "burst_closed_form"


def _pair_scan(positions, velocities):
    """Brute-force extrema over unordered pairs.

    Returns (d_min, align_min, align_argpair); align_argpair names the pair
    minimizing X_ij . U_ij.
    """
    n = positions.shape[0]
    d2_min = np.inf
    align_min = np.inf
    argpair = (0, 1)
    for i in range(n - 1):
        dx = positions[i] - positions[i + 1 :]
        dv = velocities[i] - velocities[i + 1 :]
        r2 = np.einsum("ij,ij->i", dx, dx)
        dots = np.einsum("ij,ij->i", dx, dv)
        d2_min = min(d2_min, float(r2.min()))
        k = int(np.argmin(dots))
        if dots[k] < align_min:
            align_min = float(dots[k])
            argpair = (i, i + 1 + k)
    return float(np.sqrt(d2_min)), align_min, argpair


@dataclass(frozen=True)
class InitialConfiguration:
    """Initial points plus the attained extrema the certificates are built from.

    X = sup |x_i(0)|, U = sup |u_i(0)|, d_min = min pair distance,
    align_min = min over pairs of X_ij . U_ij.  All four are recomputed from
    the point data on construction, never user-supplied.
    """

    positions: np.ndarray
    velocities: np.ndarray
    X: float
    U: float
    d_min: float
    align_min: float

    @classmethod
    def from_points(cls, positions, velocities) -> "InitialConfiguration":
        pos = np.ascontiguousarray(positions, dtype=np.float64)
        vel = np.ascontiguousarray(velocities, dtype=np.float64)
        if pos.ndim != 2 or pos.shape[1] != 3 or pos.shape != vel.shape:
            raise ValueError("positions and velocities must both have shape (N, 3)")
        if pos.shape[0] < 2:
            raise ValueError("a configuration needs at least N = 2 particles")
        if not (np.isfinite(pos).all() and np.isfinite(vel).all()):
            raise ValueError("configuration contains non-finite components")
        d_min = _backend.min_pair_distance(pos)
        if d_min == 0.0:
            diff = pos[:, None, :] - pos[None, :, :]
            r2 = np.einsum("ijk,ijk->ij", diff, diff)
            np.fill_diagonal(r2, np.inf)
            i, j = np.unravel_index(np.argmin(r2), r2.shape)
            raise DomainError(f"coincident positions: particles {min(i, j)} and {max(i, j)}")
        _, align_min, _ = _pair_scan(pos, vel)
        X = float(np.sqrt(np.einsum("ij,ij->i", pos, pos)).max())
        U = float(np.sqrt(np.einsum("ij,ij->i", vel, vel)).max())
        pos.flags.writeable = False
        vel.flags.writeable = False
        return cls(positions=pos, velocities=vel, X=X, U=U, d_min=d_min, align_min=align_min)

    @property
    def n(self) -> int:
        return self.positions.shape[0]


@dataclass(frozen=True)
class ScalingPlan:
    """Certified (B_N, sigma_N) for a horizon T, plus how they were obtained."""

    T: float
    B_N: float
    sigma_N: float
    mode: str
    certified: bool
    diagnostics: str


def gen_burst(positions, lam) -> InitialConfiguration:
    """Burst data u_i(0) = lam * x_i(0), lam > 0: aligned with
    align_min = lam * d_min^2."""
    lam = float(lam)
    if not np.isfinite(lam) or lam <= 0.0:
        raise ValueError(f"burst factor must be positive, got {lam}")
    pos = np.ascontiguousarray(positions, dtype=np.float64)
    return InitialConfiguration.from_points(pos, lam * pos)


def gen_planar(positions_2d, alpha, beta, gamma, signs) -> InitialConfiguration:
    """Planar positions (x, y, 0) with velocities (alpha, beta, +-gamma).

    Position increments have no z-component, so X_ij . U_ij = 0 for every
    pair: the configuration never certifies and plan construction refuses it.
    """
    pts = np.ascontiguousarray(positions_2d, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("positions_2d must have shape (N, 2)")
    signs = np.asarray(signs, dtype=np.float64).reshape(-1)
    if signs.shape[0] != pts.shape[0]:
        raise ValueError("signs must have one entry per point")
    if not np.isin(signs, (-1.0, 1.0)).all():
        raise ValueError("signs must be +1 or -1")
    n = pts.shape[0]
    pos = np.zeros((n, 3), dtype=np.float64)
    pos[:, :2] = pts
    vel = np.empty((n, 3), dtype=np.float64)
    vel[:, 0] = alpha
    vel[:, 1] = beta
    vel[:, 2] = signs * gamma
    return InitialConfiguration.from_points(pos, vel)


def gen_lifted(ab_pairs, c) -> InitialConfiguration:
    """Positions (a_i, b_i, 0) with velocities (a_i, b_i, c_i).

    X_ij . U_ij = |(a_i - a_j, b_i - b_j)|^2 > 0 whenever the (a, b) pairs
    are distinct.
    """
    ab = np.ascontiguousarray(ab_pairs, dtype=np.float64)
    if ab.ndim != 2 or ab.shape[1] != 2:
        raise ValueError("ab_pairs must have shape (N, 2)")
    c = np.asarray(c, dtype=np.float64).reshape(-1)
    if c.shape[0] != ab.shape[0]:
        raise ValueError("c must have one entry per point")
    n = ab.shape[0]
    pos = np.zeros((n, 3), dtype=np.float64)
    pos[:, :2] = ab
    vel = np.empty((n, 3), dtype=np.float64)
    vel[:, :2] = ab
    vel[:, 2] = c
    return InitialConfiguration.from_points(pos, vel)


def gen_lattice_cloud(n_points, alpha, jitter=0.0, seed=0) -> np.ndarray:
    """N points in the unit box on a cubic lattice of pitch alpha * N^(-1/3).

    The lattice has m = floor(1/pitch) sites per side, centered in [0, 1]^3;
    N of the m^3 sites are selected by a seeded uniform permutation, with one
    adjacent pair always included so the minimum distance is attained at
    exactly the pitch (before jitter).  Each point is then displaced by a
    uniform vector of length < jitter * pitch, keeping the nearest-neighbor
    distance >= alpha * N^(-1/3) * (1 - 2 * jitter).  Deterministic in seed.
    """
    n_points = int(n_points)
    if n_points < 2:
        raise ValueError("need at least 2 points")
    alpha = float(alpha)
    if not np.isfinite(alpha) or alpha <= 0.0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    jitter = float(jitter)
    if not 0.0 <= jitter < 0.49:
        raise ValueError(f"jitter must lie in [0, 0.49), got {jitter}")
    pitch = alpha * n_points ** (-1.0 / 3.0)
    m = int(np.floor(1.0 / pitch + 1e-12))
    if m < 1 or m**3 < n_points:
        raise ValueError(
            f"infeasible alpha: pitch {pitch:.6g} admits only {max(m, 0)**3} lattice "
            f"sites in the unit box, fewer than N = {n_points}"
        )
    rng = np.random.default_rng(seed)
    total = m**3
    if total == n_points:
        chosen = np.arange(total)
    else:
        # Sites 0 and 1 are lattice neighbors along the last axis: forcing
        # them in guarantees the minimum pair distance equals the pitch.
        rest = rng.permutation(total - 2) + 2
        chosen = np.sort(np.concatenate([[0, 1], rest[: n_points - 2]]))
    k = chosen % m
    j = (chosen // m) % m
    i = chosen // (m * m)
    offset = 0.5 * (1.0 - (m - 1) * pitch)
    points = offset + pitch * np.column_stack([i, j, k]).astype(np.float64)
    if jitter > 0.0:
        disp = rng.uniform(-1.0, 1.0, size=(n_points, 3))
        bad = np.einsum("ij,ij->i", disp, disp) > 1.0
        while bad.any():
            disp[bad] = rng.uniform(-1.0, 1.0, size=(int(bad.sum()), 3))
            bad = np.einsum("ij,ij->i", disp, disp) > 1.0
        points = points + jitter * pitch * disp
    return points


def pair_quadratic_root(T, abs_x, abs_v, dot):
    """Largest B with dot - 2T|X|B - 3T^2|V|B - 2T^3 B^2 >= 0, elementwise.

    Written as 2c / (b + sqrt(b^2 + 8 T^3 c)) with b = 2T|X| + 3T^2|V| and
    c = dot, which is stable for small c.
    """
    b = 2.0 * T * abs_x + 3.0 * T**2 * abs_v
    c = dot
    return 2.0 * c / (b + np.sqrt(b * b + 8.0 * T**3 * c))


def compute_B_N(ic: InitialConfiguration, T, mode=GENERAL_QUADRATIC) -> float:
    """Acceleration bound satisfying the pair condition for every pair on [0, T].

    general_quadratic: per pair, the positive root of
    2T^3 B^2 + (2T|X_ij| + 3T^2|U_ij|) B - X_ij.U_ij = 0, minimized over
    pairs (equality on the binding pair).  burst_closed_form: the
    conservative closed form align_min / (4XT + 6UT^2 + 2T^3).
    """
    T = float(T)
    if T <= 0:
        raise ValueError("horizon T must be positive")
    if ic.align_min <= 0.0:
        _, amin, pair = _pair_scan(ic.positions, ic.velocities)
        raise ValueError(
            f"alignment violated: min X_ij.U_ij = {amin:.6g} <= 0 at pair {pair}; "
            "the scaling certificates need positively aligned increments"
        )
    if mode == BURST_CLOSED_FORM:
        return ic.align_min / (4.0 * ic.X * T + 6.0 * ic.U * T**2 + 2.0 * T**3)
    if mode != GENERAL_QUADRATIC:
        raise ValueError(f"unknown B_N mode {mode!r}")
    best = np.inf
    for i in range(ic.n - 1):
        dx = ic.positions[i] - ic.positions[i + 1 :]
        dv = ic.velocities[i] - ic.velocities[i + 1 :]
        abs_x = np.sqrt(np.einsum("ij,ij->i", dx, dx))
        abs_v = np.sqrt(np.einsum("ij,ij->i", dv, dv))
        dots = np.einsum("ij,ij->i", dx, dv)
        roots = pair_quadratic_root(T, abs_x, abs_v, dots)
        best = min(best, float(roots.min()))
    # The exact root meets the binding pair with equality; shave a relative
    # 1e-12 so the zero-slack floating-point recheck cannot land below zero.
    return best * (1.0 - 1e-12)


def certificate_sums(ic: InitialConfiguration, sigma, potential: PotentialSpec) -> np.ndarray:
    """Per-particle sums -(1/sigma) sum_{j != i} Phi'(|X_ij|/sigma)."""
    sigma = float(sigma)
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    pos = ic.positions
    if potential.is_power_law:
        return _backend.force_sums_power_law(pos, sigma, potential.p)
    n = pos.shape[0]
    out = np.empty(n, dtype=np.float64)
    rows = max(1, _CHUNK // n)
    for lo in range(0, n, rows):
        hi = min(lo + rows, n)
        diff = pos[lo:hi, None, :] - pos[None, :, :]
        r = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        idx = np.arange(lo, hi)
        r[idx - lo, idx] = np.inf
        vals = -potential.dphi(r / sigma) / sigma
        vals[idx - lo, idx] = 0.0
        out[lo:hi] = vals.sum(axis=1)
    return out


def compute_sigma_N(ic: InitialConfiguration, B_N, potential: PotentialSpec) -> float:
    """Interaction scale keeping every certificate sum strictly below B_N.

    Power law: the closed form sigma = (B_N/N)^(1/(p-1)) * d_min^(p/(p-1)).
    Otherwise: bisection for the largest admissible sigma on
    [1e-300 * d_min, d_min], 200 iterations.  The returned sigma is always
    re-verified against the strict inequality by direct evaluation.
    """
    B_N = float(B_N)
    if not np.isfinite(B_N) or B_N <= 0.0:
        raise ValueError(f"B_N must be positive, got {B_N}")
    if potential.kind == "free":
        raise ValueError("the free potential has no interaction scale")
    if potential.is_power_law:
        p = potential.p
        sigma = (B_N / ic.n) ** (1.0 / (p - 1.0)) * ic.d_min ** (p / (p - 1.0))
    else:
        lo, hi = 1e-300 * ic.d_min, ic.d_min
        if not certificate_sums(ic, lo, potential).max() < B_N:
            raise ValueError(
                "no admissible sigma found: the certificate sum exceeds B_N even "
                f"at sigma = {lo:.6g}"
            )
        if certificate_sums(ic, hi, potential).max() < B_N:
            sigma = hi
        else:
            for _ in range(200):
                mid = np.sqrt(lo * hi)  # geometric: the bracket spans ~300 decades
                if certificate_sums(ic, mid, potential).max() < B_N:
                    lo = mid
                else:
                    hi = mid
            sigma = lo
    worst = float(certificate_sums(ic, sigma, potential).max())
    if not worst < B_N:
        raise ValueError(
            f"no admissible sigma found below sigma_max = {ic.d_min:.6g}: "
            f"certificate sum {worst:.6g} >= B_N = {B_N:.6g} at sigma = {sigma:.6g}"
        )
    return float(sigma)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class PlanReport:
    checks: tuple

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def summary(self) -> str:
        lines = []
        for c in self.checks:
            lines.append(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.detail}")
        return "\n".join(lines)


def verify_plan(ic: InitialConfiguration, plan: ScalingPlan, potential: PotentialSpec) -> PlanReport:
    """Brute-force re-check of every certificate condition; never raises."""
    checks = []

    d_min, align_min, worst_pair = _pair_scan(ic.positions, ic.velocities)
    checks.append(
        CheckResult(
            "alignment",
            align_min > 0.0,
            f"min X_ij.U_ij = {align_min:.6g} at pair {worst_pair}",
        )
    )

    T, B = plan.T, plan.B_N
    n = ic.n
    worst_val = np.inf
    worst_bpair = (0, 1)
    for i in range(n - 1):
        dx = ic.positions[i] - ic.positions[i + 1 :]
        dv = ic.velocities[i] - ic.velocities[i + 1 :]
        abs_x = np.sqrt(np.einsum("ij,ij->i", dx, dx))
        abs_v = np.sqrt(np.einsum("ij,ij->i", dv, dv))
        dots = np.einsum("ij,ij->i", dx, dv)
        vals = dots - 2.0 * T * abs_x * B - 3.0 * T**2 * abs_v * B - 2.0 * T**3 * B * B
        k = int(np.argmin(vals))
        if vals[k] < worst_val:
            worst_val = float(vals[k])
            worst_bpair = (i, i + 1 + k)
    checks.append(
        CheckResult(
            "pair_condition_at_B_N",
            worst_val >= 0.0,
            f"worst margin {worst_val:.6g} at pair {worst_bpair} (B_N = {B:.6g})",
        )
    )

    sums = certificate_sums(ic, plan.sigma_N, potential)
    i_worst = int(np.argmax(sums))
    checks.append(
        CheckResult(
            "interaction_scale_at_sigma_N",
            float(sums[i_worst]) < B,
            f"max certificate sum {float(sums[i_worst]):.6g} at particle {i_worst} "
            f"(strict bound B_N = {B:.6g}, sigma_N = {plan.sigma_N:.6g})",
        )
    )

    # Monotone interaction: the separation argument needs the force magnitude
    # -Phi' to be nonincreasing in the separation (for the power law, -Phi' =
    # q^(-p) decreases even though Phi' itself increases toward zero).
    qs = np.geomspace(0.5 * d_min / plan.sigma_N, 4.0 * max(ic.X, d_min) / plan.sigma_N, 256)
    force = -potential.dphi(qs)
    violation = float(np.diff(force).max()) if force.size > 1 else 0.0
    checks.append(
        CheckResult(
            "force_nonincreasing",
            violation <= 0.0,
            f"max increase of -Phi' over sampled separations: {violation:.6g}",
        )
    )
    return PlanReport(checks=tuple(checks))


def build_plan(ic: InitialConfiguration, T, potential: PotentialSpec, mode=GENERAL_QUADRATIC) -> ScalingPlan:
    """Compute B_N and sigma_N for the horizon and re-verify the certificate."""
    B = compute_B_N(ic, T, mode=mode)
    sigma = compute_sigma_N(ic, B, potential)
    draft = ScalingPlan(T=float(T), B_N=B, sigma_N=sigma, mode=mode, certified=False, diagnostics="")
    report = verify_plan(ic, draft, potential)
    return ScalingPlan(
        T=float(T),
        B_N=B,
        sigma_N=sigma,
        mode=mode,
        certified=report.all_passed,
        diagnostics=report.summary(),
    )
