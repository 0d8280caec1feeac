import numpy as np
import pytest

import hydrolim as hl
from hydrolim.errors import DomainError
from hydrolim.initcond import (
    BURST_CLOSED_FORM,
    GENERAL_QUADRATIC,
    ScalingPlan,
    certificate_sums,
    compute_B_N,
    compute_sigma_N,
)

P2 = hl.PotentialSpec.power_law(2.0)


def brute_pair_extrema(pos, vel):
    """Independent pair-scan oracle for d_min and align_min."""
    n = pos.shape[0]
    d_min, align_min = np.inf, np.inf
    for i in range(n):
        for j in range(i + 1, n):
            d_min = min(d_min, np.linalg.norm(pos[i] - pos[j]))
            align_min = min(align_min, float((pos[i] - pos[j]) @ (vel[i] - vel[j])))
    return d_min, align_min


def pair_condition_values(ic, T, B):
    vals = []
    for i in range(ic.n):
        for j in range(i + 1, ic.n):
            X = ic.positions[i] - ic.positions[j]
            V = ic.velocities[i] - ic.velocities[j]
            vals.append(
                X @ V
                - 2 * T * np.linalg.norm(X) * B
                - 3 * T**2 * np.linalg.norm(V) * B
                - 2 * T**3 * B**2
            )
    return np.array(vals)


# ---------------------------------------------------------------- generators

def test_gen_burst_two_points():
    ic = hl.gen_burst([[1, 0, 0], [-1, 0, 0]], 1.0)
    np.testing.assert_array_equal(ic.velocities, [[1, 0, 0], [-1, 0, 0]])
    assert ic.align_min == 4.0  # lam * |X_12|^2
    assert ic.d_min == 2.0
    assert ic.X == 1.0 and ic.U == 1.0


def test_gen_burst_doubling_lambda():
    pos = np.random.default_rng(0).uniform(0, 1, (10, 3))
    ic1 = hl.gen_burst(pos, 1.0)
    ic2 = hl.gen_burst(pos, 2.0)
    np.testing.assert_array_equal(ic2.velocities, 2 * ic1.velocities)
    assert ic2.align_min == 2 * ic1.align_min


@pytest.mark.parametrize("lam", [1.0, 2.0, 0.5])
def test_gen_burst_alignment_identity(lam):
    # align_min = lam * d_min^2: exact for dyadic lam, tight otherwise.
    pos = np.random.default_rng(1).uniform(0, 1, (20, 3))
    ic = hl.gen_burst(pos, lam)
    assert ic.align_min == pytest.approx(lam * ic.d_min**2, rel=1e-12)
    d_brute, a_brute = brute_pair_extrema(ic.positions, ic.velocities)
    assert ic.d_min == pytest.approx(d_brute, rel=1e-15)
    assert ic.align_min == pytest.approx(a_brute, rel=1e-15)


def test_gen_burst_rejects_coincident_or_bad_lambda():
    with pytest.raises(DomainError):
        hl.gen_burst([[0, 0, 0], [0, 0, 0]], 1.0)
    with pytest.raises(ValueError):
        hl.gen_burst([[0, 0, 0], [1, 0, 0]], -1.0)


def test_gen_planar_always_degenerate():
    # Position increments live in the plane, velocity increments off it:
    # X_ij . U_ij = 0 for equal and differing signs alike.
    ic = hl.gen_planar([[0, 0], [1, 0]], 1.0, 0.0, 0.7, [1, 1])
    assert ic.align_min == 0.0
    ic = hl.gen_planar([[0, 0], [1, 0]], 1.0, 0.0, 0.7, [1, -1])
    assert ic.align_min == 0.0
    with pytest.raises(ValueError, match="alignment violated"):
        compute_B_N(ic, 1.0)


def test_gen_lifted_examples():
    ic = hl.gen_lifted([[0, 0], [1, 0]], [5.0, -7.0])
    assert ic.align_min == 1.0  # |(a,b) increment|^2, third components ignored
    # unit triangle: all pair alignments equal the squared side length
    tri = [[0, 0], [1, 0], [0.5, np.sqrt(3) / 2]]
    ic3 = hl.gen_lifted(tri, [1.0, 2.0, 3.0])
    assert ic3.align_min == pytest.approx(1.0, rel=1e-12)
    with pytest.raises(DomainError):
        hl.gen_lifted([[0, 0], [0, 0]], [1.0, 2.0])


def test_gen_lifted_certifiable():
    ic = hl.gen_lifted([[0, 0], [1, 0], [0, 1]], [0.3, -0.4, 0.9])
    plan = hl.build_plan(ic, 1.0, P2)
    assert plan.certified


# ---------------------------------------------------------------- lattice cloud

def test_lattice_cloud_perfect_cube():
    pts = hl.gen_lattice_cloud(8, 1.0, 0.0, seed=0)
    d_min, _ = brute_pair_extrema(pts, np.zeros_like(pts))
    assert d_min == pytest.approx(1.0 * 8 ** (-1.0 / 3.0), rel=1e-15)
    assert d_min == pytest.approx(0.5, rel=1e-15)
    assert (pts >= 0).all() and (pts <= 1).all()


def test_lattice_cloud_regular_lattice_when_unjittered():
    pts = hl.gen_lattice_cloud(27, 1.0, 0.0, seed=0)
    pitch = 27 ** (-1.0 / 3.0)
    rel = (pts - pts.min(axis=0)) / pitch
    np.testing.assert_allclose(rel, np.round(rel), atol=1e-9)


def test_lattice_cloud_partial_fill_attains_pitch():
    # N not a perfect cube: selection is seeded-uniform, with one adjacent
    # pair forced so the minimum distance is exactly the pitch.
    pts = hl.gen_lattice_cloud(100, 0.5, 0.0, seed=4)
    pitch = 0.5 * 100 ** (-1.0 / 3.0)
    d_min, _ = brute_pair_extrema(pts, np.zeros_like(pts))
    assert d_min == pytest.approx(pitch, rel=1e-12)
    assert (pts >= 0).all() and (pts <= 1).all()


def test_lattice_cloud_determinism_and_seed_sensitivity():
    a = hl.gen_lattice_cloud(50, 0.5, 0.2, seed=7)
    b = hl.gen_lattice_cloud(50, 0.5, 0.2, seed=7)
    c = hl.gen_lattice_cloud(50, 0.5, 0.2, seed=8)
    assert (a == b).all()
    assert not (a == c).all()


def test_lattice_cloud_jitter_floor():
    jitter = 0.3
    pts = hl.gen_lattice_cloud(64, 0.8, jitter, seed=5)
    pitch = 0.8 * 64 ** (-1.0 / 3.0)
    d_min, _ = brute_pair_extrema(pts, np.zeros_like(pts))
    assert d_min >= pitch * (1 - 2 * jitter)


def test_lattice_cloud_infeasible_alpha():
    with pytest.raises(ValueError, match="infeasible alpha"):
        hl.gen_lattice_cloud(8, 3.0, 0.0, seed=0)
    with pytest.raises(ValueError):
        hl.gen_lattice_cloud(8, 1.0, 0.6, seed=0)  # jitter out of range


# ---------------------------------------------------------------- B_N

def test_b_n_burst_closed_form_hand_value():
    ic = hl.gen_burst([[0.9, 0, 0], [1.0, 0, 0]], 1.0)
    assert (ic.X, ic.U) == (1.0, 1.0)
    B = compute_B_N(ic, 1.0, mode=BURST_CLOSED_FORM)
    assert B == pytest.approx(0.01 / 12.0, rel=1e-12)


def test_b_n_general_quadratic_dominates_burst():
    ic = hl.gen_burst([[0.9, 0, 0], [1.0, 0, 0]], 1.0)
    b_burst = compute_B_N(ic, 1.0, mode=BURST_CLOSED_FORM)
    b_gen = compute_B_N(ic, 1.0, mode=GENERAL_QUADRATIC)
    assert b_gen >= b_burst
    # oracle: exact positive root of 2B^2 + 0.5B - 0.01 = 0
    assert b_gen == pytest.approx((-0.5 + np.sqrt(0.25 + 0.08)) / 4.0, rel=1e-11)
    # feasibility scan over a B grid: everything below b_gen satisfies the
    # pair condition, and inflating b_gen violates it
    for b in np.linspace(0.1 * b_gen, b_gen, 7):
        assert pair_condition_values(ic, 1.0, b).min() >= 0.0
    assert pair_condition_values(ic, 1.0, b_gen * (1 + 1e-6)).min() < 0.0


def test_b_n_equality_on_binding_pair():
    pts = hl.gen_lattice_cloud(27, 0.9, 0.05, seed=2)
    ic = hl.gen_burst(pts, 1.0)
    B = compute_B_N(ic, 1.0)
    vals = pair_condition_values(ic, 1.0, B)
    assert vals.min() >= 0.0
    assert vals.min() <= 1e-11 * ic.align_min  # binding pair sits at equality
    assert pair_condition_values(ic, 1.0, B * (1 + 1e-6)).min() < 0.0


def test_b_n_large_horizon_scaling():
    # For large T the 3 T^2 |U_ij| B term of the pair condition dominates the
    # quadratic one (B has already decayed), so B ~ X.U / (3 T^2 |U|): order
    # T^(-2).  Verified against the exact root via the feasibility property.
    ic = hl.gen_burst([[0.9, 0, 0], [1.0, 0, 0]], 1.0)
    b1 = compute_B_N(ic, 1e3)
    b2 = compute_B_N(ic, 1e4)
    assert b1 / b2 == pytest.approx(100.0, rel=1e-2)
    for T, b in ((1e3, b1), (1e4, b2)):
        assert pair_condition_values(ic, T, b).min() >= 0.0
        assert pair_condition_values(ic, T, b * (1 + 1e-6)).min() < 0.0


# ---------------------------------------------------------------- sigma_N

def test_sigma_closed_form_hand_value():
    ic = hl.gen_burst([[0.9, 0, 0], [1.0, 0, 0]], 1.0)
    B = 0.01 / 12.0
    sigma = compute_sigma_N(ic, B, P2)
    assert sigma == pytest.approx((B / 2.0) * ic.d_min**2, rel=1e-12)
    assert sigma == pytest.approx(4.1667e-6, rel=1e-4)


@pytest.mark.parametrize("n_equal", [2, 3])
def test_sigma_slack_for_equal_distances(n_equal):
    # With all pairs at d_min the certificate sum equals B_N (N-1)/N exactly.
    if n_equal == 2:
        pos = [[0, 0, 0], [0.3, 0, 0]]
    else:
        pos = [[0, 0, 0], [0.3, 0, 0], [0.15, 0.3 * np.sqrt(3) / 2, 0]]
    ic = hl.gen_burst(pos, 1.0)
    B = compute_B_N(ic, 1.0)
    sigma = compute_sigma_N(ic, B, P2)
    worst = certificate_sums(ic, sigma, P2).max()
    assert worst == pytest.approx(B * (n_equal - 1) / n_equal, rel=1e-12)
    assert worst < B


def test_sigma_halving_decreases_certificate_sums():
    pts = hl.gen_lattice_cloud(27, 0.9, 0.0, seed=1)
    ic = hl.gen_burst(pts, 1.0)
    B = compute_B_N(ic, 1.0)
    sigma = compute_sigma_N(ic, B, P2)
    assert certificate_sums(ic, sigma / 2, P2).max() < certificate_sums(ic, sigma, P2).max()


def test_sigma_bisection_for_custom_potential():
    # The same power law supplied as callables goes through the bisection
    # path and must land on an admissible scale close to the threshold.
    pot = hl.PotentialSpec.custom(lambda q: 1.0 / q, lambda q: -(q**-2.0))
    ic = hl.gen_burst([[0.9, 0, 0], [1.0, 0, 0]], 1.0)
    B = compute_B_N(ic, 1.0, mode=BURST_CLOSED_FORM)
    sigma = compute_sigma_N(ic, B, pot)
    assert certificate_sums(ic, sigma, pot).max() < B
    # two particles at distance d: the sum is sigma/d^2, so the exact
    # admissibility threshold is sigma* = B d^2 (twice the closed form)
    sigma_star = B * ic.d_min**2
    assert certificate_sums(ic, sigma_star * 1.01, pot).max() >= B
    assert sigma == pytest.approx(sigma_star, rel=1e-6)


def test_sigma_rejects_bad_inputs():
    ic = hl.gen_burst([[0.9, 0, 0], [1.0, 0, 0]], 1.0)
    with pytest.raises(ValueError):
        compute_sigma_N(ic, 0.0, P2)
    with pytest.raises(ValueError):
        compute_sigma_N(ic, 1.0, hl.PotentialSpec.free())


# ---------------------------------------------------------------- verify_plan

def test_verify_plan_valid_burst():
    pts = hl.gen_lattice_cloud(27, 0.9, 0.0, seed=1)
    ic = hl.gen_burst(pts, 1.0)
    plan = hl.build_plan(ic, 1.0, P2)
    assert plan.certified
    assert "PASS alignment" in plan.diagnostics


def test_verify_plan_flags_inflated_b_n():
    pts = hl.gen_lattice_cloud(27, 0.9, 0.0, seed=1)
    ic = hl.gen_burst(pts, 1.0)
    plan = hl.build_plan(ic, 1.0, P2)
    bad = ScalingPlan(plan.T, plan.B_N * 10, plan.sigma_N, plan.mode, True, "")
    report = hl.verify_plan(ic, bad, P2)
    failed = {c.name for c in report.checks if not c.passed}
    assert "pair_condition_at_B_N" in failed
    pair_check = next(c for c in report.checks if c.name == "pair_condition_at_B_N")
    assert "pair" in pair_check.detail


def test_verify_plan_flags_inflated_sigma():
    pts = hl.gen_lattice_cloud(27, 0.9, 0.0, seed=1)
    ic = hl.gen_burst(pts, 1.0)
    plan = hl.build_plan(ic, 1.0, P2)
    bad = ScalingPlan(plan.T, plan.B_N, plan.sigma_N * 1e6, plan.mode, True, "")
    report = hl.verify_plan(ic, bad, P2)
    sig_check = next(c for c in report.checks if c.name == "interaction_scale_at_sigma_N")
    assert not sig_check.passed
    assert "particle" in sig_check.detail


# ---------------------------------------------------------------- lattice-burst family

def test_lattice_burst_family_closed_forms():
    # d_min = alpha N^(-1/3) makes B_N(burst) = beta N^(-2/3) an algebraic
    # identity, and sigma_N = beta^(1/(p-1)) alpha^(p/(p-1)) N^(-(5+p)/(3(p-1))).
    alpha, lam, T, p = 0.5, 1.0, 1.0, 2.0
    for n in (64, 512):
        pts = hl.gen_lattice_cloud(n, alpha, 0.0, seed=3)
        ic = hl.gen_burst(pts, lam)
        assert ic.d_min == pytest.approx(alpha * n ** (-1.0 / 3.0), rel=1e-12)
        B = compute_B_N(ic, T, mode=BURST_CLOSED_FORM)
        beta = lam * alpha**2 / (4 * ic.X * T + 6 * ic.U * T**2 + 2 * T**3)
        assert B == pytest.approx(beta * n ** (-2.0 / 3.0), rel=1e-12)
        sigma = compute_sigma_N(ic, B, P2)
        expected = beta ** (1 / (p - 1)) * alpha ** (p / (p - 1)) * n ** (-(5 + p) / (3 * (p - 1)))
        assert sigma == pytest.approx(expected, rel=1e-12)
