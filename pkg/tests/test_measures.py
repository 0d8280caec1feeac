import numpy as np
import pytest

import hydrolim as hl
from hydrolim import measures
from hydrolim.measures import (
    EmpiricalSnapshot,
    SpaceTimeMeasure,
    char_fn,
    default_char_grid,
    moment,
    morrey_constant,
    outside_mass,
    snapshot,
    spacetime_moment,
    spacetime_moment_richardson,
    tail_mass,
    tightness_bound,
)

P2 = hl.PotentialSpec.power_law(2.0)
FREE = hl.PotentialSpec.free()


def snap_from(norms_v, seed=0):
    """Snapshot with prescribed velocity norms in random directions."""
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((len(norms_v), 3))
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    v = dirs * np.asarray(norms_v)[:, None]
    x = rng.uniform(0, 1, (len(norms_v), 3))
    return EmpiricalSnapshot(0.0, x, v)


def random_snap(n, seed):
    rng = np.random.default_rng(seed)
    return EmpiricalSnapshot(0.0, rng.uniform(0, 1, (n, 3)), rng.standard_normal((n, 3)))


# ---------------------------------------------------------------- moment

def test_moment_examples():
    s = snap_from([1.0, 1.0])
    assert moment(s, 2, "velocity") == pytest.approx(1.0, rel=1e-15)
    assert moment(s, 0, "velocity") == 1.0
    s3 = snap_from([1.0, 2.0, 3.0])
    assert moment(s3, 2, "velocity") == pytest.approx(14.0 / 3.0, rel=1e-14)


def test_moment_rejects_negative_order():
    with pytest.raises(ValueError):
        moment(random_snap(4, 0), -1.0)


# ---------------------------------------------------------------- tail_mass

def test_tail_mass_examples():
    s = snap_from([1.0, 1.2, 0.5])
    assert tail_mass(s, 2, 2.0, "velocity") == 0.0  # all |v|^2 <= 1.44 < 2
    s2 = snap_from([1.0, 3.0])
    assert tail_mass(s2, 2, 2.0, "velocity") == pytest.approx(4.5, rel=1e-14)


def test_tail_mass_lemma_inequality_random_clouds():
    # tail(q, R) <= R^(-eps/q) * moment(q + eps), per measure, eps = 1.
    for seed in range(8):
        s = random_snap(50, seed)
        for R in (1.0, 4.0, 16.0):
            lhs = tail_mass(s, 2, R, "velocity")
            rhs = R**-0.5 * moment(s, 3, "velocity")
            assert lhs <= rhs


# ---------------------------------------------------------------- characteristic fn

def test_char_fn_at_origin_and_point_mass():
    s = random_snap(20, 1)
    assert char_fn(s, [0, 0, 0], [0, 0, 0]) == pytest.approx(1.0 + 0j, abs=1e-15)
    point = EmpiricalSnapshot(0.0, np.zeros((2, 3)), np.zeros((2, 3)))
    for y, w in [((1, 2, 3), (0, 0, 0)), ((0.3, 0, 0), (5, 5, 5))]:
        assert char_fn(point, y, w) == pytest.approx(1.0 + 0j, abs=1e-15)


def test_char_fn_cosine_value():
    s = EmpiricalSnapshot(0.0, [[np.pi, 0, 0], [-np.pi, 0, 0]], np.zeros((2, 3)))
    val = char_fn(s, [1, 0, 0], [0, 0, 0])
    assert val == pytest.approx(-1.0 + 0j, abs=1e-12)


def test_char_fn_modulus_bounded():
    s = random_snap(33, 2)
    Y, W = default_char_grid()
    vals = measures.char_fn_grid(s, Y, W)
    assert (np.abs(vals) <= 1.0 + 1e-12).all()


def test_default_char_grid_shape():
    Y, W = default_char_grid()
    assert Y.shape == W.shape
    assert Y.shape[0] <= 4096
    assert Y.shape[1] == 3
    # deterministic
    Y2, _ = default_char_grid()
    assert (Y == Y2).all()


def test_char_distance_properties():
    a = random_snap(40, 3)
    b = random_snap(40, 4)
    assert measures.char_distance(a, a) == 0.0
    assert measures.char_distance(a, b) == measures.char_distance(b, a)
    assert measures.char_distance(a, b) > 0.0


def test_char_distance_shift_lipschitz():
    a = random_snap(25, 5)
    delta = np.array([1e-3, -2e-3, 0.5e-3])
    b = EmpiricalSnapshot(a.t, a.x + delta, a.v)
    Y, W = default_char_grid()
    # |e^{i y.(x+d)} - e^{i y.x}| = |e^{i y.d} - 1| <= |y.d| <= |y| |d|
    bound = float(np.sqrt(np.einsum("ij,ij->i", Y, Y)).max()) * np.linalg.norm(delta)
    assert measures.char_distance(a, b, (Y, W)) <= bound + 1e-12


def test_char_distance_validates_grid():
    a = random_snap(4, 6)
    with pytest.raises(ValueError):
        measures.char_distance(a, a, (np.zeros((0, 3)), np.zeros((0, 3))))


# ---------------------------------------------------------------- tightness

def test_tightness_bound_value():
    assert tightness_bound(1.0, 1.0, 10.0) == pytest.approx(7.0 / 300.0, rel=1e-15)
    assert tightness_bound(1.0, 1.0, 1e9) < 1e-17
    with pytest.raises(ValueError):
        tightness_bound(0.0, 1.0, 1.0)


def test_tightness_bound_dominates_measured_mass():
    pts = hl.gen_lattice_cloud(32, 0.6, 0.0, seed=12)
    ic = hl.gen_burst(pts, 1.0)
    plan = hl.build_plan(ic, 1.0, P2)
    st = hl.SystemState(0.0, ic.positions, ic.velocities)
    traj = hl.integrate(st, P2, plan.sigma_N, 1.0, 1e-2, 10)
    m = SpaceTimeMeasure.from_trajectory(traj)
    B = morrey_constant(m)
    for R in (2.0, 5.0, 10.0):
        assert outside_mass(m, R) <= tightness_bound(B, traj.horizon, R)


# ---------------------------------------------------------------- space-time moments

def test_spacetime_moment_single_snapshot():
    s = snap_from([1.0, 2.0, 3.0])
    m = SpaceTimeMeasure.single(s, T=2.5)
    assert spacetime_moment(m, 2) == pytest.approx(2.5 * moment(s, 2), rel=1e-14)


def test_spacetime_moment_free_flight_constant_velocities():
    st = hl.SystemState(0.0, np.random.default_rng(7).uniform(0, 1, (6, 3)),
                        np.random.default_rng(8).standard_normal((6, 3)))
    traj = hl.integrate(st, FREE, 1.0, T=1.0, h=1e-2, stride=10)
    m = SpaceTimeMeasure.from_trajectory(traj)
    s0 = snapshot(traj, 0)
    assert spacetime_moment(m, 2) == pytest.approx(traj.horizon * moment(s0, 2), rel=1e-12)
    val, est = spacetime_moment_richardson(m, 2)
    assert val == pytest.approx(spacetime_moment(m, 2))
    assert est <= 1e-12  # constant integrand: quadrature exact at any stride


def test_spacetime_measure_weights_sum_to_horizon():
    st = hl.SystemState(0.0, np.random.default_rng(9).uniform(0, 1, (4, 3)),
                        np.zeros((4, 3)))
    traj = hl.integrate(st, FREE, 1.0, T=2.0, h=2e-2, stride=10)
    m = SpaceTimeMeasure.from_trajectory(traj)
    assert m.total_time == pytest.approx(2.0, rel=1e-14)


def test_mass_normalization():
    s = random_snap(13, 10)
    assert moment(s, 0, "position") == 1.0
    assert moment(s, 0, "velocity") == 1.0
