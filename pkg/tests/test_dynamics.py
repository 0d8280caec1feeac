import numpy as np
import pytest

import hydrolim as hl
from hydrolim import dynamics
from hydrolim.errors import DomainError

P2 = hl.PotentialSpec.power_law(2.0)
FREE = hl.PotentialSpec.free()


def brute_accelerations(pos, potential, sigma):
    """Independent O(N^2) double-loop oracle for the acceleration sum."""
    n = pos.shape[0]
    acc = np.zeros((n, 3))
    for i in range(n):
        for j in range(n):
            if j == i:
                continue
            d = pos[i] - pos[j]
            r = np.linalg.norm(d)
            acc[i] += -float(potential.dphi(r / sigma)) / (sigma * r) * d
    return acc


def rk4_two_body_reference(state, potential, sigma, h, substeps=100):
    """Classical 4th-order one-step oracle at step h/substeps."""
    pos = state.positions.copy()
    vel = state.velocities.copy()

    def deriv(x, v):
        return v, brute_accelerations(x, potential, sigma)

    dt = h / substeps
    for _ in range(substeps):
        k1x, k1v = deriv(pos, vel)
        k2x, k2v = deriv(pos + 0.5 * dt * k1x, vel + 0.5 * dt * k1v)
        k3x, k3v = deriv(pos + 0.5 * dt * k2x, vel + 0.5 * dt * k2v)
        k4x, k4v = deriv(pos + dt * k3x, vel + dt * k3v)
        pos = pos + dt / 6 * (k1x + 2 * k2x + 2 * k3x + k4x)
        vel = vel + dt / 6 * (k1v + 2 * k2v + 2 * k3v + k4v)
    return pos, vel


def random_state(n, seed, speed=1.0):
    rng = np.random.default_rng(seed)
    return hl.SystemState(0.0, rng.uniform(0, 1, (n, 3)), speed * rng.standard_normal((n, 3)))


# ---------------------------------------------------------------- pair_acceleration

def test_pair_acceleration_zero_interaction():
    out = hl.pair_acceleration(FREE, 1.0, [0, 0, 0], [2, 0, 0])
    assert (out == 0).all()


def test_pair_acceleration_hand_value():
    # p=2, sigma=1, separation 2: -Phi'(2) = 0.25, and the particle at the
    # origin is pushed away from (2,0,0), i.e. toward -x.
    out = hl.pair_acceleration(P2, 1.0, [0, 0, 0], [2, 0, 0])
    np.testing.assert_allclose(out, [-0.25, 0.0, 0.0], atol=1e-16)


def test_pair_acceleration_antisymmetry():
    rng = np.random.default_rng(3)
    for _ in range(20):
        xi, xj = rng.standard_normal(3), rng.standard_normal(3)
        a_ij = hl.pair_acceleration(P2, 0.7, xi, xj)
        a_ji = hl.pair_acceleration(P2, 0.7, xj, xi)
        np.testing.assert_array_equal(a_ij, -a_ji)


def test_pair_acceleration_errors():
    with pytest.raises(DomainError):
        hl.pair_acceleration(P2, 1.0, [1, 2, 3], [1, 2, 3])
    with pytest.raises(ValueError):
        hl.pair_acceleration(P2, 0.0, [0, 0, 0], [1, 0, 0])


# ---------------------------------------------------------------- accelerations

def test_accelerations_two_body_hand_value():
    st = hl.SystemState(0.0, [[0, 0, 0], [2, 0, 0]], np.zeros((2, 3)))
    acc = hl.accelerations(st, P2, 1.0)
    np.testing.assert_allclose(acc, [[-0.25, 0, 0], [0.25, 0, 0]], atol=1e-16)


def test_accelerations_free_all_zero():
    st = random_state(17, seed=0)
    assert (hl.accelerations(st, FREE, 1.0) == 0).all()


def test_accelerations_newton_third_law_n64():
    st = random_state(64, seed=1)
    acc = hl.accelerations(st, P2, 0.05)
    per_term_scale = np.abs(acc).sum()
    assert np.abs(acc.sum(axis=0)).max() <= 1e-12 * per_term_scale


def test_accelerations_match_brute_force_oracle():
    st = random_state(24, seed=2)
    acc = hl.accelerations(st, P2, 0.1)
    np.testing.assert_allclose(acc, brute_accelerations(st.positions, P2, 0.1), rtol=1e-12)
    pot = hl.PotentialSpec.custom(lambda q: 1.0 / q, lambda q: -1.0 / q**2)
    acc_custom = hl.accelerations(st, pot, 0.1)
    np.testing.assert_allclose(acc_custom, acc, rtol=1e-12)


def test_accelerations_coincident_pair_names_indices():
    pos = np.array([[0.0, 0, 0], [1.0, 0, 0], [1.0, 0, 0]])
    st = hl.SystemState(0.0, pos, np.zeros((3, 3)))
    with pytest.raises(DomainError, match="1 and 2"):
        hl.accelerations(st, P2, 1.0)


# ---------------------------------------------------------------- energies

def test_total_energy_trivial_kinetic():
    st = hl.SystemState(0.0, [[0, 0, 0], [2, 0, 0]], np.zeros((2, 3)))
    assert hl.total_energy(st, FREE, 1.0) == 0.0
    st = hl.SystemState(0.0, [[0, 0, 0], [2, 0, 0]], [[1, 0, 0], [0, 1, 0]])
    assert hl.total_energy(st, FREE, 1.0) == pytest.approx(0.5, rel=1e-15)


def test_total_energy_ordered_pair_sum():
    # Phi(2) = 0.5; ordered sum has two terms, weight 1/N = 1/2.
    st = hl.SystemState(0.0, [[0, 0, 0], [2, 0, 0]], np.zeros((2, 3)))
    assert hl.total_energy(st, P2, 1.0) == pytest.approx(0.5, rel=1e-15)
    # The conserved Hamiltonian counts each unordered pair once.
    assert hl.conserved_energy(st, P2, 1.0) == pytest.approx(0.25, rel=1e-15)


def test_kinetic_term_equals_half_velocity_moment():
    from hydrolim.measures import EmpiricalSnapshot, moment

    st = random_state(31, seed=4)
    snap = EmpiricalSnapshot(0.0, st.positions, st.velocities)
    kinetic = hl.total_energy(st, FREE, 1.0)
    assert kinetic == pytest.approx(moment(snap, 2, "velocity") / 2, rel=1e-14)


def test_total_energy_coincident_error():
    st = hl.SystemState(0.0, [[0, 0, 0], [0, 0, 0], [1, 0, 0]], np.zeros((3, 3)))
    with pytest.raises(DomainError):
        hl.total_energy(st, P2, 1.0)


# ---------------------------------------------------------------- step_verlet

def test_step_free_flight():
    st = random_state(8, seed=5)
    out = hl.step_verlet(st, FREE, 1.0, 0.25)
    np.testing.assert_array_equal(out.positions, st.positions + 0.25 * st.velocities)
    np.testing.assert_array_equal(out.velocities, st.velocities)
    assert out.t == 0.25


def test_step_matches_rk4_oracle_to_third_order():
    st = hl.SystemState(0.0, [[-1, 0, 0], [1, 0, 0]], [[0, -0.2, 0], [0, 0.2, 0]])
    h = 1e-3
    stepped = hl.step_verlet(st, P2, 1.0, h)
    ref_pos, ref_vel = rk4_two_body_reference(st, P2, 1.0, h)
    err = max(np.abs(stepped.positions - ref_pos).max(), np.abs(stepped.velocities - ref_vel).max())
    assert err <= h**3


def test_step_reversibility():
    st = random_state(12, seed=6, speed=0.3)
    fwd = hl.step_verlet(st, P2, 0.5, 1e-2)
    back = hl.step_verlet(fwd, P2, 0.5, -1e-2)
    assert np.abs(back.positions - st.positions).max() <= 1e-12
    assert np.abs(back.velocities - st.velocities).max() <= 1e-12


# ---------------------------------------------------------------- integrate

def test_integrate_free_flight_exact_translation():
    st = random_state(9, seed=7)
    traj = hl.integrate(st, FREE, 1.0, T=1.0, h=1e-2, stride=10)
    np.testing.assert_allclose(
        traj.positions[-1], st.positions + 1.0 * st.velocities, rtol=0, atol=1e-14
    )
    np.testing.assert_array_equal(traj.velocities[-1], st.velocities)
    assert traj.n_samples == 11


def test_integrate_validates_step_grid():
    st = random_state(4, seed=8)
    with pytest.raises(ValueError, match="not a positive integer"):
        hl.integrate(st, FREE, 1.0, T=1.0, h=3e-1, stride=1)
    with pytest.raises(ValueError, match="multiple of stride"):
        hl.integrate(st, FREE, 1.0, T=1.0, h=1e-1, stride=3)


def test_integrate_energy_drift_order_two():
    # Burst family: drift shrinks ~4x when h halves.
    pts = hl.gen_lattice_cloud(27, 0.9, 0.0, seed=3)
    ic = hl.gen_burst(pts, 1.0)
    plan = hl.build_plan(ic, 1.0, P2)
    st = hl.SystemState(0.0, ic.positions, ic.velocities)
    drifts = [
        dynamics.energy_drift(hl.integrate(st, P2, plan.sigma_N, 1.0, h, 1))
        for h in (2e-2, 1e-2, 5e-3)
    ]
    for coarse, fine in zip(drifts, drifts[1:]):
        assert 3.2 <= coarse / fine <= 4.8


def test_integrate_two_body_angular_momentum():
    st = hl.SystemState(0.0, [[-1, 0, 0], [1, 0, 0]], [[0, -0.3, 0], [0, 0.3, 0]])
    traj = hl.integrate(st, P2, 1.0, T=1.0, h=1e-4, stride=100)
    L0 = np.cross(st.positions, st.velocities).sum(axis=0)
    for k in range(traj.n_samples):
        L = np.cross(traj.positions[k], traj.velocities[k]).sum(axis=0)
        assert np.abs(L - L0).max() <= 1e-10 * np.linalg.norm(L0)


def test_integrate_deterministic_bit_identical():
    pts = hl.gen_lattice_cloud(16, 0.8, 0.1, seed=9)
    ic = hl.gen_burst(pts, 2.0)
    plan = hl.build_plan(ic, 0.5, P2)
    st = hl.SystemState(0.0, ic.positions, ic.velocities)
    t1 = hl.integrate(st, P2, plan.sigma_N, 0.5, 1e-3, 10)
    t2 = hl.integrate(st, P2, plan.sigma_N, 0.5, 1e-3, 10)
    assert (t1.positions == t2.positions).all()
    assert (t1.velocities == t2.velocities).all()


def test_monotone_separation_under_valid_plan():
    pts = hl.gen_lattice_cloud(32, 0.6, 0.0, seed=10)
    ic = hl.gen_burst(pts, 1.0)
    plan = hl.build_plan(ic, 1.0, P2)
    assert plan.certified
    st = hl.SystemState(0.0, ic.positions, ic.velocities)
    traj = hl.integrate(st, P2, plan.sigma_N, 1.0, 1e-3, 50)
    dists = dynamics.min_distance_profile(traj)
    steps = np.diff(dists) / dists[:-1]
    assert (steps >= -1e-9).all()


# ---------------------------------------------------------------- observables

def test_min_pair_distance_examples():
    st = hl.SystemState(0.0, [[0, 0, 0], [2, 0, 0]], np.zeros((2, 3)))
    assert hl.min_pair_distance(st) == 2.0
    st = hl.SystemState(0.0, [[0, 0, 0], [1, 0, 0], [3, 0, 0]], np.zeros((3, 3)))
    assert hl.min_pair_distance(st) == 1.0


def test_min_pair_distance_lattice_cloud_vs_brute_force():
    pts = hl.gen_lattice_cloud(1000, 1.0, 0.0, seed=11)
    st = hl.SystemState(0.0, pts, np.zeros_like(pts))
    diff = pts[:, None, :] - pts[None, :, :]
    r2 = np.einsum("ijk,ijk->ij", diff, diff)
    np.fill_diagonal(r2, np.inf)
    brute = np.sqrt(r2.min())
    got = hl.min_pair_distance(st)
    assert got == pytest.approx(brute, rel=1e-15)
    assert got == pytest.approx(1.0 * 1000 ** (-1.0 / 3.0), rel=1e-12)


def test_min_pair_distance_zero_on_coincidence():
    st = hl.SystemState(0.0, [[1, 1, 1], [1, 1, 1]], np.zeros((2, 3)))
    assert hl.min_pair_distance(st) == 0.0


def test_max_acceleration_norm():
    st = hl.SystemState(0.0, [[0, 0, 0], [2, 0, 0]], np.zeros((2, 3)))
    assert hl.max_acceleration_norm(st, FREE, 1.0) == 0.0
    assert hl.max_acceleration_norm(st, P2, 1.0) == pytest.approx(0.25, rel=1e-15)


def test_default_step_rule():
    h = dynamics.default_step(T=1.0, d_min0=0.1, U=2.0, B_N=1e-3, stride=10)
    # displacement guard binds: 0.1 * 0.1 / 2 = 5e-3 > 1e-3 so h = 1e-3 grid
    assert h == pytest.approx(1e-3, rel=1e-12)
    n = round(1.0 / h)
    assert n % 10 == 0
    # tiny separation forces a smaller step, still on the stride grid
    h2 = dynamics.default_step(T=1.0, d_min0=1e-4, U=2.0, B_N=1e-3, stride=7)
    assert h2 < 1e-5
    assert round(1.0 / h2) % 7 == 0


def test_system_state_validation():
    with pytest.raises(ValueError):
        hl.SystemState(0.0, [[0, 0, 0]], [[0, 0, 0]])  # N < 2
    with pytest.raises(ValueError):
        hl.SystemState(0.0, [[0, 0, 0], [np.inf, 0, 0]], np.zeros((2, 3)))
    with pytest.raises(ValueError):
        hl.SystemState(0.0, np.zeros((2, 3)), np.zeros((3, 3)))
