import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.linalg import expm

from flapwing import unsteady as us
from flapwing.dynamics import BodyState, rotation
from flapwing.errors import DegenerateFlowError, IllConditionedError
from flapwing.unsteady import (JONES, UnsteadyAeroState, UnsteadySettings, WingDiscretization,
                               circulation, duhamel_lag_states, fourier_rates, induced_downwash,
                               lag_state_rates, linear_system, sectional_cl, total_lift_coefficient,
                               unsteady_loads, unsteady_rates, unsteady_step_inputs, wagner_phi)
from flapwing.wing import Planform, llt_pieces, llt_strips

from oracles import elliptic_wing_cl, midspan_cl, pv_downwash, steady_state, step_response

RECT = WingDiscretization.rectangular(1.0, 0.1, 8)
PF = Planform()


def pitched_state(alpha, q=(0.0, 0.0)):
    return BodyState(np.zeros(3), np.array(q), np.zeros(3), np.zeros(2),
                     rotation(np.array([0.0, 1.0, 0.0]), -alpha), np.zeros(3))


def rk4(f, y, dt, n):
    out = [y]
    for i in range(n):
        t = i * dt
        k1 = f(t, y)
        k2 = f(t + dt / 2, y + dt / 2 * k1)
        k3 = f(t + dt / 2, y + dt / 2 * k2)
        k4 = f(t + dt, y + dt * k3)
        y = y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        out.append(y)
    return np.array(out)


# ---- discretization and circulation ----------------------------------------------------

def test_station_layout():
    d = WingDiscretization.rectangular(2.0, 0.1, 12)
    assert d.m == 12
    assert np.all(np.diff(d.theta) > 0) and 0 < d.theta[0] and d.theta[-1] < np.pi
    assert np.all(np.diff(d.y) < 0)
    assert d.ds.sum() == pytest.approx(2.0, abs=1e-14)
    assert np.allclose(d.b, 0.05)


def test_circulation_examples():
    a1 = np.eye(8)[0]
    assert circulation(RECT, JONES, a1, 0.0, 1.5) == pytest.approx(0.5 * 2 * np.pi * 0.1 * 1.5, rel=1e-15)
    assert abs(circulation(RECT, JONES, np.eye(8)[1], 0.0, 1.5)) < 1e-16


@given(a=st.lists(st.floats(-1, 1), min_size=8, max_size=8))
def test_circulation_vanishes_at_tips(a):
    g = circulation(RECT, JONES, np.array(a), [-0.5, 0.5], 2.0)
    assert np.all(np.abs(g) < 1e-14)
    near = circulation(RECT, JONES, np.array(a), [0.5 - 1e-9], 2.0)
    assert abs(near[0]) < 1e-3


# ---- induced downwash ----------------------------------------------------------------------

def test_elliptic_loading_gives_uniform_downwash():
    a = np.zeros(8)
    a[0] = 0.3
    w = induced_downwash(RECT, JONES, a, 1.2)
    assert np.allclose(w, -(2 * np.pi * 0.1 * 1.2 * 0.3) / (4 * 1.0), rtol=1e-13)


def test_no_circulation_no_downwash():
    assert np.all(induced_downwash(RECT, JONES, np.zeros(8), 1.2) == 0.0)


@given(seed=st.integers(0, 10 ** 6))
def test_downwash_matches_principal_value_integral(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=8)
    w = induced_downwash(RECT, JONES, a, 1.65)
    ref = np.array([pv_downwash(RECT, JONES, a, 1.65, y) for y in RECT.y])
    assert np.all(np.abs(w - ref) <= 1e-2 * np.abs(ref))


# ---- Wagner function and lag states -----------------------------------------------------

def test_wagner_function_values():
    assert wagner_phi(0.0) == pytest.approx(0.5, abs=1e-15)
    assert wagner_phi(10.0) == pytest.approx(0.8786, abs=1e-4)
    assert wagner_phi(1e4) == pytest.approx(1.0, abs=1e-12)
    assert wagner_phi(np.log(JONES.psi1 / 0.01) / JONES.eps1) == pytest.approx(0.99, abs=1e-6)
    assert wagner_phi(60.0) < 0.99
    assert np.all(np.diff(wagner_phi(np.linspace(0, 100, 500))) > 0)


def test_lag_states_fixed_point():
    w = np.array([0.2, -0.4])
    d1, d2 = lag_state_rates(JONES.psi1 * w, JONES.psi2 * w, w, 1.65, 0.05)
    assert np.allclose(d1, 0.0, atol=1e-14) and np.allclose(d2, 0.0, atol=1e-14)


def test_lag_states_decay_without_downwash():
    U, b, z0 = 1.65, 0.05, 0.3
    t = 0.4
    n = 4000
    f = lambda _, z: np.concatenate(lag_state_rates(z[:1], z[1:], 0.0, U, b))
    z = rk4(f, np.array([z0, z0]), t / n, n)[-1]
    assert z[0] == pytest.approx(z0 * np.exp(-JONES.eps1 * U * t / b), rel=1e-10)
    assert z[1] == pytest.approx(z0 * np.exp(-JONES.eps2 * U * t / b), rel=1e-10)


def test_lag_states_reject_zero_speed():
    with pytest.raises(DegenerateFlowError):
        lag_state_rates(0.0, 0.0, 0.1, 0.0, 0.05)


def sine_lag_closed_form(t, U, b, W, Om, psi, eps):
    r = eps * U / b
    return psi * r * W * (r * np.sin(Om * t) - Om * np.cos(Om * t) + Om * np.exp(-r * t)) / (r * r + Om * Om)


def test_duhamel_quadrature_against_closed_form():
    U, b, W, Om = 1.65, 0.06, 0.3, 2 * np.pi * 4.5
    t = np.arange(0, 20001) * 1e-4
    z1, z2 = duhamel_lag_states(t, W * np.sin(Om * t), U, b)
    for z, psi, eps in ((z1, JONES.psi1, JONES.eps1), (z2, JONES.psi2, JONES.eps2)):
        ref = sine_lag_closed_form(t, U, b, W, Om, psi, eps)
        assert np.linalg.norm(z - ref) < 1e-4 * np.linalg.norm(ref)


def test_lag_state_ode_matches_duhamel_convolution():
    U, b, W, Om, dt = 1.65, 0.06, 0.3, 2 * np.pi * 4.5, 1e-4
    n = 10000
    f = lambda t, z: np.concatenate(lag_state_rates(z[:1], z[1:], W * np.sin(Om * t), U, b))
    z = rk4(f, np.zeros(2), dt, n)
    t = np.arange(n + 1) * dt
    q1, q2 = duhamel_lag_states(t, W * np.sin(Om * t), U, b)
    assert np.linalg.norm(z[:, 0] - q1) < 1e-3 * np.linalg.norm(q1)
    assert np.linalg.norm(z[:, 1] - q2) < 1e-3 * np.linalg.norm(q2)


@given(seed=st.integers(0, 10 ** 6), W=st.floats(0.01, 5.0), z0=st.floats(-2, 2))
def test_lag_states_bounded_by_downwash(seed, W, z0):
    rng = np.random.default_rng(seed)
    levels = rng.uniform(-W, W, size=40)
    U, b, dt = 1.65, 0.05, 2e-4
    f = lambda t, z: np.concatenate(lag_state_rates(z[:1], z[1:], levels[min(int(t / 0.01), 39)], U, b))
    z = rk4(f, np.array([z0, z0]), dt, 2000)
    assert np.all(np.abs(z[:, 0]) <= JONES.psi1 * W + abs(z0) + 1e-12)
    assert np.all(np.abs(z[:, 1]) <= JONES.psi2 * W + abs(z0) + 1e-12)


def test_sectional_lift_limits():
    U, w = 1.65, 0.12
    assert sectional_cl(0.0, 0.0, 0.0, U) == 0.0
    steady = sectional_cl(w, JONES.psi1 * w, JONES.psi2 * w, U)
    assert steady == pytest.approx(JONES.a0 * w / U, rel=1e-15)
    assert sectional_cl(w, 0.0, 0.0, U) == pytest.approx(0.5 * JONES.a0 * w / U, rel=1e-15)


# ---- Fourier rates ------------------------------------------------------------------------

def test_homogeneous_system_is_at_rest():
    adot, w = fourier_rates(RECT, JONES, *np.zeros((4, 8)), U_ref=1.65)
    assert np.all(adot == 0.0) and np.all(w == 0.0)


@given(seed=st.integers(0, 10 ** 6))
def test_fourier_rates_satisfy_collocation_equations(seed):
    """At every station the circulation relaxes towards the Duhamel-form value.

    ``dGamma_k/dt = (U_k / c_k) (c_k U_k C_L,k / 2 - Gamma_k)`` with ``C_L`` the
    lag-state sectional coefficient; evaluated here station by station.
    """
    rng = np.random.default_rng(seed)
    disc = WingDiscretization.from_chord(0.9, 4, lambda y: 0.1 + 0.05 * np.cos(np.pi * y / 0.9))
    a, z1, z2, v_n = rng.normal(scale=0.2, size=(4, 4))
    U_ref = 1.3
    U_k = rng.uniform(0.5, 3.0, size=4)
    adot, _ = fourier_rates(disc, JONES, a, z1, z2, v_n, U_ref, U_k)
    K = 0.5 * JONES.a0 * disc.c0 * U_ref
    for k in range(4):
        y = disc.y[k]
        gamma = circulation(disc, JONES, a, y, U_ref)
        gamma_dot = circulation(disc, JONES, adot, y, U_ref)
        wy = -K / (2 * disc.S) * sum((n + 1) * a[n] * np.sin((n + 1) * disc.theta[k])
                                     for n in range(4)) / np.sin(disc.theta[k])
        w = v_n[k] + wy
        cl = JONES.a0 / U_k[k] * (0.5 * w + z1[k] + z2[k])
        c = disc.chord[k]
        res = gamma_dot - U_k[k] / c * (0.5 * c * U_k[k] * cl - gamma)
        assert abs(res) < 1e-10 * max(1.0, abs(gamma_dot))


def test_fixed_point_after_long_prerun():
    disc = WingDiscretization.elliptic(1.0, 4.0 / (6 * np.pi), 8)
    U, v_n = 1.0, np.full(8, np.sin(np.deg2rad(2.0)))
    A, B = linear_system(disc, JONES, U)
    aug = np.zeros((25, 25))
    aug[:24, :24], aug[:24, 24] = A, B @ v_n
    zeta = expm(aug * 150.0)[:24, 24]
    adot = unsteady_rates(disc, JONES, zeta, v_n, U)[:8]
    assert np.linalg.norm(adot) < 1e-8
    # lag states sit at psi_i times the total downwash
    st_ = UnsteadyAeroState.from_zeta(zeta)
    w = v_n + induced_downwash(disc, JONES, st_.a, U)
    assert np.allclose(st_.z1, JONES.psi1 * w, atol=1e-10)


def test_linear_system_is_stable():
    for disc in (RECT, WingDiscretization.elliptic(1.0, 0.2, 12)):
        ev = np.linalg.eigvals(linear_system(disc, JONES, 1.65)[0])
        assert np.all(ev.real < 0)


def test_ill_conditioned_collocation_raises(monkeypatch):
    monkeypatch.setattr(us, "COND_LIMIT", 0.5)
    with pytest.raises(IllConditionedError):
        us.FourierSolver(6)


def test_collocation_matrix_well_conditioned():
    for m in (4, 8, 16, 32):
        assert us.fourier_solver(m).cond < 1e3


# ---- steady elliptic wing ----------------------------------------------------------------

@pytest.mark.parametrize("AR", [4.0, 6.0, 10.0])
def test_steady_elliptic_lift(AR):
    S = 1.0
    c0 = 4 * S / (np.pi * AR)
    alpha = np.deg2rad(2.0)
    disc = WingDiscretization.elliptic(S, c0, 16)
    zeta = steady_state(disc, np.full(16, np.sin(alpha)), 1.0)
    CL = total_lift_coefficient(disc, JONES, zeta[:16])
    assert CL == pytest.approx(elliptic_wing_cl(alpha, AR), rel=0.02)


# ---- indicial response -----------------------------------------------------------------------

def test_indicial_response_approaches_wagner_in_two_dimensions():
    """Very slender wing: mid-span lift follows the Wagner curve."""
    chord, U = 0.1, 1.0
    disc = WingDiscretization.rectangular(2000 * chord, chord, 16)
    v_n = np.full(16, 0.05)
    tn = np.linspace(0, 60, 61)
    zeta = step_response(disc, tn * (chord / 2) / U, v_n, U)
    cl = np.array([midspan_cl(disc, z, v_n, U) for z in zeta])
    ratio = cl / midspan_cl(disc, steady_state(disc, v_n, U), v_n, U)
    assert 0.49 <= ratio[0] <= 0.51
    assert np.all(np.diff(ratio) > 0)
    # the Jones fit itself only reaches 0.99 at t~ = ln(psi1 / 0.01) / eps1 = 61.6
    assert ratio[-1] == pytest.approx(wagner_phi(60.0), abs=1e-3)
    assert np.max(np.abs(ratio - wagner_phi(tn))) < 0.015


def test_indicial_start_reflects_finite_span():
    """On a finite wing the first instant sees no induced downwash yet, the steady state does."""
    chord, U = 0.1, 1.0
    disc = WingDiscretization.rectangular(20 * chord, chord, 16)
    v_n = np.full(16, 0.05)
    zinf = steady_state(disc, v_n, U)
    w_inf = v_n + induced_downwash(disc, JONES, zinf[:16], U)
    r0 = midspan_cl(disc, np.zeros(48), v_n, U) / midspan_cl(disc, zinf, v_n, U)
    mid = [7, 8]
    assert r0 == pytest.approx(0.5 * v_n[0] / np.mean(w_inf[mid]), rel=1e-12)


# ---- loads on the flapping wing ---------------------------------------------------------------

def test_step_inputs_are_normal_relative_wind():
    s = pitched_state(0.1)
    assert np.allclose(unsteady_step_inputs(s, PF, 16, 1.65), 1.65 * np.sin(0.1), atol=1e-14)
    assert np.all(unsteady_step_inputs(BodyState.at_rest(), PF, 16, 0.0) == 0.0)


def test_pieces_tile_stations_without_crossing_hinges():
    s = pitched_state(0.0, q=(0.3, 0.7))
    strips, _ = llt_strips(s, PF, 16)
    pieces, owner = llt_pieces(s, PF, 16)
    assert np.allclose(np.bincount(owner, pieces.ds), strips.ds, rtol=1e-14)
    assert np.all(np.diff(owner) >= 0) and np.all(pieces.ds > 0)
    # flattened piece ends, left tip first and contiguous
    ends = strips.ds.sum() / 2 - np.r_[0.0, np.cumsum(pieces.ds)]
    hinge = PF.shoulder_y + PF.proximal_length
    for lo, hi in zip(ends[1:], ends[:-1]):
        for c in (hinge, PF.shoulder_y, 0.0, -PF.shoulder_y, -hinge):
            assert not (lo + 1e-12 < c < hi - 1e-12)


def test_station_inputs_continuous_while_folding():
    """Stations slide across the elbow as the fold changes; the inputs must not jump."""
    folds = np.linspace(0.0, np.deg2rad(60.0), 2001)
    rates = np.array([1.0, 8.0])
    v = np.array([unsteady_step_inputs(
        BodyState(np.zeros(3), np.array([0.3, qe]), np.zeros(3), rates,
                  rotation(np.array([0.0, 1.0, 0.0]), -0.1), np.zeros(3)), PF, 16, 1.65)
        for qe in folds])
    step = np.abs(np.diff(v, axis=0)).max()
    assert step < 5e-3 * np.abs(v).max()


def test_zero_state_level_flight_gives_drag_only():
    s = pitched_state(0.0)
    loads, _ = unsteady_loads(s, PF, np.zeros(48), 1.225, 1.65)
    assert np.all(loads.cl == 0.0)
    e_D = loads.flow.e_D
    perp = loads.forces - np.einsum("ki,ki->k", loads.forces, e_D)[:, None] * e_D
    assert np.max(np.abs(perp)) < 1e-15
    assert loads.force[0] < 0  # drag opposes flight


@given(seed=st.integers(0, 10 ** 6))
def test_lift_part_linear_in_state(seed):
    rng = np.random.default_rng(seed)
    s = pitched_state(0.0, q=rng.uniform(-0.5, 0.5, 2))
    zeta = rng.normal(scale=0.05, size=48)
    base = unsteady_loads(s, PF, np.zeros(48), 1.225, 1.65)[0]
    one = unsteady_loads(s, PF, zeta, 1.225, 1.65)[0]
    two = unsteady_loads(s, PF, 2 * zeta, 1.225, 1.65)[0]
    # v_n = 0 on a level wing, so the lift part is linear in zeta
    lift1 = one.forces - base.forces
    lift2 = two.forces - base.forces
    assert np.allclose(lift2, 2 * lift1, rtol=1e-12, atol=1e-14 * np.abs(lift1).max())


@given(seed=st.integers(0, 10 ** 6))
def test_generalized_force_affine_in_state(seed):
    rng = np.random.default_rng(seed)
    s = BodyState(np.zeros(3), rng.uniform(-0.5, 0.5, 2), rng.normal(size=3), rng.normal(scale=10, size=2),
                  rotation(np.array([0.0, 1.0, 0.0]), -0.1), rng.normal(size=3))
    z1, z2 = rng.normal(scale=0.05, size=(2, 48))
    t = rng.uniform(-2, 2)
    u = lambda z: unsteady_loads(s, PF, z, 1.225, 1.65)[0].u_a
    mix = u((1 - t) * z1 + t * z2)
    ref = (1 - t) * u(z1) + t * u(z2)
    assert np.max(np.abs(mix - ref)) < 1e-12 * max(1.0, np.abs(ref).max())


def test_loads_use_floor_in_hover():
    loads, rates = unsteady_loads(BodyState.at_rest(), PF, np.zeros(48), 1.225, 0.0,
                                  UnsteadySettings(u_floor=0.05))
    assert np.all(np.isfinite(rates)) and np.all(loads.forces == 0.0)


def test_loads_shed_circulation_matches_series():
    s = pitched_state(0.05)
    zeta = np.zeros(48)
    zeta[0] = 0.02
    loads, _ = unsteady_loads(s, PF, zeta, 1.225, 1.65)
    semispan = PF.flattened_semispan(0.0)
    theta = np.arange(1, 17) * np.pi / 17
    expected = 0.5 * JONES.a0 * PF.root_chord * 1.65 * 0.02 * np.sin(theta)
    assert np.allclose(loads.gamma, expected, rtol=1e-13)
    assert len(loads.stations) == 16 and len(loads.cl) == 16
    assert loads.stations.ds.sum() == pytest.approx(2 * semispan, abs=1e-14)
    assert loads.strips.ds.sum() == pytest.approx(2 * semispan, abs=1e-14)
