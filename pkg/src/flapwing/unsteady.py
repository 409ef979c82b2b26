"""Lifting-line circulation with Wagner lag states.

The spanwise circulation is a sine series over the full span,
``Gamma = 0.5 a0 c0 U_ref sum a_n sin(n theta)`` with ``y = (S/2) cos theta``.
Each station also carries two lag states ``z1, z2`` from Jones' two-term
fit of the Wagner function. The Fourier rates follow from equating the
unsteady Kutta-Joukowski lift with the Duhamel form at every station.

Velocities: ``U_ref`` normalizes the circulation; ``U_k`` is the local
effective speed used for normalized time and for the sectional lift. With a
uniform freestream the two coincide and the model reduces to the classical
one.
"""
from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .errors import DegenerateFlowError, IllConditionedError
from .quasisteady import dickinson_cd, relative_flow, strip_loads
from .dynamics import chain_kinematics
from .wing import llt_pieces, llt_strips, station_layout

COND_LIMIT = 1e10


@dataclass(frozen=True)
class WagnerConstants:
    psi1: float = 0.165
    psi2: float = 0.335
    eps1: float = 0.0455
    eps2: float = 0.3
    a0: float = 2.0 * np.pi

    def __post_init__(self):
        if not self.a0 > 0:
            raise ValueError("a0 must be positive")

    @property
    def phi0(self):
        return 1.0 - self.psi1 - self.psi2


JONES = WagnerConstants()


def wagner_phi(t_norm, wc=JONES):
    """Jones approximation of the Wagner function at normalized time."""
    t_norm = np.asarray(t_norm, dtype=float)
    return 1.0 - wc.psi1 * np.exp(-wc.eps1 * t_norm) - wc.psi2 * np.exp(-wc.eps2 * t_norm)


@dataclass(frozen=True)
class WingDiscretization:
    """Lifting-line stations of a wing of span ``S`` and root chord ``c0``."""

    S: float
    c0: float
    theta: np.ndarray
    y: np.ndarray
    chord: np.ndarray

    @classmethod
    def from_chord(cls, S, m, chord_fn, c0=None):
        """Stations ``theta_k = k pi / (m + 1)`` with chords from ``chord_fn(y)``."""
        theta, y, _ = station_layout(m, 0.5 * S)
        chord = np.asarray(chord_fn(y), dtype=float) * np.ones(m)
        c0 = float(chord_fn(np.array(0.0))) if c0 is None else c0
        return cls(float(S), float(c0), theta, y, chord)

    @classmethod
    def rectangular(cls, S, chord, m):
        return cls.from_chord(S, m, lambda y: np.full(np.shape(y), chord))

    @classmethod
    def elliptic(cls, S, c0, m):
        return cls.from_chord(S, m, lambda y: c0 * np.sqrt(np.clip(1.0 - (2.0 * y / S) ** 2, 0.0, None)))

    @property
    def m(self):
        return len(self.theta)

    @property
    def b(self):
        return 0.5 * self.chord

    @property
    def edges(self):
        return station_layout(self.m, 0.5 * self.S)[2]

    @property
    def ds(self):
        e = self.edges
        return e[:-1] - e[1:]

    def sine_matrix(self):
        n = np.arange(1, self.m + 1)
        return np.sin(np.outer(self.theta, n))


@dataclass(frozen=True)
class UnsteadyAeroState:
    a: np.ndarray
    z1: np.ndarray
    z2: np.ndarray

    @classmethod
    def zeros(cls, m):
        return cls(np.zeros(m), np.zeros(m), np.zeros(m))

    @classmethod
    def from_zeta(cls, zeta):
        zeta = np.asarray(zeta, dtype=float)
        m = len(zeta) // 3
        return cls(zeta[:m], zeta[m:2 * m], zeta[2 * m:])

    @property
    def zeta(self):
        return np.concatenate([self.a, self.z1, self.z2])


def circulation(disc, wc, a, y, U):
    """Circulation at span positions ``y`` (m^2/s)."""
    y = np.asarray(y, dtype=float)
    theta = np.arccos(np.clip(2.0 * y / disc.S, -1.0, 1.0))
    n = np.arange(1, len(a) + 1)
    return 0.5 * wc.a0 * disc.c0 * U * (np.sin(np.multiply.outer(theta, n)) @ a)


def _downwash_matrix(disc, wc, U):
    n = np.arange(1, disc.m + 1)
    return -(wc.a0 * disc.c0 * U) / (4.0 * disc.S) * (
        np.sin(np.outer(disc.theta, n)) * n / np.sin(disc.theta)[:, None])


def induced_downwash(disc, wc, a, U):
    """Downwash induced by the trailing vortices at every station (m/s)."""
    return _downwash_matrix(disc, wc, U) @ a


def lag_state_rates(z1, z2, w, U_eff, b, wc=JONES):
    """Time derivatives of the two Wagner lag states.

    ``z_i' = (psi_i eps_i U/b) w - (eps_i U/b) z_i``; the fixed point is
    ``z_i = psi_i w``.
    """
    U_eff = np.asarray(U_eff, dtype=float)
    if np.any(~(U_eff > 0)):
        raise DegenerateFlowError("effective speed must be positive for normalized time")
    r1 = wc.eps1 * U_eff / b
    r2 = wc.eps2 * U_eff / b
    return wc.psi1 * r1 * w - r1 * z1, wc.psi2 * r2 * w - r2 * z2


def sectional_cl(w, z1, z2, U_eff, wc=JONES):
    """Sectional lift coefficient from total downwash and lag states."""
    return wc.a0 / U_eff * (wc.phi0 * w + z1 + z2)


class FourierSolver:
    """Factorized collocation system for the Fourier-coefficient rates.

    The sine matrix depends only on ``m``, so the factorization is built once.
    """

    def __init__(self, m):
        n = np.arange(1, m + 1)
        theta = np.arange(1, m + 1) * np.pi / (m + 1)
        self.S = np.sin(np.outer(theta, n))
        self.cond = np.linalg.cond(self.S)
        if not self.cond < COND_LIMIT:
            raise IllConditionedError(f"collocation matrix condition {self.cond:.3e}")
        self._lu = lu_factor(self.S)

    def solve(self, rhs):
        # non-finite input propagates to the simulator's state check
        return lu_solve(self._lu, rhs, check_finite=False)


_SOLVERS = {}


def fourier_solver(m):
    if m not in _SOLVERS:
        _SOLVERS[m] = FourierSolver(m)
    return _SOLVERS[m]


def fourier_rates(disc, wc, a, z1, z2, v_n, U_ref, U_k=None):
    """Fourier-coefficient rates that make both lift expressions agree at every station.

    Parameters
    ----------
    disc : WingDiscretization
    wc : WagnerConstants
    a, z1, z2 : (m,) arrays
    v_n : (m,) array
        Kinematic normal velocity per station.
    U_ref : float
        Speed normalizing the circulation.
    U_k : (m,) array, optional
        Local effective speed; defaults to ``U_ref`` everywhere.

    Returns
    -------
    adot : (m,) array
    w : (m,) array
        Total downwash used on the right-hand side.
    """
    U_k = np.full(disc.m, U_ref) if U_k is None else np.asarray(U_k, dtype=float)
    w = v_n + induced_downwash(disc, wc, a, U_ref)
    solver = fourier_solver(disc.m)
    rhs = U_k / (disc.c0 * U_ref) * (wc.phi0 * w + z1 + z2) - (U_k / disc.chord) * (solver.S @ a)
    return solver.solve(rhs), w


def unsteady_rates(disc, wc, zeta, v_n, U_ref, U_k=None):
    """Time derivative of ``zeta = (a, z1, z2)`` for frozen kinematics."""
    st = UnsteadyAeroState.from_zeta(zeta)
    U_k = np.full(disc.m, U_ref) if U_k is None else U_k
    adot, w = fourier_rates(disc, wc, st.a, st.z1, st.z2, v_n, U_ref, U_k)
    z1d, z2d = lag_state_rates(st.z1, st.z2, w, U_k, disc.b, wc)
    return np.concatenate([adot, z1d, z2d])


def linear_system(disc, wc, U_ref, U_k=None):
    """Matrices ``(A, B)`` with ``zeta' = A zeta + B v_n`` at frozen kinematics."""
    m = disc.m
    A = np.column_stack([unsteady_rates(disc, wc, e, np.zeros(m), U_ref, U_k) for e in np.eye(3 * m)])
    B = np.column_stack([unsteady_rates(disc, wc, np.zeros(3 * m), e, U_ref, U_k) for e in np.eye(m)])
    return A, B


def station_cl(disc, wc, zeta, v_n, U_ref, U_k=None):
    """Sectional lift coefficient at every station."""
    st = UnsteadyAeroState.from_zeta(zeta)
    U_k = np.full(disc.m, U_ref) if U_k is None else U_k
    w = v_n + induced_downwash(disc, wc, st.a, U_ref)
    return sectional_cl(w, st.z1, st.z2, U_k, wc)


def total_lift_coefficient(disc, wc, a):
    """Wing lift coefficient from the circulation, integrating the sine series exactly."""
    area = float(np.sum(disc.chord * disc.ds))
    # integral of sin(n theta) dy over the span: only n = 1 survives, giving pi S / 4
    return wc.a0 * disc.c0 * a[0] * np.pi * disc.S / (4.0 * area)


@dataclass(frozen=True)
class UnsteadySettings:
    m: int = 16
    wc: WagnerConstants = JONES
    u_floor: float = 0.05


def flight_discretization(strips, pf, semispan, chord=None):
    """Lifting-line discretization matching the instantaneous flattened wing."""
    m = len(strips)
    theta, y, _ = station_layout(m, semispan)
    return WingDiscretization(2.0 * semispan, pf.root_chord, theta, y,
                              strips.chord if chord is None else chord)


def station_inputs(pieces, owner, widths, U):
    """Piece flow plus width-weighted normal velocity and speed per station."""
    flow = relative_flow(pieces, U)
    m = len(widths)
    v_n = np.bincount(owner, pieces.ds * flow.v_n, m) / widths
    speed = np.bincount(owner, pieces.ds * flow.speed, m) / widths
    return flow, v_n, speed


def unsteady_step_inputs(state, pf, m, U, chain=None):
    """Kinematic normal velocity per station (relative wind along the upper normal).

    Averaged over the station strip, so it stays continuous while a station
    crosses a hinge.
    """
    if chain is None:
        chain = chain_kinematics(state.q, state.qd, pf.articulation())
    strips, _ = llt_strips(state, pf, m, chain)
    pieces, owner = llt_pieces(state, pf, m, chain)
    return station_inputs(pieces, owner, strips.ds, U)[1]


def unsteady_loads(state, pf, zeta, rho, U, settings=UnsteadySettings(), lift_scale=1.0,
                   chain=None):
    """Loads and ``zeta'`` on the flapping wing.

    Lift uses the Wagner sectional coefficient and drag the Dickinson
    coefficient at the local angle of attack. The station coefficient is
    applied on every hinge-cut piece of the station with that piece's own
    flow direction. ``lift_scale`` multiplies the lift part only (used to
    check affinity in ``zeta``).
    """
    wc = settings.wc
    m = settings.m
    if chain is None:
        chain = chain_kinematics(state.q, state.qd, pf.articulation())
    strips, _ = llt_strips(state, pf, m, chain)
    pieces, owner = llt_pieces(state, pf, m, chain)
    flow, v_n, speed = station_inputs(pieces, owner, strips.ds, U)
    chord = np.bincount(owner, pieces.ds * pieces.chord, m) / strips.ds
    disc = flight_discretization(strips, pf, 0.5 * float(np.sum(strips.ds)), chord)
    U_ref = max(float(U), settings.u_floor)
    U_k = np.maximum(speed, settings.u_floor)
    st = UnsteadyAeroState.from_zeta(zeta)
    adot, w = fourier_rates(disc, wc, st.a, st.z1, st.z2, v_n, U_ref, U_k)
    z1d, z2d = lag_state_rates(st.z1, st.z2, w, U_k, disc.b, wc)
    cl = sectional_cl(w, st.z1, st.z2, U_k, wc) * lift_scale
    loads = strip_loads(pieces, flow, cl[owner], dickinson_cd(flow.alpha), rho, state.p)
    loads.cl = cl
    loads.gamma = circulation(disc, wc, st.a, disc.y, U_ref)
    loads.stations = strips
    return loads, np.concatenate([adot, z1d, z2d])


def duhamel_lag_states(t, w, U, b, wc=JONES):
    """Lag states by trapezoidal quadrature of the convolution integral.

    ``z_i(t) = int_0^t (psi_i eps_i U/b) exp(-eps_i U (t - tau)/b) w(tau) dtau``
    on a uniform grid ``t``.
    """
    from scipy.signal import fftconvolve

    t = np.asarray(t, dtype=float)
    w = np.asarray(w, dtype=float)
    dt = t[1] - t[0]
    out = []
    for psi, eps in ((wc.psi1, wc.eps1), (wc.psi2, wc.eps2)):
        r = eps * U / b
        K = psi * r * np.exp(-r * (t - t[0]))
        full = fftconvolve(K, w)[:len(t)]
        z = dt * (full - 0.5 * K * w[0] - 0.5 * K[0] * w)
        z[0] = 0.0
        out.append(z)
    return out[0], out[1]
