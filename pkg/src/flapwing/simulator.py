"""Combined state-space model and fixed-step RK4 marching.

The flat state vector holds, in order: body position (3), gait angles (2),
body velocity (3), gait rates (2), body rates (3), unsteady states (3m),
linkage angles and rates (7 + 7, linkage mode only) and the PI integrator
(1, linkage mode only). The attitude is advanced separately on the rotation
group: every RK4 stage evaluates at ``R0 exp(phi)`` and ``phi`` obeys the
inverse differential of the exponential map (Runge-Kutta-Munthe-Kaas).
"""
from dataclasses import dataclass, field, replace
import logging

import numpy as np

from . import linkage as lk
from .dynamics import (BodyState, default_mass_model, body_accelerations, chain_kinematics, exp_so3,
                       orthonormalize, rotation, ORTHO_TOL)
from .errors import FlapwingError, NonFiniteStateError, NumericalError, SimulationError
from .quasisteady import quasisteady_loads
from .unsteady import UnsteadySettings, unsteady_loads
from .wing import Planform

log = logging.getLogger(__name__)

AERO_MODES = ("quasisteady", "wagner")
GAIT_MODES = ("prescribed", "linkage")


def default_profile(frequency=4.5):
    """Sinusoidal gait: shoulder +-30 deg, elbow folding 0..60 deg on the upstroke."""
    return lk.GaitProfile(frequency=frequency,
                          shoulder_amplitude=np.deg2rad(30.0), shoulder_offset=0.0,
                          shoulder_phase=0.0,
                          elbow_amplitude=np.deg2rad(30.0), elbow_offset=np.deg2rad(30.0),
                          elbow_phase=0.5 * np.pi)


@dataclass(frozen=True)
class SimConfig:
    """Everything needed for one run; SI units, angles in radians."""

    rho: float = 1.225
    U: float = 1.65
    dt: float = 2.5e-4
    duration: float = 1.0
    aero_mode: str = "wagner"
    tethered: bool = True
    gait_mode: str = "prescribed"
    frequency: float = 4.5
    profile: lk.GaitProfile = None
    linkage: lk.LinkageConfig = None
    pi_kp: float = 50.0
    pi_ki: float = 500.0
    pitch: float = 0.0
    mass: object = field(default_factory=default_mass_model)
    planform: Planform = field(default_factory=Planform)
    unsteady: UnsteadySettings = field(default_factory=UnsteadySettings)
    zeta_stride: int = 10

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.duration < 0:
            raise ValueError("duration must be non-negative")
        if self.U < 0:
            raise ValueError("U must be non-negative")
        if self.aero_mode not in AERO_MODES:
            raise ValueError(f"aero_mode must be one of {AERO_MODES}")
        if self.gait_mode not in GAIT_MODES:
            raise ValueError(f"gait_mode must be one of {GAIT_MODES}")
        if self.profile is None:
            object.__setattr__(self, "profile", default_profile(self.frequency))
        if self.gait_mode == "linkage" and self.linkage is None:
            object.__setattr__(self, "linkage", lk.default_linkage())

    @property
    def n_steps(self):
        return int(round(self.duration / self.dt))

    @property
    def n_strips(self):
        if self.aero_mode == "wagner":
            return self.unsteady.m
        return 2 * (self.planform.n_proximal + self.planform.n_distal)

    @property
    def crank_rate(self):
        """Motor target rate: one crank turn per flap cycle."""
        return 2.0 * np.pi * self.frequency


@dataclass(frozen=True)
class FullState:
    t: float
    body: BodyState
    zeta: np.ndarray
    linkage: lk.LinkageState = None
    pi_integral: float = 0.0


class _Layout:
    def __init__(self, cfg):
        m3 = 3 * cfg.unsteady.m
        self.zeta = slice(13, 13 + m3)
        n = 13 + m3
        if cfg.gait_mode == "linkage":
            self.lq = slice(n, n + 7)
            self.lqd = slice(n + 7, n + 14)
            self.pi = n + 14
            n += 15
        else:
            self.lq = self.lqd = None
            self.pi = None
        self.size = n


def pack(state, cfg):
    lay = _Layout(cfg)
    x = np.zeros(lay.size)
    b = state.body
    x[0:3], x[3:5], x[5:8], x[8:10], x[10:13] = b.p, b.q, b.v, b.qd, b.omega
    x[lay.zeta] = state.zeta
    if lay.lq is not None:
        x[lay.lq], x[lay.lqd], x[lay.pi] = state.linkage.q, state.linkage.qd, state.pi_integral
    return x


def unpack(x, R, t, cfg, u=0.0):
    lay = _Layout(cfg)
    body = BodyState(x[0:3], x[3:5], x[5:8], x[8:10], R, x[10:13])
    link = None
    pi = 0.0
    if lay.lq is not None:
        link = lk.LinkageState(x[lay.lq], x[lay.lqd], u)
        pi = float(x[lay.pi])
    return FullState(t, body, x[lay.zeta], link, pi)


def initial_state(cfg):
    m = cfg.unsteady.m
    R = rotation(np.array([0.0, 1.0, 0.0]), -cfg.pitch)
    link = None
    if cfg.gait_mode == "linkage":
        link = lk.initial_state(cfg.linkage, driver_rate=cfg.crank_rate)
        g = lk.gait_output(cfg.linkage, link.q, link.qd, np.zeros(7))
    else:
        g = lk.prescribed_gait(0.0, cfg.profile)
    body = BodyState(np.zeros(3), g.angles.copy(), np.zeros(3), g.rates.copy(), R, np.zeros(3))
    return FullState(0.0, body, np.zeros(3 * m), link, 0.0)


@dataclass
class Evaluation:
    """Everything computed in one derivative evaluation."""

    xdot: np.ndarray
    omega: np.ndarray
    loads: object
    y: np.ndarray
    accel: object
    target: np.ndarray
    u_k: float


def motor_input(cfg, state):
    """PI speed tracking of the crank rate."""
    err = cfg.crank_rate - state.linkage.qd[cfg.linkage.driver]
    return cfg.pi_kp * err + cfg.pi_ki * state.pi_integral


def aero_loads(cfg, state, chain=None):
    """``(loads, zeta_dot)`` for the configured aerodynamic model."""
    if cfg.aero_mode == "wagner":
        return unsteady_loads(state.body, cfg.planform, state.zeta, cfg.rho, cfg.U, cfg.unsteady,
                              chain=chain)
    loads = quasisteady_loads(state.body, cfg.planform, cfg.rho, cfg.U, chain=chain)
    return loads, np.zeros_like(state.zeta)


def derivative(state, cfg):
    """Time derivative of the full state.

    Returns an :class:`Evaluation`; ``xdot`` follows the packed layout and
    ``omega`` is the body rate driving the attitude.
    """
    lay = _Layout(cfg)
    body = state.body
    u_k = 0.0
    if cfg.gait_mode == "linkage":
        u_k = motor_input(cfg, state)
        qdd = lk.solve_joint_accelerations(cfg.linkage, state.linkage.q, state.linkage.qd, u_k)
        y = cfg.linkage.gait_matrix @ qdd
    else:
        y = lk.prescribed_gait(state.t, cfg.profile).accelerations
    art = cfg.planform.articulation()
    chain = chain_kinematics(body.q, body.qd, art)
    loads, zdot = aero_loads(cfg, state, chain)
    sol, target = body_accelerations(body, cfg.mass, art, loads.u_a, y, cfg.tethered, chain)
    a = sol.a
    xdot = np.zeros(lay.size)
    xdot[0:3] = body.v
    xdot[3:5] = body.qd
    xdot[5:8] = a[0:3]
    xdot[8:10] = a[3:5]
    xdot[10:13] = a[5:8]
    if cfg.aero_mode == "wagner":
        xdot[lay.zeta] = zdot
    if lay.lq is not None:
        xdot[lay.lq] = state.linkage.qd
        xdot[lay.lqd] = qdd
        xdot[lay.pi] = cfg.crank_rate - state.linkage.qd[cfg.linkage.driver]
    return Evaluation(xdot, body.omega.copy(), loads, y, sol, target, u_k)


def _dexpinv(phi, w):
    c = np.cross(phi, w)
    return w - 0.5 * c + np.cross(phi, c) / 12.0


def _check_finite(x, R, t, cfg):
    lay = _Layout(cfg)
    blocks = [("body", x[:13]), ("zeta", x[lay.zeta]), ("attitude", R)]
    if lay.lq is not None:
        blocks.append(("linkage", x[lay.lq.start:lay.pi + 1]))
    for name, arr in blocks:
        if not np.all(np.isfinite(arr)):
            raise NonFiniteStateError(f"non-finite {name} state at t={t:.6g}", block=name, t=t)


def rk4_step(state, cfg, dt=None, first=None):
    """One classical RK4 step; the attitude uses the exponential map per stage.

    Returns ``(new_state, first_evaluation)``.
    """
    dt = cfg.dt if dt is None else dt
    if not dt > 0:
        raise ValueError("dt must be positive")
    x0 = pack(state, cfg)
    R0 = state.body.R
    t0 = state.t
    ks, kphi = [], []
    evals = []
    phi = np.zeros(3)
    for i, c in enumerate((0.0, 0.5, 0.5, 1.0)):
        if i == 0:
            x, R = x0, R0
        else:
            x = x0 + c * dt * ks[-1]
            phi = c * dt * kphi[-1]
            R = R0 @ exp_so3(phi)
        _check_finite(x, R, t0 + c * dt, cfg)
        st = unpack(x, R, t0 + c * dt, cfg)
        try:
            ev = first if (i == 0 and first is not None) else derivative(st, cfg)
        except FlapwingError as exc:
            raise SimulationError(f"t={t0:.6g} stage k{i + 1}: {exc}", t=t0, phase=f"k{i + 1}") from exc
        evals.append(ev)
        ks.append(ev.xdot)
        kphi.append(_dexpinv(phi, ev.omega))
    x1 = x0 + dt / 6.0 * (ks[0] + 2 * ks[1] + 2 * ks[2] + ks[3])
    if cfg.tethered:
        # the mount holds the pose; round-off accelerations must not move it
        x1[0:3] = x0[0:3]
        R1 = R0
    else:
        R1 = R0 @ exp_so3(dt / 6.0 * (kphi[0] + 2 * kphi[1] + 2 * kphi[2] + kphi[3]))
        if np.linalg.norm(R1.T @ R1 - np.eye(3)) > ORTHO_TOL:
            R1 = orthonormalize(R1)
    _check_finite(x1, R1, t0 + dt, cfg)
    new = unpack(x1, R1, t0 + dt, cfg, evals[-1].u_k)
    new = _constrain(new, cfg)
    return new, evals[0]


def _constrain(state, cfg):
    """Project the linkage and pin the gait angles to their exact values."""
    body = state.body
    if cfg.gait_mode == "linkage":
        try:
            q, qd = lk.project(cfg.linkage, state.linkage.q, state.linkage.qd)
        except NumericalError as exc:
            raise SimulationError(f"t={state.t:.6g} projection: {exc}", t=state.t,
                                  phase="projection") from exc
        g = lk.gait_output(cfg.linkage, q, qd, np.zeros(7))
        link = replace(state.linkage, q=q, qd=qd)
        state = replace(state, linkage=link)
    else:
        g = lk.prescribed_gait(state.t, cfg.profile)
    if cfg.tethered:
        body = replace(body, v=np.zeros(3), omega=np.zeros(3))
    body = replace(body, q=g.angles.copy(), qd=g.rates.copy())
    return replace(state, body=body)


@dataclass
class ForceRecord:
    """Time series produced by :func:`run`.

    Forces and moments are inertial; moments are about the body centre of
    mass. Lift is the +z force and drag the force along the freestream
    (-x). ``gamma`` and ``edges`` hold the bound circulation per strip and
    the strip end points, for shedding the wake.
    """

    t: np.ndarray
    force: np.ndarray
    moment: np.ndarray
    cl: np.ndarray
    gamma: np.ndarray
    edges: np.ndarray
    gait: np.ndarray
    constraint_residual: np.ndarray
    loop_residual: np.ndarray
    zeta_t: np.ndarray
    zeta: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def lift(self):
        return self.force[:, 2]

    @property
    def drag(self):
        return -self.force[:, 0]

    @property
    def side(self):
        return self.force[:, 1]

    def __len__(self):
        return len(self.t)


def _empty_record(cfg, n):
    k = cfg.n_strips
    m3 = 3 * cfg.unsteady.m
    nz = (n + cfg.zeta_stride - 1) // cfg.zeta_stride if n else 0
    return ForceRecord(np.zeros(n), np.zeros((n, 3)), np.zeros((n, 3)), np.zeros((n, k)),
                       np.zeros((n, k)), np.zeros((n, k, 2, 3)), np.zeros((n, 4)), np.zeros(n),
                       np.zeros(n), np.zeros(nz), np.zeros((nz, m3)),
                       meta={"U": cfg.U, "frequency": cfg.frequency, "dt": cfg.dt,
                             "aero_mode": cfg.aero_mode, "gait_mode": cfg.gait_mode,
                             "tethered": cfg.tethered, "rho": cfg.rho,
                             "mean_chord": cfg.planform.mean_chord})


def run(cfg, progress=None, state=None):
    """March the model for ``cfg.duration`` seconds and record loads every step.

    Parameters
    ----------
    cfg : SimConfig
    progress : callable, optional
        Called as ``progress(step, n_steps)`` about every 5 % of the run.
    state : FullState, optional
        Starting state; defaults to :func:`initial_state`.
    """
    n = cfg.n_steps
    rec = _empty_record(cfg, n)
    state = initial_state(cfg) if state is None else state
    every = max(1, n // 20)
    j = 0
    for i in range(n):
        new, ev = rk4_step(state, cfg)
        L = ev.loads
        rec.t[i] = state.t
        rec.force[i] = L.force
        rec.moment[i] = L.moment
        rec.cl[i] = L.cl
        rec.gamma[i] = L.gamma
        rec.edges[i] = (L.strips if L.stations is None else L.stations).edges
        rec.gait[i] = np.r_[state.body.q, state.body.qd]
        rec.constraint_residual[i] = ev.accel.constraint_residual(ev.target)
        if cfg.gait_mode == "linkage":
            rec.loop_residual[i] = np.max(np.abs(lk.loop_residual(cfg.linkage, new.linkage.q)))
        if i % cfg.zeta_stride == 0:
            rec.zeta_t[j] = state.t
            rec.zeta[j] = state.zeta
            j += 1
        state = new
        if progress is not None and (i + 1) % every == 0:
            progress(i + 1, n)
    log.debug("run finished at t=%.4f", state.t)
    rec.meta["final_t"] = state.t
    return rec
