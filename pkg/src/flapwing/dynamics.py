"""Constrained equations of motion of the body and its four wing segments.

Generalized velocities are ``v = (pdot_B[3], qdot_s, qdot_e, omega_B[3])``
with ``omega_B`` in the body frame; accelerations ``a`` follow the same
layout. The equations solved are

    M(q, R) a = h(q, v, R) + u_a + Jc^T lam
    Jc a = y

where ``Jc`` selects the shoulder and elbow accelerations. ``M`` and ``h``
come from projecting the Newton-Euler equations of each body onto the
generalized velocities, which gives the same result as the Euler-Lagrange
derivation with body-frame angular velocity.

Frames: inertial x forward, y left, z up. The left wing extends along +y;
the right wing is its mirror image through the body x-z plane.
"""
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import SingularKKTError

N_GEN = 8
IDX_P = slice(0, 3)
IDX_Q = slice(3, 5)
IDX_W = slice(5, 8)
KKT_COND_LIMIT = 1e12
ORTHO_TOL = 1e-6

MIRROR = np.diag([1.0, -1.0, 1.0])
SIDES = (1, -1)  # left, right


def cross(a, b):
    """Cross product over the last axis; much cheaper than ``np.cross`` for small arrays."""
    a0, a1, a2 = a[..., 0], a[..., 1], a[..., 2]
    b0, b1, b2 = b[..., 0], b[..., 1], b[..., 2]
    c0 = a1 * b2 - a2 * b1
    out = np.empty(np.shape(c0) + (3,))
    out[..., 0] = c0
    out[..., 1] = a2 * b0 - a0 * b2
    out[..., 2] = a0 * b1 - a1 * b0
    return out


def skew(v):
    return np.array([[0.0, -v[2], v[1]],
                     [v[2], 0.0, -v[0]],
                     [-v[1], v[0], 0.0]])


_EYE = np.eye(3)
_SKEWS = {}


def rotation(axis, angle):
    """Rotation matrix about unit ``axis`` by ``angle`` (Rodrigues)."""
    key = (axis[0], axis[1], axis[2])
    KK = _SKEWS.get(key)
    if KK is None:
        K = skew(axis)
        KK = _SKEWS.setdefault(key, (K, K @ K))
    return _EYE + np.sin(angle) * KK[0] + (1.0 - np.cos(angle)) * KK[1]


def exp_so3(phi):
    """Exponential map of a rotation vector, accurate for small angles."""
    theta2 = float(np.dot(phi, phi))
    K = skew(phi)
    if theta2 < 1e-12:
        a = 1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0
        b = 0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0
    else:
        theta = np.sqrt(theta2)
        a = np.sin(theta) / theta
        b = (1.0 - np.cos(theta)) / theta2
    return np.eye(3) + a * K + b * (K @ K)


def integrate_rotation(R, omega, dt):
    """Rotate ``R`` by constant body-frame rate ``omega`` for ``dt``: ``R exp([omega dt])``."""
    return R @ exp_so3(np.asarray(omega, dtype=float) * dt)


def orthonormalize(R):
    """Nearest rotation matrix (polar decomposition)."""
    U, _, Vt = np.linalg.svd(R)
    Rn = U @ Vt
    if np.linalg.det(Rn) < 0:
        U[:, -1] *= -1
        Rn = U @ Vt
    return Rn


@dataclass(frozen=True)
class RigidBody:
    """Mass (kg), inertia about the COM in the body's own frame (kg m^2), COM offset (m)."""

    mass: float
    inertia: np.ndarray
    com: np.ndarray = field(default_factory=lambda: np.zeros(3))


@dataclass(frozen=True)
class MassModel:
    body: RigidBody
    proximal: RigidBody
    distal: RigidBody
    gravity: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, -9.81]))

    def __post_init__(self):
        for name in ("body", "proximal", "distal"):
            rb = getattr(self, name)
            if not rb.mass > 0:
                raise ValueError(f"{name} mass must be positive")
            I = np.asarray(rb.inertia, dtype=float)
            if not np.allclose(I, I.T, rtol=0, atol=1e-15 * max(1.0, np.abs(I).max())):
                raise ValueError(f"{name} inertia must be symmetric")
            if np.linalg.eigvalsh(I).min() <= 0:
                raise ValueError(f"{name} inertia must be positive definite")

    @property
    def total_mass(self):
        return self.body.mass + 2 * (self.proximal.mass + self.distal.mass)

    def without_gravity(self):
        return replace(self, gravity=np.zeros(3))


def plate_inertia(mass, span, chord):
    """Thin plate spanning local y with chord along local x."""
    return mass / 12.0 * np.diag([span ** 2, chord ** 2, span ** 2 + chord ** 2])


def default_mass_model(total=0.0195, fractions=(0.8, 0.06, 0.04), proximal=(0.05, 0.125),
                       distal=(0.08, 0.09)):
    """Default split of the total mass: body 80 %, each proximal 6 %, each distal 4 %."""
    mb, mp, md = (total * f for f in fractions)
    body = RigidBody(mb, mb / 12.0 * np.diag([0.03 ** 2 + 0.02 ** 2, 0.1 ** 2 + 0.02 ** 2,
                                               0.1 ** 2 + 0.03 ** 2]))
    prox = RigidBody(mp, plate_inertia(mp, *proximal), np.array([0.0, proximal[0] / 2, 0.0]))
    dist = RigidBody(md, plate_inertia(md, *distal), np.array([0.0, distal[0] / 2, 0.0]))
    return MassModel(body, prox, dist)


@dataclass(frozen=True)
class Articulation:
    """Left-wing joint geometry in the body frame; the right wing is mirrored.

    ``shoulder`` is the shoulder pivot, ``shoulder_axis`` its rotation axis,
    ``elbow`` the elbow pivot and ``elbow_axis`` its axis, both in the
    proximal-segment frame.
    """

    shoulder: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.02, 0.0]))
    shoulder_axis: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0]))
    elbow: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.05, 0.0]))
    elbow_axis: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0]))

    def side(self, sign):
        """Joint vectors for one side; axes are axial vectors so they mirror with a sign flip."""
        if sign > 0:
            return self.shoulder, self.shoulder_axis, self.elbow, self.elbow_axis
        return (MIRROR @ self.shoulder, -MIRROR @ self.shoulder_axis,
                MIRROR @ self.elbow, -MIRROR @ self.elbow_axis)


@dataclass(frozen=True)
class BodyState:
    """Body COM position/velocity (inertial), gait angles/rates, attitude and body rates."""

    p: np.ndarray
    q: np.ndarray
    v: np.ndarray
    qd: np.ndarray
    R: np.ndarray
    omega: np.ndarray

    @classmethod
    def at_rest(cls, q=(0.0, 0.0), qd=(0.0, 0.0)):
        return cls(np.zeros(3), np.asarray(q, float), np.zeros(3), np.asarray(qd, float),
                   np.eye(3), np.zeros(3))

    @property
    def velocity(self):
        """Generalized velocity vector (8,)."""
        return np.concatenate([self.v, self.qd, self.omega])

    def with_velocity(self, vel):
        vel = np.asarray(vel, dtype=float)
        return replace(self, v=vel[IDX_P], qd=vel[IDX_Q], omega=vel[IDX_W])

    def checked(self):
        """Re-orthonormalize the attitude when it drifted past tolerance."""
        if np.linalg.norm(self.R.T @ self.R - np.eye(3)) > ORTHO_TOL:
            return replace(self, R=orthonormalize(self.R))
        return self


BODY, LEFT_PROXIMAL, LEFT_DISTAL, RIGHT_PROXIMAL, RIGHT_DISTAL = range(5)


@dataclass(frozen=True)
class Chain:
    """Body-frame kinematics of the five bodies (body, L prox, L dist, R prox, R dist).

    Every array has leading dimension 5. ``axis1``/``pivot1`` describe the
    shoulder joint and ``axis2``/``pivot2`` the elbow; joints that do not act
    on a body have zero axes. ``w1``/``w2`` are the joint angular velocities,
    ``omega`` the total angular velocity relative to the body and ``alpha``
    its rate with ``qdd = 0``.
    """

    rotation: np.ndarray
    origin: np.ndarray
    axis1: np.ndarray
    pivot1: np.ndarray
    axis2: np.ndarray
    pivot2: np.ndarray
    w1: np.ndarray
    w2: np.ndarray
    side: np.ndarray

    @property
    def omega(self):
        return self.w1 + self.w2

    @property
    def alpha(self):
        return cross(self.w1, self.w2)


def chain_kinematics(q, qd, art):
    """Poses and joint axes of all bodies for gait angles ``q`` and rates ``qd``."""
    R = np.empty((5, 3, 3))
    origin = np.zeros((5, 3))
    ax1 = np.zeros((5, 3))
    pv1 = np.zeros((5, 3))
    ax2 = np.zeros((5, 3))
    pv2 = np.zeros((5, 3))
    R[0] = np.eye(3)
    for i, sign in ((1, 1), (3, -1)):
        s, a_s, l, a_e = art.side(sign)
        Rp = rotation(a_s, q[0])
        elbow = s + Rp @ l
        R[i] = Rp
        R[i + 1] = Rp @ rotation(a_e, q[1])
        origin[i] = s
        origin[i + 1] = elbow
        ax1[i] = ax1[i + 1] = a_s
        pv1[i] = pv1[i + 1] = pv2[i] = s
        ax2[i + 1] = Rp @ a_e
        pv2[i + 1] = elbow
    return Chain(R, origin, ax1, pv1, ax2, pv2, ax1 * qd[0], ax2 * qd[1],
                 np.array([0, 1, 1, -1, -1]))


def chain_points(chain, seg, rho, qd, bias=False):
    """Jacobian columns, relative velocity and bias acceleration of body-frame points.

    Parameters
    ----------
    chain : Chain
    seg : (k,) int array
        Body index carrying each point.
    rho : (k, 3) array
        Body-frame positions.
    qd : (2,) array
        Shoulder and elbow rates.

    Returns
    -------
    dq : (k, 3, 2) array
        d rho / d (q_s, q_e).
    rhodot : (k, 3) array
    bias : (k, 3) array or None
        Relative acceleration with ``qdd = 0``.
    """
    r1 = rho - chain.pivot1[seg]
    r2 = rho - chain.pivot2[seg]
    dq = np.empty((len(seg), 3, 2))
    dq[:, :, 0] = cross(chain.axis1[seg], r1)
    dq[:, :, 1] = cross(chain.axis2[seg], r2)
    rhodot = dq[:, :, 0] * qd[0] + dq[:, :, 1] * qd[1]
    if not bias:
        return dq, rhodot, None
    w1 = chain.w1[seg]
    w2 = chain.w2[seg]
    w12 = w1 + w2
    e = chain.pivot2[seg] - chain.pivot1[seg]
    # with w2 = 0 the sum collapses to w1 x (w1 x (rho - pivot1))
    acc = cross(w1, cross(w1, e)) + cross(cross(w1, w2), r2) + cross(w12, cross(w12, r2))
    return dq, rhodot, acc


def _mirror_props(mm):
    """COM offsets (5, 3), segment-frame inertias (5, 3, 3) and masses (5,)."""
    key = id(mm)
    hit = _PROPS.get(key)
    if hit is not None and hit[0] is mm:
        return hit[1]
    bodies = (mm.body, mm.proximal, mm.distal, mm.proximal, mm.distal)
    com = np.array([np.asarray(b.com, float) for b in bodies])
    inertia = np.array([np.asarray(b.inertia, float) for b in bodies])
    com[3:] = com[3:] @ MIRROR
    inertia[3:] = MIRROR @ inertia[3:] @ MIRROR
    mass = np.array([b.mass for b in bodies])
    _PROPS.clear()
    _PROPS[key] = (mm, (com, inertia, mass))
    return com, inertia, mass


_PROPS = {}


def _body_terms(state, mm, art, chain=None):
    """Stacked per-body Jacobians and bias terms in the body frame."""
    if chain is None:
        chain = chain_kinematics(state.q, state.qd, art)
    com, inertia, mass = _mirror_props(mm)
    seg = np.arange(5)
    rho = chain.origin + np.einsum("kij,kj->ki", chain.rotation, com)
    dq, rhodot, rel_acc = chain_points(chain, seg, rho, state.qd, bias=True)
    Jv = np.zeros((5, 3, N_GEN))
    Jv[:, :, IDX_P] = state.R.T
    Jv[:, :, IDX_Q] = dq
    Jv[:, 0, 6], Jv[:, 0, 7] = rho[:, 2], -rho[:, 1]
    Jv[:, 1, 5], Jv[:, 1, 7] = -rho[:, 2], rho[:, 0]
    Jv[:, 2, 5], Jv[:, 2, 6] = rho[:, 1], -rho[:, 0]
    Jw = np.zeros((5, 3, N_GEN))
    Jw[:, :, 3] = chain.axis1
    Jw[:, :, 4] = chain.axis2
    Jw[:, :, IDX_W] = np.eye(3)
    I_b = chain.rotation @ inertia @ chain.rotation.transpose(0, 2, 1)
    w = np.broadcast_to(state.omega, (5, 3))
    acc = cross(w, cross(w, rho)) + 2.0 * cross(w, rhodot) + rel_acc
    wb = w + chain.omega
    alp = cross(w, chain.omega) + chain.alpha
    return mass, Jv, Jw, I_b, acc, alp, wb


def dynamics_terms(state, mm, art, chain=None):
    """Mass matrix ``M`` (8x8) and bias forces ``h`` (8,) in one pass."""
    mass, Jv, Jw, I_b, acc, alp, wb = _body_terms(state, mm, art, chain)
    M = np.einsum("k,kia,kib->ab", mass, Jv, Jv) + np.einsum("kia,kij,kjb->ab", Jw, I_b, Jw)
    g_b = state.R.T @ mm.gravity
    Iw = np.einsum("kij,kj->ki", I_b, wb)
    lin = mass[:, None] * (g_b - acc)
    rot = np.einsum("kij,kj->ki", I_b, alp) + cross(wb, Iw)
    h = np.einsum("kia,ki->a", Jv, lin) - np.einsum("kia,ki->a", Jw, rot)
    return 0.5 * (M + M.T), h


def mass_matrix(state, mm, art):
    """8x8 generalized mass matrix."""
    return dynamics_terms(state, mm, art)[0]


def bias_forces(state, mm, art):
    """Coriolis, centrifugal and gravity generalized forces ``h`` (8,)."""
    return dynamics_terms(state, mm, art)[1]


def kinetic_energy(state, mm, art):
    v = state.velocity
    return 0.5 * v @ mass_matrix(state, mm, art) @ v


def constraint_matrix(tethered=False):
    """Selector of the constrained accelerations: gait joints, plus the body when tethered."""
    rows = list(range(N_GEN)) if tethered else [3, 4]
    return np.eye(N_GEN)[rows]


@dataclass(frozen=True)
class AccelSolution:
    a: np.ndarray
    lam: np.ndarray
    Jc: np.ndarray
    condition: float

    def constraint_residual(self, target):
        return float(np.max(np.abs(self.Jc @ self.a - target))) if len(target) else 0.0


def solve_constrained(M, h, u_a, y, Jc=None):
    """Solve for accelerations and constraint forces by Schur-complement elimination.

    ``a = M^-1 (f + Jc^T lam)`` with ``(Jc M^-1 Jc^T) lam = y - Jc M^-1 f`` and
    ``f = h + u_a``; both solves reuse one Cholesky factor of ``M``.

    Raises
    ------
    SingularKKTError
        If ``M`` is not positive definite or the condition number of ``M``
        exceeds 1e12.
    """
    Jc = constraint_matrix() if Jc is None else Jc
    f = h + u_a
    cond = np.linalg.cond(M)
    if not cond < KKT_COND_LIMIT:
        raise SingularKKTError(f"mass matrix ill conditioned ({cond:.3e})", condition=cond)
    try:
        factor = cho_factor(M)
    except np.linalg.LinAlgError as exc:
        raise SingularKKTError(f"mass matrix not positive definite: {exc}", condition=cond) from exc
    Minv_f = cho_solve(factor, f)
    Minv_JcT = cho_solve(factor, Jc.T)
    S = Jc @ Minv_JcT
    try:
        lam = np.linalg.solve(S, y - Jc @ Minv_f)
    except np.linalg.LinAlgError as exc:
        raise SingularKKTError(f"constraint Schur complement singular: {exc}", condition=cond) from exc
    a = Minv_f + Minv_JcT @ lam
    return AccelSolution(a, lam, Jc, cond)


def body_accelerations(state, mm, art, u_a, y, tethered=False, chain=None):
    """Accelerations for a body state given aero forces and gait accelerations."""
    M, h = dynamics_terms(state, mm, art, chain)
    if tethered:
        Jc = constraint_matrix(True)
        target = np.zeros(N_GEN)
        target[IDX_Q] = y
    else:
        Jc = constraint_matrix(False)
        target = np.asarray(y, dtype=float)
    sol = solve_constrained(M, h, u_a, target, Jc)
    return sol, target
