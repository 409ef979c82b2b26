"""Planar kinetic-sculpture linkage that turns one motor into the flapping gait.

The mechanism is described as a set of rigid planar links. Each link has a
base joint, an absolute angle variable and one or more *arms* reaching other
joints. Joints reached by two different links close a loop; with the default
topology these are joints 4, 7 and 10, giving six scalar closure equations
plus the motor equation ``qdd[0] = u`` for the seven joint angles

    (q1, q2, q3, q5, q6, q8, q9)

Joint 5 is the shoulder and joint 6 the elbow. The gait angles handed to the
body dynamics are linear in the joint angles (``gait = C q + d``), so the gait
accelerations are ``C qdd``.

A prescribed sinusoidal gait is provided as well for running the aerodynamics
without any linkage geometry.
"""
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import AssemblyError, SingularLinkageError

ANGLE_NAMES = ("q1", "q2", "q3", "q5", "q6", "q8", "q9")

COND_LIMIT = 1e12
PROJECTION_TOL = 1e-9


@dataclass(frozen=True)
class Link:
    """Rigid planar link rotating about ``base`` with absolute angle ``angle``.

    ``arms`` maps each other joint on the link to ``(length, offset)``: the
    joint sits at ``base + length * [cos, sin](q[angle] + offset)``.
    """

    name: str
    base: int
    angle: int
    arms: dict


@dataclass(frozen=True)
class LinkageConfig:
    pivots: dict
    links: tuple
    reference_angles: np.ndarray
    driver: int = 0
    gait_matrix: np.ndarray = field(default_factory=lambda: np.zeros((2, 7)))
    gait_offset: np.ndarray = field(default_factory=lambda: np.zeros(2))

    def __post_init__(self):
        for link in self.links:
            for length, _ in link.arms.values():
                if not length > 0:
                    raise ValueError(f"link '{link.name}' has non-positive length {length}")
        object.__setattr__(self, "_paths", _build_paths(self))

    @property
    def n_angles(self):
        return len(self.reference_angles)

    @property
    def joints(self):
        return sorted(self._paths[0])

    @property
    def link_lengths(self):
        return {link.name: tuple(arm[0] for arm in link.arms.values()) for link in self.links}

    @property
    def joint_topology(self):
        return {link.name: (link.base, tuple(link.arms)) for link in self.links}

    @classmethod
    def from_reference_pose(cls, points, topology=None, **kwargs):
        """Derive link lengths and arm offsets from joint positions at the reference pose.

        Parameters
        ----------
        points : dict
            Joint id -> 2D position for every joint in the topology.
        topology : sequence of (name, base, angle_index, arm_joints), optional
            The first arm of each link defines its angle. Defaults to
            :data:`DEFAULT_TOPOLOGY`.
        """
        topology = DEFAULT_TOPOLOGY if topology is None else topology
        points = {j: np.asarray(p, dtype=float) for j, p in points.items()}
        n = 1 + max(t[2] for t in topology)
        ref = np.zeros(n)
        links = []
        for name, base, angle, arm_joints in topology:
            arms = {}
            for k, joint in enumerate(arm_joints):
                d = points[joint] - points[base]
                heading = np.arctan2(d[1], d[0])
                if k == 0:
                    ref[angle] = heading
                arms[joint] = (float(np.hypot(d[0], d[1])), float(heading - ref[angle]))
            links.append(Link(name, base, angle, arms))
        bases = {t[1] for t in topology}
        reached = {j for t in topology for j in t[3]}
        pivots = {j: points[j].copy() for j in sorted(bases - reached)}
        return cls(pivots=pivots, links=tuple(links), reference_angles=ref, **kwargs)


# (name, base joint, angle index, arm joints); angle indices follow ANGLE_NAMES
DEFAULT_TOPOLOGY = (
    ("crank", 1, 0, (2,)),
    ("coupler", 2, 1, (4, 3)),
    ("connector", 3, 2, (7,)),
    ("humerus", 5, 3, (4, 6)),
    ("forearm", 6, 4, (10,)),
    ("rocker", 8, 5, (9,)),
    ("radius", 9, 6, (7, 10)),
)

# Reference pose of the bundled geometry, millimetres. Grashof crank-rocker
# (joints 1-2-4-5) driving the humerus, plus a near-parallelogram radius link
# folding the forearm; assembles over the full crank revolution.
DEFAULT_POSE_MM = {
    1: (-20.0, -5.0),
    2: (-15.488961, -1.043925),
    3: (-3.119978, 0.37409),
    4: (-2.083778, 11.817693),
    5: (0.0, 0.0),
    6: (45.0, 0.0),
    7: (4.801104, 7.889313),
    8: (-14.68, 11.28),
    9: (8.4, 3.85),
    10: (44.548766, 17.704251),
}


def gait_map(shoulder_sign=-1.0, shoulder_offset=np.deg2rad(130.0),
             elbow_sign=1.0, elbow_offset=np.deg2rad(38.5)):
    """Matrix and offset giving (shoulder, elbow) from the default joint angles.

    shoulder = shoulder_sign * (q5 - shoulder_offset)
    elbow = elbow_sign * ((q6 - q5) - elbow_offset)
    """
    C = np.zeros((2, 7))
    C[0, 3] = shoulder_sign
    C[1, 4] = elbow_sign
    C[1, 3] = -elbow_sign
    d = np.array([-shoulder_sign * shoulder_offset, -elbow_sign * elbow_offset])
    return C, d


def default_linkage():
    """Bundled plausible geometry (link lengths are not published for the robot)."""
    points = {j: np.array(p) / 1000.0 for j, p in DEFAULT_POSE_MM.items()}
    C, d = gait_map()
    return LinkageConfig.from_reference_pose(points, gait_matrix=C, gait_offset=d)


def _build_paths(cfg):
    """Chains of (angle index, length, offset) from a ground pivot to every joint.

    Returns ``(primary, loops)`` where ``primary[j] = (pivot, idx, L, beta)`` and
    ``loops`` lists ``(joint, path_a, path_b)`` for every closure.
    """
    primary = {j: (np.asarray(p, float), np.zeros(0, int), np.zeros(0), np.zeros(0))
               for j, p in cfg.pivots.items()}
    loops = []
    pending = list(cfg.links)
    while pending:
        progressed = False
        for link in list(pending):
            if link.base not in primary:
                continue
            pivot, idx, L, beta = primary[link.base]
            for joint, (length, offset) in link.arms.items():
                path = (pivot, np.append(idx, link.angle), np.append(L, length),
                        np.append(beta, offset))
                if joint in primary:
                    loops.append((joint, primary[joint], path))
                else:
                    primary[joint] = path
            pending.remove(link)
            progressed = True
        if not progressed:
            raise ValueError("linkage topology is not connected to a ground pivot")
    return primary, tuple(loops)


def _path_point(path, q):
    pivot, idx, L, beta = path
    a = q[idx] + beta
    return pivot + np.array([np.dot(L, np.cos(a)), np.dot(L, np.sin(a))])


def _path_jacobian(path, q, n):
    _, idx, L, beta = path
    a = q[idx] + beta
    J = np.zeros((2, n))
    np.add.at(J[0], idx, -L * np.sin(a))
    np.add.at(J[1], idx, L * np.cos(a))
    return J


def _path_curvature(path, q, qd):
    # acceleration of the point with qdd = 0
    _, idx, L, beta = path
    a = q[idx] + beta
    w2 = qd[idx] ** 2
    return -np.array([np.dot(L * w2, np.cos(a)), np.dot(L * w2, np.sin(a))])


def forward_kinematics(cfg, q, tol=1e-6):
    """Body-frame joint positions for joint angles ``q``.

    Returns
    -------
    dict
        Joint id -> 2D position, computed along each joint's primary chain.

    Raises
    ------
    AssemblyError
        If any loop fails to close by more than ``tol`` metres.
    """
    q = np.asarray(q, dtype=float)
    primary, loops = cfg._paths
    pos = {j: _path_point(path, q) for j, path in primary.items()}
    for joint, pa, pb in loops:
        gap = np.linalg.norm(_path_point(pa, q) - _path_point(pb, q))
        if not gap <= tol:
            raise AssemblyError(f"loop at joint {joint} open by {gap:.3e} m")
    return pos


def joint_velocities(cfg, q, qd):
    """Body-frame joint velocities, joint id -> 2D velocity."""
    q = np.asarray(q, dtype=float)
    qd = np.asarray(qd, dtype=float)
    primary, _ = cfg._paths
    return {j: _path_jacobian(path, q, cfg.n_angles) @ qd for j, path in primary.items()}


def loop_residual(cfg, q):
    """Stacked closure residuals ``p_j^a - p_j^b`` for every loop (metres)."""
    q = np.asarray(q, dtype=float)
    _, loops = cfg._paths
    return np.concatenate([_path_point(pa, q) - _path_point(pb, q) for _, pa, pb in loops])


def constraint_jacobian(cfg, q):
    q = np.asarray(q, dtype=float)
    n = cfg.n_angles
    _, loops = cfg._paths
    return np.vstack([_path_jacobian(pa, q, n) - _path_jacobian(pb, q, n) for _, pa, pb in loops])


def _constraint_bias(cfg, q, qd):
    _, loops = cfg._paths
    return np.concatenate([_path_curvature(pa, q, qd) - _path_curvature(pb, q, qd)
                           for _, pa, pb in loops])


def _closure_solve(cfg, q, fixed, max_iter=50, tol=1e-13):
    """Newton iteration on the free angles with ``q[fixed]`` held."""
    q = np.array(q, dtype=float)
    free = np.setdiff1d(np.arange(cfg.n_angles), fixed)
    for _ in range(max_iter):
        r = loop_residual(cfg, q)
        if np.max(np.abs(r)) < tol:
            return q
        J = constraint_jacobian(cfg, q)[:, free]
        step, *_ = np.linalg.lstsq(J, -r, rcond=None)
        q[free] += step
    r = loop_residual(cfg, q)
    if np.max(np.abs(r)) > 1e-10:
        raise AssemblyError(f"closure solve did not converge (residual {np.max(np.abs(r)):.3e} m)")
    return q


def assemble(cfg, driver_angle=None, guess=None):
    """Solve the closure equations for a given motor angle.

    Starts from ``guess`` (the reference angles by default), so the branch
    nearest to it is selected.
    """
    q = np.array(cfg.reference_angles if guess is None else guess, dtype=float)
    if driver_angle is not None:
        q[cfg.driver] = driver_angle
    return _closure_solve(cfg, q, [cfg.driver])


def consistent_rates(cfg, q, driver_rate):
    """Joint rates satisfying the velocity-level closure for a given motor rate."""
    n = cfg.n_angles
    A = np.zeros((n, n))
    A[:-1] = constraint_jacobian(cfg, q)
    A[-1, cfg.driver] = 1.0
    rhs = np.zeros(n)
    rhs[-1] = driver_rate
    return np.linalg.solve(A, rhs)


def solve_joint_accelerations(cfg, q, qd, u):
    """Joint accelerations from the acceleration-level closure and ``qdd[driver] = u``.

    Raises
    ------
    SingularLinkageError
        If the 7x7 constraint matrix has condition number above 1e12.
    """
    q = np.asarray(q, dtype=float)
    qd = np.asarray(qd, dtype=float)
    n = cfg.n_angles
    A = np.zeros((n, n))
    A[:-1] = constraint_jacobian(cfg, q)
    A[-1, cfg.driver] = 1.0
    cond = np.linalg.cond(A)
    if not cond < COND_LIMIT:
        raise SingularLinkageError(f"linkage singular (condition number {cond:.3e})", condition=cond)
    rhs = np.empty(n)
    rhs[:-1] = -_constraint_bias(cfg, q, qd)
    rhs[-1] = u
    qdd = np.linalg.solve(A, rhs)
    qdd[cfg.driver] = u
    return qdd


@dataclass(frozen=True)
class LinkageState:
    """Joint angles and rates of the linkage (angles unwrapped)."""

    q: np.ndarray
    qd: np.ndarray
    u: float = 0.0


@dataclass(frozen=True)
class GaitOutput:
    """Shoulder/elbow angles, rates and accelerations; ``y`` is the accelerations."""

    angles: np.ndarray
    rates: np.ndarray
    accelerations: np.ndarray

    @property
    def y(self):
        return self.accelerations


def initial_state(cfg, driver_angle=None, driver_rate=0.0):
    q = assemble(cfg, driver_angle)
    return LinkageState(q=q, qd=consistent_rates(cfg, q, driver_rate))


def gait_output(cfg, q, qd, qdd):
    C = cfg.gait_matrix
    return GaitOutput(C @ q + cfg.gait_offset, C @ qd, C @ qdd)


def project(cfg, q, qd, tol=PROJECTION_TOL):
    """Return ``(q, qd)`` moved back onto the closure manifold if they drifted.

    The motor angle and rate are held; the other angles are corrected by
    Gauss-Newton and the rates by solving the velocity constraint.
    """
    q = np.asarray(q, dtype=float)
    qd = np.asarray(qd, dtype=float)
    if np.max(np.abs(loop_residual(cfg, q))) > tol:
        q = _closure_solve(cfg, q, [cfg.driver])
    if np.max(np.abs(constraint_jacobian(cfg, q) @ qd)) > tol:
        qd = consistent_rates(cfg, q, qd[cfg.driver])
    return q, qd


def step_kinematics(cfg, state, u, dt, project_tol=PROJECTION_TOL):
    """Advance the linkage one RK4 step of length ``dt``.

    ``u`` is the motor acceleration, either constant or a callable of the time
    elapsed since the start of the step.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    ufun = u if callable(u) else (lambda s, _u=float(u): _u)

    def rates(s, q, qd):
        return qd, solve_joint_accelerations(cfg, q, qd, ufun(s))

    q0, v0 = state.q, state.qd
    k1q, k1v = rates(0.0, q0, v0)
    k2q, k2v = rates(0.5 * dt, q0 + 0.5 * dt * k1q, v0 + 0.5 * dt * k1v)
    k3q, k3v = rates(0.5 * dt, q0 + 0.5 * dt * k2q, v0 + 0.5 * dt * k2v)
    k4q, k4v = rates(dt, q0 + dt * k3q, v0 + dt * k3v)
    q = q0 + dt / 6.0 * (k1q + 2 * k2q + 2 * k3q + k4q)
    qd = v0 + dt / 6.0 * (k1v + 2 * k2v + 2 * k3v + k4v)
    q, qd = project(cfg, q, qd, project_tol)
    return LinkageState(q=q, qd=qd, u=float(ufun(dt)))


@dataclass(frozen=True)
class GaitProfile:
    """Sinusoidal shoulder and elbow angles, radians: ``offset + A sin(2 pi f t + phase)``."""

    frequency: float
    shoulder_amplitude: float = 0.0
    shoulder_offset: float = 0.0
    shoulder_phase: float = 0.0
    elbow_amplitude: float = 0.0
    elbow_offset: float = 0.0
    elbow_phase: float = 0.0

    def without_fold(self):
        return replace(self, elbow_amplitude=0.0, elbow_offset=0.0)


def prescribed_gait(t, profile):
    """Exact angles, rates and accelerations of a sinusoidal gait at time ``t``."""
    w = 2.0 * np.pi * profile.frequency
    amp = np.array([profile.shoulder_amplitude, profile.elbow_amplitude])
    off = np.array([profile.shoulder_offset, profile.elbow_offset])
    ph = w * t + np.array([profile.shoulder_phase, profile.elbow_phase])
    s, c = np.sin(ph), np.cos(ph)
    return GaitOutput(off + amp * s, amp * w * c, -amp * w * w * s)
