"""Wing planform and spanwise strips.

Each segment has its own frame with local y along the span (outboard) and
local x pointing to the leading edge; the segment axis sits at
``axis_chord_fraction`` of the chord behind the leading edge. Strips are
returned in struct-of-arrays form so the aerodynamic models can work on all
of them at once.

Two layouts are provided. ``blade_strips`` tiles each segment with a fixed
number of elements (the quasi-steady model). ``llt_strips`` places one strip
per lifting-line station over the flattened full span, including the part of
the span covered by the body. ``llt_pieces`` cuts those station strips at
the shoulder and elbow hinges so that a station sliding across a hinge as
the wing folds blends the two plates instead of switching between them.
"""
from dataclasses import dataclass, field

import numpy as np

from .dynamics import Articulation, MIRROR, chain_kinematics, chain_points, cross, rotation


_ARTICULATIONS = {}


@dataclass(frozen=True)
class Planform:
    """Trapezoidal segments; lengths and chords in metres."""

    shoulder_y: float = 0.02
    proximal_length: float = 0.05
    proximal_root_chord: float = 0.12
    proximal_tip_chord: float = 0.13
    distal_length: float = 0.08
    distal_root_chord: float = 0.13
    distal_tip_chord: float = 0.05
    n_proximal: int = 4
    n_distal: int = 4
    axis_chord_fraction: float = 0.25
    shoulder_axis: tuple = (1.0, 0.0, 0.0)
    elbow_axis: tuple = (1.0, 0.0, 0.0)

    def __post_init__(self):
        for name in ("proximal_length", "distal_length", "proximal_root_chord",
                     "proximal_tip_chord", "distal_root_chord", "distal_tip_chord"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.shoulder_y < 0:
            raise ValueError("shoulder_y must be non-negative")
        if self.n_proximal < 2 or self.n_distal < 2:
            raise ValueError("need at least 4 elements per wing side")
        if not 0.0 <= self.axis_chord_fraction <= 1.0:
            raise ValueError("axis_chord_fraction must lie in [0, 1]")

    @property
    def root_chord(self):
        """Chord at the plane of symmetry (body strips use the proximal root chord)."""
        return self.proximal_root_chord

    @property
    def extended_semispan(self):
        return self.shoulder_y + self.proximal_length + self.distal_length

    @property
    def mean_chord(self):
        area = 0.5 * (self.proximal_root_chord + self.proximal_tip_chord) * self.proximal_length \
            + 0.5 * (self.distal_root_chord + self.distal_tip_chord) * self.distal_length
        return area / (self.proximal_length + self.distal_length)

    def articulation(self):
        hit = _ARTICULATIONS.get(self)
        if hit is not None:
            return hit
        ax_s = np.asarray(self.shoulder_axis, dtype=float)
        ax_e = np.asarray(self.elbow_axis, dtype=float)
        art = Articulation(shoulder=np.array([0.0, self.shoulder_y, 0.0]),
                           shoulder_axis=ax_s / np.linalg.norm(ax_s),
                           elbow=np.array([0.0, self.proximal_length, 0.0]),
                           elbow_axis=ax_e / np.linalg.norm(ax_e))
        _ARTICULATIONS[self] = art
        return art

    def chord(self, segment, s):
        """Chord at local span coordinate ``s`` of segment 0 (proximal) or 1 (distal)."""
        s = np.asarray(s, dtype=float)
        if segment == 0:
            L, c0, c1 = self.proximal_length, self.proximal_root_chord, self.proximal_tip_chord
        else:
            L, c0, c1 = self.distal_length, self.distal_root_chord, self.distal_tip_chord
        return c0 + (c1 - c0) * np.clip(s / L, 0.0, 1.0)

    def quarter_chord_x(self, chord):
        # leading edge sits at +axis_fraction*c, quarter chord 0.25c behind it
        return (self.axis_chord_fraction - 0.25) * chord

    def fold_projection(self, q_e):
        """Cosine of the distal segment's spanwise axis onto the proximal one."""
        Re = rotation(self.articulation().elbow_axis, q_e)
        return abs(Re[1, 1])

    def flattened_semispan(self, q_e):
        return self.shoulder_y + self.proximal_length + self.distal_length * self.fold_projection(q_e)


@dataclass
class Strips:
    """Spanwise strips at one instant; arrays have leading dimension ``k``.

    ``jac`` maps the generalized velocity to the inertial quarter-chord
    velocity. ``rho`` is the quarter-chord point in the body frame.
    ``e_c`` points from leading to trailing edge, ``e_n`` to the upper surface.
    """

    chord: np.ndarray
    ds: np.ndarray
    rho: np.ndarray
    p: np.ndarray
    vel: np.ndarray
    e_c: np.ndarray
    e_n: np.ndarray
    jac: np.ndarray
    side: np.ndarray
    edges: np.ndarray = field(default=None)

    def __len__(self):
        return len(self.chord)

    @property
    def area(self):
        return float(np.sum(self.chord * self.ds))


def _assemble(state, rho, dq, rhodot, Rs, chord, ds, side, edges=None):
    """World-frame quantities from body-frame strip data.

    ``Rs`` holds the (k, 3, 3) strip-to-body rotations.
    """
    R = state.R
    k = len(chord)
    jac = np.zeros((k, 3, 8))
    jac[:, :, 0:3] = np.eye(3)
    jac[:, :, 3:5] = np.einsum("ij,kjl->kil", R, dq)
    # -R [rho]x, written out column by column
    for j in range(3):
        jac[:, :, 5 + j] = -cross(rho, np.broadcast_to(np.eye(3)[j], rho.shape)) @ R.T
    vel_b = cross(np.broadcast_to(state.omega, rho.shape), rho) + rhodot
    vel = state.v + vel_b @ R.T
    e_c = -(Rs[:, :, 0] @ R.T)
    e_n = Rs[:, :, 2] @ R.T
    p = state.p + rho @ R.T
    if edges is not None:
        edges = state.p + edges @ R.T
    return Strips(chord, ds, rho, p, vel, e_c, e_n, jac, side, edges)


_LAYOUTS = {}


def _blade_layout(pf):
    """Static strip data: body index, mirrored local points, chords, widths, edge points."""
    hit = _LAYOUTS.get(pf)
    if hit is not None:
        return hit
    seg, local, chord, width, distal, e_local = [], [], [], [], [], []
    for b in (2, 1, 3, 4):  # left distal, left proximal, right proximal, right distal
        d = b in (2, 4)
        n = pf.n_distal if d else pf.n_proximal
        L = pf.distal_length if d else pf.proximal_length
        s = (np.arange(n) + 0.5) * (L / n)
        se = np.linspace(0.0, L, n + 1)
        c = pf.chord(int(d), s)
        pts = np.column_stack([pf.quarter_chord_x(c), s, np.zeros(n)])
        ept = np.column_stack([pf.quarter_chord_x(pf.chord(int(d), se)), se, np.zeros(n + 1)])
        pairs = np.stack([ept[:-1], ept[1:]], axis=1)
        if b < 3:
            # left wing listed tip to root, edges ordered left end first
            pts, c, pairs = pts[::-1], c[::-1], pairs[::-1, ::-1]
        else:
            pts, pairs = pts @ MIRROR, pairs @ MIRROR
        seg.append(np.full(n, b))
        local.append(pts)
        chord.append(c)
        width.append(np.full(n, L / n))
        distal.append(np.full(n, d))
        e_local.append(pairs)
    out = tuple(np.concatenate(a) for a in (seg, local, chord, width, distal, e_local))
    _LAYOUTS[pf] = out
    return out


def blade_strips(state, pf, chain=None):
    """Fixed blade-element layout: ``n_proximal + n_distal`` strips per side.

    Strips run from the left tip to the right tip, like the lifting-line
    stations. Distal widths are projected onto the proximal span direction,
    so the widths of one side sum to the flattened semispan minus the
    shoulder offset. ``edges[i]`` holds the left and right end of strip i.
    """
    if chain is None:
        chain = chain_kinematics(state.q, state.qd, pf.articulation())
    seg, local, chord, width, distal, e_local = _blade_layout(pf)
    Rs = chain.rotation[seg]
    rho = chain.origin[seg] + np.einsum("kij,kj->ki", Rs, local)
    dq, rhodot, _ = chain_points(chain, seg, rho, state.qd)
    ds = np.where(distal, width * pf.fold_projection(state.q[1]), width)
    edges = chain.origin[seg][:, None, :] + np.einsum("kij,kej->kei", Rs, e_local)
    return _assemble(state, rho, dq, rhodot, Rs, chord, ds, chain.side[seg], edges)


def station_layout(m, semispan):
    """Cosine-spaced stations ``y_k = semispan cos(theta_k)``, left tip first, and strip edges."""
    theta = np.arange(1, m + 1) * np.pi / (m + 1)
    y = semispan * np.cos(theta)
    edges = np.concatenate([[semispan], 0.5 * (y[:-1] + y[1:]), [-semispan]])
    return theta, y, edges


def _flat_points(pf, chain, kappa, y):
    """Body index, body-frame quarter-chord points, rotations and chords at flattened ``y``."""
    s_abs = np.abs(y)
    left = y >= 0
    inner = s_abs < pf.shoulder_y
    prox = ~inner & (s_abs < pf.shoulder_y + pf.proximal_length)
    dist = ~inner & ~prox
    local_y = np.where(prox, s_abs - pf.shoulder_y,
                       (s_abs - pf.shoulder_y - pf.proximal_length) / max(kappa, 1e-12))
    chord = np.where(inner, pf.root_chord,
                     np.where(prox, pf.chord(0, local_y), pf.chord(1, local_y)))
    seg = np.where(inner, 0, np.where(prox, 1, 2) + np.where(left, 0, 2))
    local = np.column_stack([pf.quarter_chord_x(chord), np.where(inner, y, local_y),
                             np.zeros(len(y))])
    local[~left & ~inner, 1] *= -1.0
    Rs = chain.rotation[seg]
    rho = chain.origin[seg] + np.einsum("kij,kj->ki", Rs, local)
    return seg, rho, Rs, chord


def llt_strips(state, pf, m, chain=None):
    """One strip per lifting-line station across the flattened full span.

    Returns the strips and the station angles. Strip edges sit midway
    between stations, with the outer edges at the flattened tips, so the
    widths sum to the flattened span. Stations inside the shoulders belong
    to the body and use the root chord.
    """
    if chain is None:
        chain = chain_kinematics(state.q, state.qd, pf.articulation())
    kappa = pf.fold_projection(state.q[1])
    semispan = pf.shoulder_y + pf.proximal_length + pf.distal_length * kappa
    theta, y, ey = station_layout(m, semispan)
    ds = ey[:-1] - ey[1:]
    seg, rho, Rs, chord = _flat_points(pf, chain, kappa, y)
    dq, rhodot, _ = chain_points(chain, seg, rho, state.qd)
    erho = _flat_points(pf, chain, kappa, ey)[1]
    edges = np.stack([erho[:-1], erho[1:]], axis=1)
    return _assemble(state, rho, dq, rhodot, Rs, chord, ds, np.where(y >= 0, 1, -1), edges), theta


def llt_pieces(state, pf, m, chain=None):
    """Station strips cut at the hinges, one sub-strip per plate crossed.

    Returns ``(pieces, owner)`` where ``owner[j]`` is the station of piece
    ``j``. Piece widths of a station add up to the station width, and each
    piece takes the kinematics of its midpoint on its own plate.
    """
    if chain is None:
        chain = chain_kinematics(state.q, state.qd, pf.articulation())
    kappa = pf.fold_projection(state.q[1])
    semispan = pf.shoulder_y + pf.proximal_length + pf.distal_length * kappa
    _, _, ey = station_layout(m, semispan)
    hinge = pf.shoulder_y + pf.proximal_length
    cuts = np.array([hinge, pf.shoulder_y, 0.0, -pf.shoulder_y, -hinge])
    lo, hi, owner = [], [], []
    for k in range(m):
        inside = cuts[(cuts < ey[k]) & (cuts > ey[k + 1])]
        b = np.unique(np.concatenate([[ey[k + 1], ey[k]], inside]))[::-1]  # left tip first
        keep = np.diff(b) < 0
        hi.append(b[:-1][keep])
        lo.append(b[1:][keep])
        owner.append(np.full(keep.sum(), k))
    lo, hi, owner = np.concatenate(lo), np.concatenate(hi), np.concatenate(owner)
    y = 0.5 * (lo + hi)
    seg, rho, Rs, chord = _flat_points(pf, chain, kappa, y)
    dq, rhodot, _ = chain_points(chain, seg, rho, state.qd)
    side = np.where(y >= 0, 1, -1)
    return _assemble(state, rho, dq, rhodot, Rs, chord, hi - lo, side), owner
