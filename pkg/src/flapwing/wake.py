"""Frozen vortex-lattice wake rebuilt from the recorded bound circulation.

Every recorded instant contributes one line of lattice nodes: the strip end
points at that instant, convected downstream at the freestream speed until
the sampling time. Consecutive lines bound vortex rings whose strength is
the strip circulation at the newer line. Neighbouring rings share their
edges, so the lattice is stored as net segment strengths:

* spanwise segments: ``Gamma_k - Gamma_{k+1}`` (circulation shed in time),
  the newest line carrying the bound vortex and the oldest the starting
  vortex;
* streamwise segments: ``Gamma_{i-1} - Gamma_i`` between neighbouring strips
  (circulation trailed along the span), with zero circulation outside each
  contiguous run of strips.

Positive strip circulation produces lift for flow along -x. Bound segments
run from the left (+y) end of a strip to its right end.
"""
from dataclasses import dataclass, field
import logging

import numpy as np

from .errors import EmptyHistoryError
from .kernels import segment_velocities

log = logging.getLogger(__name__)

BOUND, SHED, TRAILING, STARTING = 0, 1, 2, 3


@dataclass(frozen=True)
class WakeSheet:
    """Straight vortex segments of the wake at sampling time ``t``."""

    a: np.ndarray
    b: np.ndarray
    gamma: np.ndarray
    kind: np.ndarray
    t_shed: np.ndarray
    t: float = 0.0
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.gamma)

    def scaled(self, factor):
        return WakeSheet(self.a, self.b, self.gamma * factor, self.kind, self.t_shed, self.t, self.meta)

    def combined(self, other):
        cat = lambda u, v: np.concatenate([u, v])  # noqa: E731
        return WakeSheet(cat(self.a, other.a), cat(self.b, other.b), cat(self.gamma, other.gamma),
                         cat(self.kind, other.kind), cat(self.t_shed, other.t_shed),
                         max(self.t, other.t), dict(self.meta))


def strip_runs(edges, tol=1e-9):
    """Split strips into runs whose neighbouring end points coincide."""
    runs, start = [], 0
    for i in range(len(edges) - 1):
        if np.linalg.norm(edges[i, 1] - edges[i + 1, 0]) > tol:
            runs.append((start, i + 1))
            start = i + 1
    runs.append((start, len(edges)))
    return runs


def lattice(times, gamma, edges, U, t_now=None, runs=None):
    """Build a wake sheet from circulation and strip end points over time.

    Parameters
    ----------
    times : (n,) array
        Shedding instants, ascending.
    gamma : (n, k) array
        Strip circulation at each instant.
    edges : (n, k, 2, 3) array
        Left and right end points of every strip at each instant (inertial).
    U : float
        Convection speed along -x.
    t_now : float, optional
        Sampling time; defaults to the last instant.
    runs : list of (start, stop), optional
        Contiguous strip runs; detected from the first instant if omitted.
    """
    times = np.asarray(times, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    edges = np.asarray(edges, dtype=float)
    n = len(times)
    if n == 0:
        raise EmptyHistoryError("no circulation history to shed")
    t_now = times[-1] if t_now is None else float(t_now)
    runs = strip_runs(edges[0]) if runs is None else runs
    shift = np.zeros((n, 3))
    shift[:, 0] = -U * (t_now - times)
    A, B, G, K, T = [], [], [], [], []
    for start, stop in runs:
        g = gamma[:, start:stop]
        nodes = np.concatenate([edges[:, start:stop, 0], edges[:, stop - 1:stop, 1]], axis=1)
        nodes = nodes + shift[:, None, :]
        # spanwise segments on every line
        diff = np.empty_like(g)
        diff[-1] = g[-1]
        if n > 1:
            diff[:-1] = g[:-1] - g[1:]
            diff[0] = -g[1]
        A.append(nodes[:, :-1].reshape(-1, 3))
        B.append(nodes[:, 1:].reshape(-1, 3))
        G.append(diff.ravel())
        kind = np.full(n, SHED)
        kind[0] = STARTING
        kind[-1] = BOUND
        K.append(np.repeat(kind, g.shape[1]))
        T.append(np.repeat(times, g.shape[1]))
        if n < 2:
            continue
        # streamwise segments of rings 1..n-1, newer line to older line
        padded = np.pad(g[1:], ((0, 0), (1, 1)))
        trail = padded[:, :-1] - padded[:, 1:]
        A.append(nodes[1:].reshape(-1, 3))
        B.append(nodes[:-1].reshape(-1, 3))
        G.append(trail.ravel())
        K.append(np.full(trail.size, TRAILING))
        T.append(np.repeat(times[1:], trail.shape[1]))
    return WakeSheet(np.concatenate(A), np.concatenate(B), np.concatenate(G),
                     np.concatenate(K), np.concatenate(T), t_now,
                     {"U": U, "runs": [list(r) for r in runs]})


def horseshoe(left, right, gamma, length=1e6, direction=(-1.0, 0.0, 0.0)):
    """Bound segment from ``left`` to ``right`` with two trailing legs of ``length``.

    The legs run along ``direction`` (downstream), so the sheet approximates
    the classical horseshoe vortex when ``length`` is large.
    """
    left = np.asarray(left, dtype=float)
    right = np.asarray(right, dtype=float)
    d = np.asarray(direction, dtype=float)
    d = length * d / np.linalg.norm(d)
    a = np.array([left + d, left, right])
    b = np.array([left, right, right + d])
    return WakeSheet(a, b, np.full(3, float(gamma)), np.array([TRAILING, BOUND, TRAILING]),
                     np.zeros(3), 0.0, {"horseshoe": True})


def convection_speed(record):
    """Freestream speed, or the mean speed of the wing root end points at hover."""
    U = float(record.meta.get("U", 0.0))
    if U > 0:
        return U, False
    if len(record.t) < 2:
        return 0.0, True
    dt = np.diff(record.t)[:, None]
    root = record.edges[:, len(record.edges[0]) // 2, 0]
    speed = float(np.mean(np.linalg.norm(np.diff(root, axis=0), axis=-1) / dt[:, 0]))
    if speed < 1e-9:
        # clamped root: fall back to the mean speed of all strip end points
        pts = record.edges.reshape(len(record.t), -1, 3)
        speed = float(np.mean(np.linalg.norm(np.diff(pts, axis=0), axis=-1) / dt))
    log.warning("hover wake: convecting at %.4g m/s (degenerate)", speed)
    return speed, True


def shed_wake(record, stride=1, t_end=None, t_start=None):
    """Wake sheet from a simulation record.

    Parameters
    ----------
    record : ForceRecord
    stride : int
        Use every ``stride``-th recorded instant as a lattice line.
    t_end, t_start : float, optional
        Restrict the history; the wake is sampled at the last instant used.

    Raises
    ------
    EmptyHistoryError
        If the selected history is empty.
    """
    t = np.asarray(record.t)
    sel = np.ones(len(t), dtype=bool)
    if t_end is not None:
        sel &= t <= t_end + 1e-12
    if t_start is not None:
        sel &= t >= t_start - 1e-12
    idx = np.flatnonzero(sel)
    if len(idx) == 0:
        raise EmptyHistoryError("record holds no circulation history in the requested window")
    # keep the newest instant so the bound vortex sits on the wing
    idx = idx[::-1][::max(1, int(stride))][::-1]
    U, degenerate = convection_speed(record)
    sheet = lattice(t[idx], record.gamma[idx], record.edges[idx], U)
    sheet.meta["degenerate"] = degenerate
    return sheet


def biot_savart_segment(p, a, b, gamma, core=0.0):
    """Velocity induced at ``p`` by one straight segment from ``a`` to ``b``."""
    return segment_velocities(np.atleast_2d(p), np.atleast_2d(a), np.atleast_2d(b),
                              np.atleast_1d(float(gamma)), core)[0]


@dataclass(frozen=True)
class PlaneSpec:
    """Sampling plane normal to x at ``x``, spanning ``y_range`` and ``z_range``."""

    x: float
    y_range: tuple
    z_range: tuple
    ny: int = 41
    nz: int = 31

    def __post_init__(self):
        if self.ny < 3 or self.nz < 3:
            raise ValueError("plane needs at least 3 nodes per direction")
        if not (self.y_range[1] > self.y_range[0] and self.z_range[1] > self.z_range[0]):
            raise ValueError("plane ranges must be increasing")

    @property
    def y(self):
        return np.linspace(*self.y_range, self.ny)

    @property
    def z(self):
        return np.linspace(*self.z_range, self.nz)

    @property
    def spacing(self):
        return min((self.y_range[1] - self.y_range[0]) / (self.ny - 1),
                   (self.z_range[1] - self.z_range[0]) / (self.nz - 1))

    def nodes(self):
        Y, Z = np.meshgrid(self.y, self.z, indexing="ij")
        return np.column_stack([np.full(Y.size, self.x), Y.ravel(), Z.ravel()])


@dataclass(frozen=True)
class WakeGrid:
    """Induced velocity ``vel`` (ny, nz, 3) and in-plane curl ``curl`` (ny, nz), 1/s."""

    plane: PlaneSpec
    vel: np.ndarray
    curl: np.ndarray
    t: float = 0.0
    core: float = 0.0

    @property
    def shape(self):
        return self.curl.shape


def sample_plane(sheet, plane, core=None, backend=None):
    """Sum the segment velocities over the plane nodes and take the discrete curl.

    ``core`` defaults to a quarter of the grid spacing.
    """
    core = 0.25 * plane.spacing if core is None else core
    pts = plane.nodes()
    if len(sheet) == 0:
        vel = np.zeros_like(pts)
    else:
        vel = segment_velocities(pts, sheet.a, sheet.b, sheet.gamma, core, backend)
    vel = vel.reshape(plane.ny, plane.nz, 3)
    dvz_dy = np.gradient(vel[:, :, 2], plane.y, axis=0)
    dvy_dz = np.gradient(vel[:, :, 1], plane.z, axis=1)
    return WakeGrid(plane, vel, dvz_dy - dvy_dz, sheet.t, core)


def default_plane(record, offset=None, ny=41, nz=31, index=-1, margin=1.3):
    """Plane one mean chord (or ``offset``) behind the trailing edge at record ``index``."""
    chord = float(record.meta.get("mean_chord", 0.1))
    offset = chord if offset is None else float(offset)
    pts = record.edges[:, :, :, :].reshape(len(record.t), -1, 3)
    x_te = float(pts[index, :, 0].min()) - 0.75 * chord
    half = margin * float(np.abs(pts[:, :, 1]).max())
    zmax = margin * max(float(np.abs(pts[:, :, 2]).max()), 0.25 * half)
    return PlaneSpec(x_te - offset, (-half, half), (-zmax, zmax), ny, nz)
