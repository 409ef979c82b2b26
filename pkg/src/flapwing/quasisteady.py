"""Blade-element aerodynamics with Dickinson's fitted coefficients.

The relative wind at a strip is the air velocity minus the velocity of the
quarter-chord point, projected onto the plane spanned by the chordwise
direction ``e_c`` (leading to trailing edge) and the upper normal ``e_n``.
The angle of attack is ``atan2(v_n, v_c)``; positive values mean the flow
strikes the lower surface.
"""
from dataclasses import dataclass

import numpy as np

from .dynamics import cross
from .wing import blade_strips

LIFT_PERIOD_DEG = 360.0 / 2.13
DRAG_PERIOD_DEG = 360.0 / 2.04


@dataclass(frozen=True)
class QuasiSteadyCoeffs:
    """``C_L = l0 + l1 sin(l2 a - l3)`` and ``C_D = d0 - d1 cos(d2 a - d3)``, a in degrees."""

    l0: float = 0.225
    l1: float = 1.58
    l2: float = 2.13
    l3: float = 7.2
    d0: float = 1.92
    d1: float = 1.55
    d2: float = 2.04
    d3: float = 9.82


DICKINSON = QuasiSteadyCoeffs()


def dickinson_cl(alpha, coeffs=DICKINSON):
    """Lift coefficient for angle of attack ``alpha`` in radians."""
    a = np.degrees(alpha)
    return coeffs.l0 + coeffs.l1 * np.sin(np.radians(coeffs.l2 * a - coeffs.l3))


def dickinson_cd(alpha, coeffs=DICKINSON):
    """Drag coefficient for angle of attack ``alpha`` in radians."""
    a = np.degrees(alpha)
    return coeffs.d0 - coeffs.d1 * np.cos(np.radians(coeffs.d2 * a - coeffs.d3))


@dataclass(frozen=True)
class BladeElement:
    """One strip with its local flow; a read-only view for inspection and tests."""

    chord: float
    ds: float
    p: np.ndarray
    e_c: np.ndarray
    e_n: np.ndarray
    alpha: float
    v: np.ndarray
    e_L: np.ndarray
    e_D: np.ndarray
    jac: np.ndarray


@dataclass
class Flow:
    """Relative-wind decomposition for a set of strips (arrays of length k)."""

    v_c: np.ndarray
    v_n: np.ndarray
    speed: np.ndarray
    alpha: np.ndarray
    e_L: np.ndarray
    e_D: np.ndarray


def air_velocity(U):
    """Inertial air velocity for a freestream of ``U`` m/s blowing head on."""
    return np.array([-float(U), 0.0, 0.0])


def relative_flow(strips, U):
    v_rel = air_velocity(U) - strips.vel
    v_c = np.einsum("ij,ij->i", v_rel, strips.e_c)
    v_n = np.einsum("ij,ij->i", v_rel, strips.e_n)
    speed = np.hypot(v_c, v_n)
    alpha = np.arctan2(v_n, v_c)
    safe = np.where(speed > 0, speed, 1.0)[:, None]
    e_D = (v_c[:, None] * strips.e_c + v_n[:, None] * strips.e_n) / safe
    # lift direction: drag direction turned +90 deg in the (e_c, e_n) plane
    e_L = (-v_n[:, None] * strips.e_c + v_c[:, None] * strips.e_n) / safe
    zero = speed == 0
    if np.any(zero):
        e_D[zero] = strips.e_c[zero]
        e_L[zero] = strips.e_n[zero]
    return Flow(v_c, v_n, speed, alpha, e_L, e_D)


def discretize_wing(state, planform, U=0.0):
    """Blade elements of both wings with their local flow."""
    strips = blade_strips(state, planform)
    flow = relative_flow(strips, U)
    return [BladeElement(strips.chord[k], strips.ds[k], strips.p[k], strips.e_c[k],
                         strips.e_n[k], flow.alpha[k], np.array([flow.v_c[k], flow.v_n[k]]),
                         flow.e_L[k], flow.e_D[k], strips.jac[k])
            for k in range(len(strips))]


def element_force(el, rho, C_L, C_D):
    """Inertial aerodynamic force on one element, N."""
    q = 0.5 * rho * float(np.dot(el.v, el.v)) * el.chord * el.ds
    return q * C_L * el.e_L + q * C_D * el.e_D


def generalized_force(el, f):
    """Generalized force of a point force ``f`` applied at the element's quarter chord."""
    return el.jac.T @ f


@dataclass
class AeroLoads:
    """Per-strip and total loads.

    ``force`` is the inertial total force and ``moment`` the inertial moment
    about the body centre of mass. ``gamma`` is the bound circulation per
    strip (Kutta-Joukowski), used to shed the wake.
    """

    u_a: np.ndarray
    forces: np.ndarray
    force: np.ndarray
    moment: np.ndarray
    cl: np.ndarray
    gamma: np.ndarray
    strips: object
    flow: Flow
    stations: object = None


def strip_loads(strips, flow, cl, cd, rho, body_p):
    q = 0.5 * rho * flow.speed ** 2 * strips.chord * strips.ds
    forces = (q * cl)[:, None] * flow.e_L + (q * cd)[:, None] * flow.e_D
    u_a = np.einsum("kij,ki->j", strips.jac, forces)
    moment = cross(strips.p - body_p, forces).sum(axis=0)
    gamma = 0.5 * flow.speed * cl * strips.chord
    return AeroLoads(u_a, forces, forces.sum(axis=0), moment, cl, gamma, strips, flow)


def quasisteady_loads(state, planform, rho, U, coeffs=DICKINSON, chain=None):
    """Blade-element loads on both wings for the current body state."""
    strips = blade_strips(state, planform, chain)
    flow = relative_flow(strips, U)
    return strip_loads(strips, flow, dickinson_cl(flow.alpha, coeffs),
                       dickinson_cd(flow.alpha, coeffs), rho, state.p)
