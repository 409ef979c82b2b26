"""Reference computations shared by the unit and acceptance tests."""
import warnings

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.linalg import expm

from flapwing.unsteady import JONES, linear_system, station_cl


def pv_downwash(disc, wc, a, U, y):
    """Downwash at ``y`` from the principal value of the trailing-vortex integral.

    ``w(y) = -(1/4 pi) PV int dGamma/dy0 / (y - y0) dy0``, evaluated in the
    angle variable with QUADPACK's Cauchy-weight rule. The integrand is
    rewritten as ``f(t0) / (t0 - t)`` with ``f`` smooth.
    """
    K = 0.5 * wc.a0 * disc.c0 * U
    n = np.arange(1, len(a) + 1)
    half = 0.5 * disc.S
    t = np.arccos(2.0 * y / disc.S)

    def dgamma_dtheta(t0):
        return K * np.sum(n * a * np.cos(n * t0))

    def f(t0):
        d = np.cos(t0) - np.cos(t)
        if abs(t0 - t) < 1e-7:
            ratio = -1.0 / np.sin(t)  # limit of (t0 - t) / (cos t0 - cos t)
        else:
            ratio = (t0 - t) / d
        return dgamma_dtheta(t0) * ratio / half

    # y0 = half cos(t0): dGamma/dy0 dy0 = dGamma/dt0 dt0, and flipping the limits (pi, 0) -> (0, pi)
    # turns 1 / (y - y0) into 1 / (half (cos t0 - cos t))
    with warnings.catch_warnings():
        # the tolerances sit at round-off level on purpose; QUADPACK says so when it gets there
        warnings.simplefilter("ignore", IntegrationWarning)
        val, _ = quad(f, 0.0, np.pi, weight="cauchy", wvar=t, epsabs=1e-13, epsrel=1e-12, limit=400)
    return -val / (4.0 * np.pi)


def step_response(disc, t, v_n, U, wc=JONES):
    """Aerodynamic states after a step in normal velocity at t = 0 (zero initial state).

    Returns an array of shape (len(t), 3m), evaluated through the matrix
    exponential of the frozen linear system.
    """
    A, B = linear_system(disc, wc, U)
    n = A.shape[0]
    aug = np.zeros((n + 1, n + 1))
    aug[:n, :n] = A
    aug[:n, n] = B @ v_n
    out = np.empty((len(t), n))
    for i, ti in enumerate(t):
        out[i] = expm(aug * ti)[:n, n]
    return out


def steady_state(disc, v_n, U, wc=JONES):
    A, B = linear_system(disc, wc, U)
    return np.linalg.solve(A, -B @ v_n)


def midspan_cl(disc, zeta, v_n, U, wc=JONES):
    """Sectional lift at mid-span: the centre station, or the mean of the two central ones."""
    cl = station_cl(disc, wc, zeta, v_n, U)
    m = disc.m
    return cl[m // 2] if m % 2 else 0.5 * (cl[m // 2 - 1] + cl[m // 2])


def elliptic_wing_cl(alpha, AR, a0=2 * np.pi):
    return a0 * alpha / (1.0 + a0 / (np.pi * AR))


def frozen_unsteady_system(cfg, state):
    """``(A, b)`` with ``zeta' = A zeta + b`` at the frozen kinematics of ``state``.

    The rates are affine in ``zeta`` when the body does not move, so the
    columns are exact differences.
    """
    from flapwing.unsteady import unsteady_loads

    def f(z):
        return unsteady_loads(state.body, cfg.planform, z, cfg.rho, cfg.U, cfg.unsteady)[1]

    n = 3 * cfg.unsteady.m
    b = f(np.zeros(n))
    A = np.column_stack([f(e) - b for e in np.eye(n)])
    return A, b


def affine_flow(A, b, z0, t):
    """Exact solution of ``z' = A z + b`` from ``z0`` after time ``t``."""
    n = len(b)
    aug = np.zeros((n + 1, n + 1))
    aug[:n, :n] = A
    aug[:n, n] = b
    E = expm(aug * t)
    return E[:n, :n] @ z0 + E[:n, n]
