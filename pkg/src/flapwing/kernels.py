"""Hot numerical kernels with a compiled implementation and a NumPy fallback.

The compiled extension is used when it was built and ``FLAPWING_PURE_PYTHON``
is unset. ``BACKEND`` names the implementation actually in use.
"""
import os

import numpy as np

from . import _kernels_py

if os.environ.get("FLAPWING_PURE_PYTHON"):
    _compiled = None
else:
    try:
        from . import _kernels as _compiled
    except ImportError:
        _compiled = None

BACKEND = "compiled" if _compiled is not None else "numpy"


def segment_velocities(points, a, b, gamma, core=0.0, backend=None):
    """Velocity induced at ``points`` by straight vortex segments.

    Parameters
    ----------
    points : (n, 3) array
        Evaluation points.
    a, b : (m, 3) arrays
        Segment start and end points; circulation is positive by the
        right-hand rule about ``b - a``.
    gamma : (m,) array
        Segment circulations, m^2/s.
    core : float
        Rankine core radius. Inside the core the velocity falls off linearly
        with distance to the segment line; outside it is the exact singular
        Biot-Savart value.
    backend : {"compiled", "numpy"}, optional
        Force one implementation. Defaults to :data:`BACKEND`.

    Returns
    -------
    (n, 3) array
    """
    points = np.ascontiguousarray(np.atleast_2d(points), dtype=float)
    a = np.ascontiguousarray(np.atleast_2d(a), dtype=float)
    b = np.ascontiguousarray(np.atleast_2d(b), dtype=float)
    gamma = np.ascontiguousarray(np.atleast_1d(gamma), dtype=float)
    if a.shape != b.shape or a.shape[0] != gamma.shape[0]:
        raise ValueError("segment arrays must have matching lengths")
    backend = backend or BACKEND
    if backend == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not available")
        return _compiled.segment_velocities(points, a, b, gamma, float(core))
    return _kernels_py.segment_velocities(points, a, b, gamma, float(core))
