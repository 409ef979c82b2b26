"""NumPy implementation of the Biot-Savart segment summation.

Mirrors :mod:`flapwing._kernels` operation for operation; used when the
compiled extension is unavailable or disabled.
"""
import numpy as np

_CHUNK = 256


def segment_velocities(points, a, b, gamma, core):
    points = np.ascontiguousarray(points, dtype=float)
    out = np.zeros((points.shape[0], 3))
    keep = gamma != 0.0
    a, b, gamma = a[keep], b[keep], gamma[keep]
    if gamma.size == 0:
        return out
    r0 = b - a
    l0 = np.einsum("ij,ij->i", r0, r0)
    ok = l0 > 0.0
    a, b, gamma, r0, l0 = a[ok], b[ok], gamma[ok], r0[ok], l0[ok]
    core2 = core * core
    for start in range(0, points.shape[0], _CHUNK):
        p = points[start:start + _CHUNK, None, :]
        r1 = p - a
        r2 = p - b
        n1 = np.sqrt(np.einsum("ijk,ijk->ij", r1, r1))
        n2 = np.sqrt(np.einsum("ijk,ijk->ij", r2, r2))
        cross = np.cross(r1, r2)
        cc = np.einsum("ijk,ijk->ij", cross, cross)
        valid = (n1 > 0.0) & (n2 > 0.0) & (cc > 1e-30 * l0 * l0)
        with np.errstate(divide="ignore", invalid="ignore"):
            proj = np.einsum("jk,ijk->ij", r0, r1 / n1[..., None] - r2 / n2[..., None])
            f = gamma / (4.0 * np.pi) / cc * proj
            d2 = cc / l0
            f = np.where(d2 < core2, f * d2 / core2, f)
        f = np.where(valid, f, 0.0)
        out[start:start + _CHUNK] = np.einsum("ij,ijk->ik", f, cross)
    return out
