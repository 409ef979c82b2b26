# cython: language_level=3
"""Compiled Biot-Savart summation over straight vortex segments."""
import numpy as np
from libc.math cimport sqrt, M_PI


def segment_velocities(double[:, ::1] points, double[:, ::1] a, double[:, ::1] b,
                       double[::1] gamma, double core):
    cdef Py_ssize_t n = points.shape[0]
    cdef Py_ssize_t m = a.shape[0]
    out_arr = np.zeros((n, 3), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double px, py, pz, r0x, r0y, r0z, r1x, r1y, r1z, r2x, r2y, r2z
    cdef double cx, cy, cz, cc, l0, n1, n2, d2, f, vx, vy, vz
    cdef double core2 = core * core
    cdef double inv4pi = 1.0 / (4.0 * M_PI)
    for i in range(n):
        px = points[i, 0]
        py = points[i, 1]
        pz = points[i, 2]
        vx = 0.0
        vy = 0.0
        vz = 0.0
        for j in range(m):
            if gamma[j] == 0.0:
                continue
            r0x = b[j, 0] - a[j, 0]
            r0y = b[j, 1] - a[j, 1]
            r0z = b[j, 2] - a[j, 2]
            l0 = r0x * r0x + r0y * r0y + r0z * r0z
            if l0 == 0.0:
                continue
            r1x = px - a[j, 0]
            r1y = py - a[j, 1]
            r1z = pz - a[j, 2]
            r2x = px - b[j, 0]
            r2y = py - b[j, 1]
            r2z = pz - b[j, 2]
            n1 = sqrt(r1x * r1x + r1y * r1y + r1z * r1z)
            n2 = sqrt(r2x * r2x + r2y * r2y + r2z * r2z)
            if n1 == 0.0 or n2 == 0.0:
                continue
            cx = r1y * r2z - r1z * r2y
            cy = r1z * r2x - r1x * r2z
            cz = r1x * r2y - r1y * r2x
            cc = cx * cx + cy * cy + cz * cz
            if cc <= 1e-30 * l0 * l0:
                continue
            f = gamma[j] * inv4pi / cc * (
                r0x * (r1x / n1 - r2x / n2)
                + r0y * (r1y / n1 - r2y / n2)
                + r0z * (r1z / n1 - r2z / n2))
            d2 = cc / l0
            if d2 < core2:
                f = f * d2 / core2
            vx = vx + f * cx
            vy = vy + f * cy
            vz = vz + f * cz
        out[i, 0] = vx
        out[i, 1] = vy
        out[i, 2] = vz
    return out_arr
