import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from flapwing import kernels
from flapwing.wake import biot_savart_segment

BACKENDS = ["numpy"] + (["compiled"] if kernels.BACKEND == "compiled" else [])
coord = st.floats(-1.0, 1.0, allow_nan=False)


@pytest.mark.parametrize("backend", BACKENDS)
def test_infinite_filament_limit(backend):
    d, gamma = 0.37, 1.3
    v = kernels.segment_velocities([[0.0, d, 0.0]], [[-1e6, 0, 0]], [[1e6, 0, 0]], [gamma],
                                   backend=backend)[0]
    assert abs(np.linalg.norm(v) - gamma / (2 * np.pi * d)) < 1e-6 * gamma / (2 * np.pi * d)
    # right-hand rule about +x: a point at +y sees flow along +z
    assert v[2] > 0 and abs(v[0]) < 1e-15 and abs(v[1]) < 1e-15


@pytest.mark.parametrize("backend", BACKENDS)
def test_semi_infinite_filament_from_foot(backend):
    d, gamma = 0.2, 0.8
    v = kernels.segment_velocities([[0.0, 0.0, d]], [[0.0, 0, 0]], [[1e6, 0, 0]], [gamma],
                                   backend=backend)[0]
    assert np.linalg.norm(v) == pytest.approx(gamma / (4 * np.pi * d), rel=1e-6)


@pytest.mark.parametrize("backend", BACKENDS)
def test_point_on_axis_extension_is_quiet(backend):
    v = kernels.segment_velocities([[2.0, 0, 0], [-0.5, 0, 0]], [[0.0, 0, 0]], [[1.0, 0, 0]], [1.0],
                                   backend=backend)
    assert np.all(v == 0.0)


@pytest.mark.parametrize("backend", BACKENDS)
def test_core_regularizes_points_on_segment(backend):
    v = kernels.segment_velocities([[0.5, 0.0, 0.0], [0.5, 1e-9, 0.0]], [[0.0, 0, 0]], [[1.0, 0, 0]],
                                   [1.0], core=0.01, backend=backend)
    assert np.all(np.isfinite(v))
    assert np.linalg.norm(v[0]) == 0.0
    assert np.linalg.norm(v[1]) < 1e-5


def test_rankine_core_is_linear_inside():
    # inside the core the speed grows linearly and matches the outer value at the edge
    core, gamma = 0.05, 1.0
    a, b = [[-1e6, 0, 0]], [[1e6, 0, 0]]
    inner = [np.linalg.norm(kernels.segment_velocities([[0, r, 0]], a, b, [gamma], core)[0])
             for r in (0.01, 0.02)]
    assert inner[1] == pytest.approx(2 * inner[0], rel=1e-9)
    edge = np.linalg.norm(kernels.segment_velocities([[0, core, 0]], a, b, [gamma], core)[0])
    assert edge == pytest.approx(gamma / (2 * np.pi * core), rel=1e-6)


@given(pts=arrays(float, (5, 3), elements=coord), a=arrays(float, (4, 3), elements=coord),
       b=arrays(float, (4, 3), elements=coord), g=arrays(float, 4, elements=coord),
       core=st.sampled_from([0.0, 1e-3, 0.05]))
def test_backends_agree(pts, a, b, g, core):
    ref = kernels.segment_velocities(pts, a, b, g, core, backend="numpy")
    assert np.all(np.isfinite(ref))
    if "compiled" in BACKENDS:
        other = kernels.segment_velocities(pts, a, b, g, core, backend="compiled")
        assert np.allclose(other, ref, rtol=1e-12, atol=1e-12 * (1 + np.abs(ref).max()))


@given(pts=arrays(float, (3, 3), elements=coord), a=arrays(float, (6, 3), elements=coord),
       b=arrays(float, (6, 3), elements=coord), g=arrays(float, 6, elements=coord),
       scale=st.floats(-5, 5, allow_nan=False))
def test_linear_in_circulation(pts, a, b, g, scale):
    v = kernels.segment_velocities(pts, a, b, g, 1e-3)
    v2 = kernels.segment_velocities(pts, a, b, scale * g, 1e-3)
    assert np.allclose(v2, scale * v, rtol=1e-12, atol=1e-12 * (1 + np.abs(v).max() * abs(scale)))
    # splitting the segment set sums exactly
    parts = kernels.segment_velocities(pts, a[:3], b[:3], g[:3], 1e-3) + \
        kernels.segment_velocities(pts, a[3:], b[3:], g[3:], 1e-3)
    assert np.allclose(parts, v, rtol=1e-12, atol=1e-12 * (1 + np.abs(v).max()))


def test_biot_savart_segment_wrapper():
    v = biot_savart_segment([0, 0.1, 0], [-1e6, 0, 0], [1e6, 0, 0], 2.0)
    assert v.shape == (3,)
    assert v[2] == pytest.approx(2.0 / (2 * np.pi * 0.1), rel=1e-6)


def test_rejects_mismatched_shapes():
    with pytest.raises(ValueError):
        kernels.segment_velocities([[0, 0, 0]], [[0, 0, 0]], [[1, 0, 0], [2, 0, 0]], [1.0])


def test_backend_name():
    assert kernels.BACKEND in ("compiled", "numpy")
