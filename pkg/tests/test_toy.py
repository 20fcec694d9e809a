import math
import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tangency_lab.errors import CoincidentPoint
from tangency_lab.toy import (
    CRITICAL_POINTS,
    PlanePoint,
    b2_orbit,
    grad_h,
    h,
    hess_h,
    points_to_csv,
    sample_tangency_set,
    tangency_residual,
    trace_from,
)
from tangency_lab.tracer import TraceConfig

A = math.sqrt(2.0 / 3.0)

SQUARE_SYMMETRIES = [
    np.array([[sx, 0.0], [0.0, sy]]) if not swap else np.array([[0.0, sx], [sy, 0.0]])
    for swap in (False, True) for sx in (1.0, -1.0) for sy in (1.0, -1.0)
]


def test_critical_point_values():
    vals = {(0.0, 0.0): 0.0, (1.0, 0.0): -1.0, (0.0, 1.0): -1.0,
            (A, A): -4.0 / 3.0}
    for p in CRITICAL_POINTS:
        assert np.linalg.norm(grad_h(p)) <= 1e-14
        key = (abs(p.x), abs(p.y))
        assert h(p) == pytest.approx(vals[key], abs=1e-14)


def test_hessian_classification():
    assert np.allclose(hess_h((0.0, 0.0)), -4.0 * np.eye(2))
    np.testing.assert_allclose(hess_h((1.0, 0.0)), np.diag([8.0, -2.0]), atol=1e-14)
    Hm = hess_h((A, A))
    evals, evecs = np.linalg.eigh(Hm)
    np.testing.assert_allclose(evals, [8.0 / 3.0, 8.0], atol=1e-12)
    soft = evecs[:, 0]
    assert abs(abs(soft @ np.array([1.0, -1.0]) / np.sqrt(2.0)) - 1.0) <= 1e-12


def test_orbit_sizes():
    assert len(b2_orbit((0.3, 0.7))) == 8
    assert len(b2_orbit((1.0, 0.0))) == 4
    assert len(b2_orbit((A, A))) == 4
    assert len(b2_orbit((0.0, 0.0))) == 1


@settings(max_examples=40, deadline=None)
@given(st.floats(-2, 2, allow_nan=False), st.floats(-2, 2, allow_nan=False))
def test_h_and_grad_are_equivariant(x, y):
    p = np.array([x, y])
    for S in SQUARE_SYMMETRIES:
        q = S @ p
        assert h(tuple(q)) == pytest.approx(h(tuple(p)), rel=1e-12, abs=1e-12)
        np.testing.assert_allclose(grad_h(tuple(q)), S @ grad_h(tuple(p)),
                                   rtol=1e-12, atol=1e-12)


def test_residual_vanishes_on_symmetry_lines():
    # from the origin, gradients point radially along both axes and both
    # diagonals, so those rays lie in the tangency set
    for t in (0.25, 0.8, 1.3):
        for p in ((t, 0.0), (0.0, t), (t, t), (t, -t)):
            assert abs(tangency_residual((0.0, 0.0), p)) <= 1e-12


def test_residual_rejects_center():
    with pytest.raises(CoincidentPoint):
        tangency_residual((0.5, 0.5), (0.5, 0.5))


def test_critical_points_lie_in_every_tangency_set():
    for c in ((0.0, 0.0), (1.0, 0.0), (A, A)):
        for p in CRITICAL_POINTS:
            if (p.x, p.y) == c:
                continue
            assert abs(tangency_residual(c, p)) <= 1e-10


def test_sampled_set_is_thin_on_grid():
    pts = sample_tangency_set((1.0, 0.0), resolution=128)
    assert len(pts) > 50
    cell = 4.0 / 128
    for p in pts:
        assert abs(tangency_residual((1.0, 0.0), p)) <= 25.0 * cell
        assert math.hypot(p.x - 1.0, p.y) > 1e-6


def test_sampled_set_bisection_accuracy():
    # walking the sign change across one crossed edge reproduces the
    # sampled point to the linear-interpolation error of the grid
    c = (1.0, 0.0)
    pts = sample_tangency_set(c, resolution=256)
    p = pts[len(pts) // 3]
    if abs(tangency_residual(c, (p.x + 1e-4, p.y))) > abs(
            tangency_residual(c, (p.x - 1e-4, p.y))):
        lo, hi = p.x - 1e-2, p.x
    else:
        lo, hi = p.x, p.x + 1e-2
    f = lambda x: tangency_residual(c, (x, p.y))
    if f(lo) * f(hi) < 0:
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if f(lo) * f(mid) <= 0:
                hi = mid
            else:
                lo = mid
        assert abs(0.5 * (lo + hi) - p.x) <= 2e-2


def test_sampled_set_is_equivariant():
    c = (1.0, 0.0)
    S = np.array([[0.0, 1.0], [1.0, 0.0]])  # swap: maps c to (0, 1)
    a = sample_tangency_set(c, resolution=128)
    b = sample_tangency_set((0.0, 1.0), resolution=128)
    B = np.array([[p.x, p.y] for p in b])
    cell = 4.0 / 128
    worst = 0.0
    for p in a:
        q = S @ np.array([p.x, p.y])
        worst = max(worst, float(np.min(np.hypot(*(B - q).T))))
    assert worst <= 2.0 * cell


def test_sample_validation():
    with pytest.raises(ValueError):
        sample_tangency_set((0.0, 0.0), resolution=32)
    with pytest.raises(ValueError):
        sample_tangency_set((0.0, 0.0), extent=(2.0, -2.0))


def test_arcs_launch_along_hessian_eigenvectors():
    # near the center every tangency arc leaves tangent to an eigenvector
    cases = [
        ((1.0, 0.0), np.array([1.0, 0.0])),
        ((1.0, 0.0), np.array([0.0, 1.0])),
        ((A, A), np.array([1.0, -1.0]) / np.sqrt(2.0)),
        ((A, A), np.array([1.0, 1.0]) / np.sqrt(2.0)),
    ]
    cfg = TraceConfig(delta_r=1e-4, r_max=2e-3)
    for c, v in cases:
        samples, _, _ = trace_from(c, v, cfg)
        r, p, _ = samples[-1]
        u = (p - np.array(c)) / r
        angle = math.atan2(abs(u[0] * v[1] - u[1] * v[0]), abs(u @ v))
        assert angle <= 1e-2


def test_arc_from_minimum_reaches_saddle_orbit():
    t0 = time.time()
    cfg = TraceConfig(delta_r=1e-4, r_max=3.0)
    v = np.array([1.0, -1.0]) / np.sqrt(2.0)
    samples, termination, terminal = trace_from((A, A), v, cfg)
    end = samples[-1][1]
    saddles = [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)]
    dist = min(math.hypot(end[0] - sx, end[1] - sy) for sx, sy in saddles)
    assert dist <= 1e-3
    assert termination == "SingularJacobian"
    assert time.time() - t0 <= 10.0


def test_points_to_csv_layout():
    clouds = {"min": [PlanePoint(0.5, 0.25)], "max": [PlanePoint(0.0, 1.0)]}
    text = points_to_csv(clouds)
    lines = text.strip().splitlines()
    assert lines[0] == "x,y,center"
    assert lines[1] == "0,1,max"
    assert lines[2] == "0.5,0.25,min"


def test_plane_point_validation():
    with pytest.raises(ValueError):
        PlanePoint(float("nan"), 0.0)
