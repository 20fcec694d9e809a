"""Planar quartic with the symmetries of the square.

h(x, y) = x^4 + x^2 y^2 + y^4 - 2 x^2 - 2 y^2 has nine critical points:
a local maximum at the origin, four saddles on the axes, and four minima
on the diagonals at coordinate sqrt(2/3). Everything about its tangency
sets is computable in closed form, which makes it a full end-to-end
check for the arc tracer: the set of points where grad h is parallel to
the ray from a chosen center contains every critical point, and arcs
leave a center tangent to Hessian eigenvectors.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import CoincidentPoint
from .tracer import TraceConfig, continue_arc

__all__ = [
    "PlanePoint",
    "CRITICAL_POINTS",
    "b2_orbit",
    "h",
    "grad_h",
    "hess_h",
    "tangency_residual",
    "sample_tangency_set",
    "trace_from",
    "points_to_csv",
]


@dataclass(frozen=True)
class PlanePoint:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError("plane points must be finite")


def _xy(p):
    if isinstance(p, PlanePoint):
        return p.x, p.y
    x, y = p
    return float(x), float(y)


_A = math.sqrt(2.0 / 3.0)

CRITICAL_POINTS = (
    PlanePoint(0.0, 0.0),
    PlanePoint(1.0, 0.0),
    PlanePoint(-1.0, 0.0),
    PlanePoint(0.0, 1.0),
    PlanePoint(0.0, -1.0),
    PlanePoint(_A, _A),
    PlanePoint(_A, -_A),
    PlanePoint(-_A, _A),
    PlanePoint(-_A, -_A),
)


def b2_orbit(p):
    """The orbit of p under the eight symmetries of the square."""
    x, y = _xy(p)
    seen = []
    for u, v in ((x, y), (y, x)):
        for sx in (1.0, -1.0):
            for sy in (1.0, -1.0):
                q = (sx * u, sy * v)
                if q not in seen:
                    seen.append(q)
    return tuple(PlanePoint(*q) for q in seen)


def h(p):
    x, y = _xy(p)
    return x**4 + x**2 * y**2 + y**4 - 2.0 * x**2 - 2.0 * y**2


def grad_h(p):
    x, y = _xy(p)
    return np.array(
        [
            4.0 * x**3 + 2.0 * x * y**2 - 4.0 * x,
            2.0 * x**2 * y + 4.0 * y**3 - 4.0 * y,
        ]
    )


def hess_h(p):
    x, y = _xy(p)
    return np.array(
        [
            [12.0 * x**2 + 2.0 * y**2 - 4.0, 4.0 * x * y],
            [4.0 * x * y, 2.0 * x**2 + 12.0 * y**2 - 4.0],
        ]
    )


def tangency_residual(c, p):
    """Cross product of grad h at p with the ray c -> p.

    Vanishes exactly when the gradient is parallel to the ray, i.e. when
    p lies on the tangency set of the center c (critical points of h
    included, where the gradient is zero).
    """
    cx, cy = _xy(c)
    px, py = _xy(p)
    dx, dy = px - cx, py - cy
    if dx == 0.0 and dy == 0.0:
        raise CoincidentPoint("tangency residual is undefined at the center itself")
    g = grad_h((px, py))
    return float(g[0] * dy - g[1] * dx)


def _grid_residual(c, xs, ys):
    cx, cy = _xy(c)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    gx = 4.0 * X**3 + 2.0 * X * Y**2 - 4.0 * X
    gy = 2.0 * X**2 * Y + 4.0 * Y**3 - 4.0 * Y
    return gx * (Y - cy) - gy * (X - cx)


def sample_tangency_set(c, resolution=512, extent=(-2.0, 2.0)):
    """Zero contour of the tangency residual of center c on a square grid.

    Marching squares with linear interpolation along cell edges; one
    point per crossed edge, deduplicated, sorted, and with a 1e-6 disk
    around the center removed. resolution is the number of cells per
    axis and must be at least 64.
    """
    if resolution < 64:
        raise ValueError("resolution must be at least 64")
    lo, hi = float(extent[0]), float(extent[1])
    if not lo < hi:
        raise ValueError("extent must be an increasing pair")
    cx, cy = _xy(c)
    xs = np.linspace(lo, hi, resolution + 1)
    ys = np.linspace(lo, hi, resolution + 1)
    F = _grid_residual(c, xs, ys)

    pts = {}

    def edge(v0, v1, x0, y0, x1, y1, key):
        if v0 == 0.0 and v1 == 0.0:
            return
        if v0 * v1 > 0.0:
            return
        t = v0 / (v0 - v1)
        pts[key] = (x0 + t * (x1 - x0), y0 + t * (y1 - y0))

    for i in range(resolution + 1):
        for j in range(resolution):
            edge(F[i, j], F[i, j + 1], xs[i], ys[j], xs[i], ys[j + 1], ("v", i, j))
    for i in range(resolution):
        for j in range(resolution + 1):
            edge(F[i, j], F[i + 1, j], xs[i], ys[j], xs[i + 1], ys[j], ("h", i, j))

    out = []
    for x, y in pts.values():
        if math.hypot(x - cx, y - cy) <= 1e-6:
            continue
        out.append((x, y))
    out.sort()
    return [PlanePoint(x, y) for x, y in out]


def trace_from(center, direction, cfg=None):
    """Trace a tangency arc of h from a critical center.

    direction is a unit 2-vector, normally a Hessian eigenvector at the
    center. Returns (samples, termination, terminal_radius) with samples
    a tuple of (radius, point, multiplier) entries.
    """
    cfg = cfg or TraceConfig()
    c = np.array(_xy(center))
    v = np.asarray(direction, dtype=float)
    v = v / np.linalg.norm(v)
    rayleigh = float(v @ hess_h(c) @ v)
    samples, termination, terminal = continue_arc(
        lambda p: grad_h(p), lambda p: hess_h(p), c, v, rayleigh, cfg
    )
    return samples, termination, terminal


def points_to_csv(clouds):
    """CSV rows (x, y, center-id) for a dict mapping id -> point list."""
    lines = ["x,y,center"]
    for cid in sorted(clouds):
        for p in clouds[cid]:
            lines.append("%.17g,%.17g,%s" % (p.x, p.y, cid))
    return "\n".join(lines) + "\n"
