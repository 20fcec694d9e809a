"""Families of symmetric critical points: series seeds and Newton refinement.

Four families are supported, tagged C0I, C0II, C1I, C1II. The C0 pair
lives in the two-parameter chart of the full diagonal symmetry, the C1
pair in the five-parameter chart fixing the first d-1 coordinates. Seeds
for C0I, C0II and C1I come from a truncated power-series table in 1/d
shipped with the package; C1II has no trustworthy series (the only
printed candidate duplicates the C1I one), so it is recovered by Newton
from structured perturbations of the identity and accepted only when its
fingerprints (isotropy, sign type, loss scale) match.
"""

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import (
    AmbiguousType,
    DimensionMismatch,
    NewtonDiverged,
    NoConvergence,
    SingularJacobian,
    TangencyLabError,
    UnsupportedFamily,
)
from .kernel import grad_loss, hvp, loss
from .symmetry import (
    FixedPointChart,
    YoungPartitionGroup,
    build_chart,
    detect_diagonal_isotropy,
    embed,
    project,
)

FAMILIES = ("C0I", "C0II", "C1I", "C1II")

#: smallest supported width; below this the families are unreliable
#: (arcs of critical points can bifurcate).
MIN_D = 7

# expected loss of C1II at width d, used to validate recovered seeds
def _c1ii_loss_target(d):
    return (np.pi ** 2 - 4) / (2 * np.pi ** 2 * d) - 32.0 / (3 * np.pi ** 4 * d ** 1.5)


def predicted_loss(family, d):
    """Truncated large-d loss approximation for a family at width d.

    Type I families approach 1/2 - 1/pi from below with a d**-0.5
    correction; C0II sits exactly at zero loss; C1II decays like 1/d.
    """
    if family in ("C0I", "C1I"):
        return 0.5 - 1.0 / np.pi - 4.0 / (3.0 * np.pi * np.sqrt(d))
    if family == "C0II":
        return 0.0
    if family == "C1II":
        return _c1ii_loss_target(d)
    raise UnsupportedFamily(f"unknown family {family!r}")


@dataclass(frozen=True)
class PuiseuxApprox:
    """Truncated series in d**(-1/2): sum of coeff * d**(-exponent)."""

    terms: tuple

    def __post_init__(self):
        last = -np.inf
        for coeff, exponent in self.terms:
            if not np.isfinite(coeff):
                raise ValueError("series coefficients must be finite")
            if exponent < 0 or 2 * exponent != round(2 * exponent):
                raise ValueError("exponents must be nonnegative half-integers")
            if exponent <= last:
                raise ValueError("exponents must be strictly increasing")
            last = exponent


def eval_series(series, d):
    """Evaluate the truncated series at integer width d >= 4."""
    if d < 4:
        raise DimensionMismatch("series are used for d >= 4")
    return float(sum(c * d ** -e for c, e in series.terms))


_TABLE = None


def series_table():
    """Seed-coefficient table: family tag -> parameter name -> PuiseuxApprox."""
    global _TABLE
    if _TABLE is None:
        raw = json.loads(
            resources.files("tangency_lab").joinpath("data/puiseux_series.json").read_text()
        )
        _TABLE = {
            fam: {
                name: PuiseuxApprox(
                    tuple((t["value"], t["exponent"]) for t in terms)
                )
                for name, terms in xis.items()
            }
            for fam, xis in raw.items()
        }
    return _TABLE


@dataclass(frozen=True)
class CriticalPointRecord:
    family: str
    d: int
    chart: FixedPointChart
    xi: np.ndarray
    loss_value: float
    grad_norm: float
    type_label: str


def _full_matrix(d, xi1, xi2):
    W = np.full((d, d), xi2)
    np.fill_diagonal(W, xi1)
    return W


def _split_matrix(d, xi1, xi2, xi3, xi4, xi5):
    W = np.full((d, d), xi2)
    np.fill_diagonal(W, xi1)
    W[:-1, -1] = xi3
    W[-1, :-1] = xi4
    W[-1, -1] = xi5
    return W


def _type_from_matrix(W, blocks):
    big = blocks[0]
    v = float(np.mean(np.diag(W)[:big]))
    if abs(v) < 0.5:
        raise AmbiguousType(f"big-block diagonal {v:.3f} is not near -1 or +1")
    return "I" if v < 0 else "II"


def classify_type(record):
    """Sign type of a refined record: I for big-block diagonal near -1, II near +1."""
    W = embed(record.chart, record.xi)
    return _type_from_matrix(W, record.chart.group.blocks)


def chart_gradient(chart, xi):
    """Gradient of the loss restricted to the chart (orthonormal coordinates)."""
    return project(chart, grad_loss(embed(chart, xi)))


def chart_hessian(chart, xi):
    """Hessian of the restricted loss, one hvp per chart basis matrix."""
    W = embed(chart, xi)
    n = chart.dim
    H = np.empty((n, n))
    for k in range(n):
        H[:, k] = np.tensordot(chart.basis, hvp(W, chart.basis[k]), 2)
    return 0.5 * (H + H.T)


def refine_critical(chart, xi0, tol=1e-11, max_iter=50):
    """Newton-polish a chart seed to a critical point of the restricted loss.

    The Jacobian of the chart gradient is formed by central differences
    with step 1e-6 * (1 + |xi|). Raises NewtonDiverged if the residual
    fails to decrease five times in a row or the iteration budget runs
    out, SingularJacobian if the Jacobian condition number exceeds 1e14.
    """
    xi = np.asarray(xi0, dtype=float).copy()
    g = chart_gradient(chart, xi)
    res = np.linalg.norm(g)
    stall = 0
    for _ in range(max_iter):
        if res <= tol:
            break
        h = 1e-6 * (1.0 + np.linalg.norm(xi))
        J = np.empty((chart.dim, chart.dim))
        for k in range(chart.dim):
            e = np.zeros(chart.dim)
            e[k] = h
            J[:, k] = (chart_gradient(chart, xi + e) - chart_gradient(chart, xi - e)) / (2 * h)
        if np.linalg.cond(J) > 1e14:
            raise SingularJacobian("chart Hessian is numerically singular")
        xi = xi + np.linalg.solve(J, -g)
        g = chart_gradient(chart, xi)
        new_res = np.linalg.norm(g)
        stall = stall + 1 if new_res >= res else 0
        res = new_res
        if stall >= 5:
            raise NewtonDiverged(f"residual stalled at {res:.3e}")
    if res > tol:
        raise NewtonDiverged(f"residual {res:.3e} above tolerance after {max_iter} iterations")

    W = embed(chart, xi)
    blocks = chart.group.blocks
    type_label = _type_from_matrix(W, blocks)
    p = chart.d - blocks[0]
    return CriticalPointRecord(
        family=f"C{p}{type_label}",
        d=chart.d,
        chart=chart,
        xi=xi,
        loss_value=loss(W),
        grad_norm=float(np.linalg.norm(grad_loss(W))),
        type_label=type_label,
    )


def _series_seed(family, d):
    tab = series_table()[family]
    if family in ("C0I", "C0II"):
        chart = build_chart(d, YoungPartitionGroup((d,)))
        W = _full_matrix(d, eval_series(tab["xi1"], d), eval_series(tab["xi2"], d))
    else:
        chart = build_chart(d, YoungPartitionGroup((d - 1, 1)))
        W = _split_matrix(d, *(eval_series(tab[f"xi{k}"], d) for k in range(1, 6)))
    return chart, project(chart, W)


def _c1ii_probes(d):
    # identity with row/column d overwritten by a type-I-style pattern:
    # cross entries near 2/d, last diagonal entry swung to about -1.
    yield 0.0, 2.0 / d, 2.0 / d, -1.0 + 2.0 / d
    yield 2.0 / d, 2.0 / d, 2.0 / d, -1.0 + 2.0 / d
    yield 0.0, 4.0 / d, 4.0 / d, -1.0 + 2.0 / d
    yield 0.0, 2.0 / d, 2.0 / d, -0.7


def _c1ii_seed(d):
    chart = build_chart(d, YoungPartitionGroup((d - 1, 1)))
    target = _c1ii_loss_target(d)
    # the target formula itself truncates at O(1/d^2); widen the relative
    # gate accordingly so the true point is not rejected at moderate d
    gate = max(0.1 * target, 2.5 / d ** 2)
    for off, col, row, corner in _c1ii_probes(d):
        W = _split_matrix(d, 1.0, off, col, row, corner)
        xi0 = project(chart, W)
        try:
            rec = refine_critical(chart, xi0)
        except TangencyLabError:
            continue
        if rec.type_label != "II":
            continue
        if rec.loss_value <= 1e-8:
            continue  # fell back to the global minimum
        Wr = embed(chart, rec.xi)
        if detect_diagonal_isotropy(Wr).blocks != (d - 1, 1):
            continue
        if d >= 20 and abs(rec.loss_value - target) > gate:
            continue
        if d < 20 and not (0.1 * target < rec.loss_value < 5 * target):
            continue
        return chart, xi0
    raise NoConvergence(f"no identity perturbation recovered C1II at d={d}")


def seed_minimum(family, d):
    """Chart and chart coordinates of the seed for one of the four families."""
    if family not in FAMILIES:
        raise UnsupportedFamily(f"unknown family {family!r}")
    if d < MIN_D:
        raise DimensionMismatch(f"families are supported for d >= {MIN_D}")
    if family == "C1II":
        return _c1ii_seed(d)
    return _series_seed(family, d)
