"""Tangency arc continuation and sphere-constrained extremization.

An arc through a critical point C collects solutions of
grad L(W) = 2 lambda (W - C) at increasing radii r = |W - C|. Each radius
is solved by Newton on the square system in (xi, lambda); continuation
runs in orthonormal chart coordinates so the sphere constraint needs no
metric correction. The engine is generic over the objective so the
polynomial toy problem can reuse it with analytic derivatives.
"""

from dataclasses import dataclass

import numpy as np

from .atlas import chart_gradient, chart_hessian
from .errors import (
    BadDirection,
    DimensionMismatch,
    InsufficientSamples,
    InvalidPartition,
    NoConvergence,
    TangencyLabError,
)
from .kernel import loss
from .symmetry import YoungPartitionGroup, build_chart, embed, isotypic_project, project

#: termination tags an arc can carry
TERMINATIONS = ("SingularJacobian", "NewtonDiverged", "ReachedRmax", "StepStalled")


@dataclass(frozen=True)
class TraceConfig:
    delta_r: float = 1e-3
    r_min: float = 1e-7
    r_max: float = 10.0
    newton_tol: float = 1e-10
    max_newton_iters: int = 25
    cond_threshold: float = 1e12

    def __post_init__(self):
        if not (0 < self.r_min < self.delta_r < self.r_max):
            raise ValueError("need 0 < r_min < delta_r < r_max")


@dataclass(frozen=True)
class ArcRecord:
    chart: object
    center_xi: np.ndarray
    samples: tuple  # of (r, xi, lambda)
    termination: str
    terminal_radius: float


def _newton_solve(grad_fn, hess_fn, center, xi, lam, r, cfg):
    """Solve [grad - 2*lam*u; |u|^2 - r^2] = 0 from the given guess.

    The Hessian is evaluated once at the initial guess and kept for the
    whole solve; borders and the multiplier shift are rebuilt each
    iterate. Residuals use the exact gradient, so the acceptance test is
    unaffected by the frozen second-order term.

    Returns (xi, lam, 'ok') or (None, None, reason) with reason one of
    'singular', 'diverged'.
    """
    n = center.size
    try:
        H = hess_fn(xi)
    except TangencyLabError:
        return None, None, "diverged"
    for _ in range(cfg.max_newton_iters):
        u = xi - center
        try:
            g = grad_fn(xi)
        except TangencyLabError:
            return None, None, "diverged"
        F = np.concatenate([g - 2.0 * lam * u, [u @ u - r * r]])
        if not np.all(np.isfinite(F)):
            return None, None, "diverged"
        if np.linalg.norm(F) <= cfg.newton_tol:
            return xi, lam, "ok"
        J = np.zeros((n + 1, n + 1))
        J[:n, :n] = H - 2.0 * lam * np.eye(n)
        J[:n, n] = -2.0 * u
        J[n, :n] = 2.0 * u
        if np.linalg.cond(J) >= cfg.cond_threshold:
            return None, None, "singular"
        try:
            step = np.linalg.solve(J, -F)
        except np.linalg.LinAlgError:
            return None, None, "singular"
        if not np.all(np.isfinite(step)):
            return None, None, "diverged"
        xi = xi + step[:n]
        lam = lam + step[n]
    return None, None, "diverged"


_FAIL_TAG = {"singular": "SingularJacobian", "diverged": "NewtonDiverged"}


def continue_arc(grad_fn, hess_fn, center, direction, rayleigh, cfg):
    """Generic Lagrangian continuation from center along a unit direction.

    grad_fn and hess_fn evaluate the objective's derivatives in the same
    coordinates as `center`. Stepping is by cfg.delta_r with halving on
    Newton failure; three consecutive samples needing steps below 1e-6
    terminate the arc as StepStalled.

    Two degeneracies end an arc before r_max. A fold (no solution beyond
    some radius) exhausts the step halving, leaving StepStalled or the
    Newton failure tag at the fold. A multiplier sign change means the
    arc passed through a point with vanishing gradient, i.e. met an
    adjacent critical point; the crossing is bisected to locate it and
    the arc ends there tagged SingularJacobian, matching how such events
    surface in plain Newton continuation.
    """
    xi0 = center + cfg.r_min * direction
    lam0 = 0.5 * rayleigh

    def solve_at(r, base_r, base_xi, base_lam):
        guess = center + (r / base_r) * (base_xi - center)
        return _newton_solve(grad_fn, hess_fn, center, guess, base_lam, r, cfg)

    xi, lam, status = _newton_solve(grad_fn, hess_fn, center, xi0, lam0, cfg.r_min, cfg)
    if status != "ok":
        raise NoConvergence(f"no tangency solution at r_min ({status})")
    samples = [(cfg.r_min, xi.copy(), float(lam))]
    stalled_streak = 0
    while True:
        r_prev, xi_prev, lam_prev = samples[-1]
        if r_prev >= cfg.r_max:
            return samples, "ReachedRmax", r_prev
        step = cfg.delta_r
        while True:
            r = min(r_prev + step, cfg.r_max)
            xi, lam, status = solve_at(r, r_prev, xi_prev, lam_prev)
            if status == "ok" and np.linalg.norm(xi - (center + (r / r_prev) * (xi_prev - center))) > max(0.1 * r, 20.0 * step):
                # Newton landed on a different solution branch: past a fold
                # the local branch has no point at this radius, so a far
                # landing is a failure of the step, not a continuation.
                status = "diverged"
            if status == "ok":
                break
            step *= 0.5
            if step < 1e-9:
                return samples, _FAIL_TAG[status], r_prev
        if lam_prev * lam < 0 or lam == 0.0:
            # bisect the multiplier zero between the last two radii
            lo, hi = (r_prev, xi_prev, lam_prev), (r, xi, float(lam))
            for _ in range(64):
                if hi[0] - lo[0] <= 1e-9 * max(1.0, hi[0]):
                    break
                rm = 0.5 * (lo[0] + hi[0])
                xm, lm, st = solve_at(rm, lo[0], lo[1], lo[2])
                if st != "ok":
                    break
                if lm * lo[2] > 0:
                    lo = (rm, xm, float(lm))
                else:
                    hi = (rm, xm, float(lm))
            if lo[0] > samples[-1][0]:
                samples.append(lo)
            if hi[0] > samples[-1][0]:
                samples.append(hi)
            denom = lo[2] - hi[2]
            r_star = lo[0] + (hi[0] - lo[0]) * (lo[2] / denom) if denom != 0 else 0.5 * (lo[0] + hi[0])
            return samples, "SingularJacobian", float(r_star)
        samples.append((r, xi.copy(), float(lam)))
        stalled_streak = stalled_streak + 1 if step < 1e-6 else 0
        if stalled_streak >= 3:
            return samples, "StepStalled", r


def _center_in_chart(chart, center):
    Wc = embed(center.chart, center.xi)
    center_xi = project(chart, Wc)
    if np.linalg.norm(embed(chart, center_xi) - Wc) > 1e-8:
        raise DimensionMismatch("center is not fixed by the chart's group")
    return center_xi


def trace_arc(chart, center, direction, cfg=None):
    """Trace a tangency arc of the loss from a refined critical point.

    `direction` is a unit d x d matrix lying in the chart span and
    aligned with an eigenvector of the chart-restricted Hessian at the
    center (angle tolerance 1e-3): arcs launch only along eigenvector
    rays, so anything else has no branch to follow.
    """
    cfg = cfg or TraceConfig()
    direction = np.asarray(direction, dtype=float)
    center_xi = _center_in_chart(chart, center)
    v = project(chart, direction)
    if np.linalg.norm(embed(chart, v) - direction) > 1e-10:
        raise BadDirection("direction must lie in the chart span")
    nv = np.linalg.norm(v)
    if abs(nv - 1.0) > 1e-8:
        raise BadDirection("direction must have unit Frobenius norm")
    v = v / nv
    Hc = chart_hessian(chart, center_xi)
    Hv = Hc @ v
    ray = float(v @ Hv)
    resid = np.linalg.norm(Hv - ray * v)
    if resid / max(np.linalg.norm(Hv), 1e-12) > 1e-3:
        raise BadDirection("direction is not an eigenvector of the restricted Hessian")

    samples, termination, terminal = continue_arc(
        lambda xi: chart_gradient(chart, xi),
        lambda xi: chart_hessian(chart, xi),
        center_xi,
        v,
        ray,
        cfg,
    )
    return ArcRecord(
        chart=chart,
        center_xi=center_xi,
        samples=tuple(samples),
        termination=termination,
        terminal_radius=float(terminal),
    )


def tangent_direction(arc):
    """Unit matrix tangent to the arc at its smallest recorded radius."""
    if len(arc.samples) < 3:
        raise InsufficientSamples("need at least 3 samples to certify a tangent")
    r1, xi1, _ = arc.samples[0]
    v = (xi1 - arc.center_xi) / r1
    v = v / np.linalg.norm(v)
    return embed(arc.chart, v)


def sphere_extremize(chart, center, r, mode="min", n_starts=8, seed=0):
    """Extremize the loss over the chart sphere |xi - center| = r.

    Multi-start projected gradient with Armijo backtracking; the first
    two starts are the extremal eigenvectors of the restricted Hessian
    at the center, the rest are seeded random directions. Returns
    (xi, value) of the best stationary point found.
    """
    if mode not in ("min", "max"):
        raise ValueError("mode must be 'min' or 'max'")
    if n_starts < 8:
        raise ValueError("need n_starts >= 8")
    if r <= 0:
        raise ValueError("need r > 0")
    center_xi = _center_in_chart(chart, center)
    n = chart.dim
    sign = 1.0 if mode == "min" else -1.0

    Hc = chart_hessian(chart, center_xi)
    evals, evecs = np.linalg.eigh(Hc)
    pick = 0 if mode == "min" else -1
    rng = np.random.default_rng(seed)
    dirs = [evecs[:, pick], -evecs[:, pick]]
    while len(dirs) < n_starts:
        v = rng.normal(size=n)
        dirs.append(v / np.linalg.norm(v))

    grad_fn = lambda x: chart_gradient(chart, x)
    hess_fn = lambda x: chart_hessian(chart, x)
    polish_cfg = TraceConfig()

    best_xi, best_val = None, None
    budget = 100_000
    for v0 in dirs:
        xi = center_xi + r * v0
        alpha = r / (1.0 + abs(evals[pick]) * r)
        fx = loss(embed(chart, xi))
        for _ in range(budget):
            u = xi - center_xi
            g = chart_gradient(chart, xi)
            gt = sign * (g - ((g @ u) / (r * r)) * u)
            gn = np.linalg.norm(gt)
            if gn <= 1e-6 * max(1.0, np.linalg.norm(g)):
                break
            # Armijo backtracking on the sphere; a stall means the
            # decrease fell below the loss rounding floor
            accepted = False
            for _ in range(60):
                u_new = u - alpha * gt
                xi_new = center_xi + (r / np.linalg.norm(u_new)) * u_new
                f_new = loss(embed(chart, xi_new))
                if sign * (f_new - fx) <= -1e-4 * alpha * gn * gn:
                    accepted = True
                    break
                alpha *= 0.5
            if not accepted:
                break
            xi, fx = xi_new, f_new
            alpha *= 2.0
        # Newton polish on the sphere stationarity system drives the
        # gradient the rest of the way to the 1e-9 target
        u = xi - center_xi
        g = chart_gradient(chart, xi)
        lam = (g @ u) / (2.0 * r * r)
        sol_xi, _, status = _newton_solve(grad_fn, hess_fn, center_xi, xi, lam, r, polish_cfg)
        if status != "ok":
            continue
        g = chart_gradient(chart, sol_xi)
        u = sol_xi - center_xi
        gt = g - ((g @ u) / (r * r)) * u
        if np.linalg.norm(gt) > 1e-9:
            continue
        fx = loss(embed(chart, sol_xi))
        if best_val is None or sign * (fx - best_val) < 0:
            best_xi, best_val = sol_xi, fx
    if best_xi is None:
        raise NoConvergence("no start reached stationarity on the sphere")
    return best_xi, float(best_val)


def _ambient_split(ambient):
    """Number of trailing singleton blocks in an (m, 1, ..., 1) ambient."""
    if isinstance(ambient, YoungPartitionGroup):
        blocks = ambient.blocks
        if any(b != 1 for b in blocks[1:]):
            raise InvalidPartition("ambients must have shape (m, 1, ..., 1)")
        return len(blocks) - 1
    return int(ambient)


def minimal_eig_directions(chart, H, cluster_tol=1e-5):
    """Canonical unit directions spanning the minimal eigenvalue cluster.

    A separated minimal eigenvalue yields its eigenvector alone. When the
    bottom of the spectrum is a cluster (symmetry copies are exactly
    degenerate, and distinct isotypic components can coincide too), the
    eigenvectors returned by a dense solver are an arbitrary rotation of
    the cluster space, so the cluster is re-split canonically: first by
    isotypic component, then by membership in the smaller ambient charts
    the chart contains, with any orthogonal remainder last. Returns
    (directions, min_eigenvalue).
    """
    evals, evecs = np.linalg.eigh(H)
    lam0 = float(evals[0])
    m = int(np.sum(evals <= evals[0] + cluster_tol * max(1.0, abs(lam0))))
    E = evecs[:, :m]
    if m == 1:
        return [E[:, 0]], lam0
    cands = []

    def add(v):
        for w in cands:
            v = v - (v @ w) * w
        nv = np.linalg.norm(v)
        if nv < 0.05:
            return
        v = v / nv
        Hv = H @ v
        ray = float(v @ Hv)
        if np.linalg.norm(Hv - ray * v) <= 5e-4 * max(np.linalg.norm(Hv), 1e-12):
            cands.append(v)

    d = chart.d
    k = len(chart.group.blocks) - 1
    subbases = []
    for kp in range(1, k):
        sub = build_chart(d, YoungPartitionGroup((d - kp,) + (1,) * kp))
        subbases.append(np.column_stack([project(chart, B) for B in sub.basis]))
    for label in ("t", "s", "x", "y"):
        A = np.column_stack(
            [project(chart, isotypic_project(embed(chart, E[:, j]), label)) for j in range(m)]
        )
        U, sv, _ = np.linalg.svd(A, full_matrices=False)
        L = U[:, sv > 0.05]
        if L.shape[1] == 0:
            continue
        if L.shape[1] > 1:
            for SB in subbases:
                M = L.T @ SB
                W, sv2, _ = np.linalg.svd(M, full_matrices=False)
                for i in range(len(sv2)):
                    if sv2[i] >= 1.0 - 1e-6:
                        add(L @ W[:, i])
        for j in range(L.shape[1]):
            add(L[:, j])
    for j in range(m):
        add(E[:, j])
    return cands, lam0


def arc_radius_table(families, ambients, ds, cfg=None, refine=None, keep_arcs=False):
    """Terminal radii of minimal-eigenvalue arcs over a (family, ambient, d) grid.

    `ambients` are (m, 1, ..., 1) partition groups or plain integers
    counting the singleton blocks. Every canonical direction of the
    minimal eigenvalue cluster is traced with both signs; the cell
    reports the smallest finite terminal radius, or 'inf' when every run
    reaches r_max. Per-cell failures are recorded as 'error:<name>'
    without aborting the rest of the table.

    `refine` optionally maps (family, d) to a CriticalPointRecord,
    letting callers cache refinements across cells. With `keep_arcs`
    each cell also carries the ArcRecord that realized its radius.
    """
    from .atlas import refine_critical, seed_minimum

    cfg = cfg or TraceConfig()
    if refine is None:
        cache = {}

        def refine(family, d):
            if (family, d) not in cache:
                cache[(family, d)] = refine_critical(*seed_minimum(family, d))
            return cache[(family, d)]

    ks = [_ambient_split(a) for a in ambients]
    table = {}
    for d in ds:
        for k in ks:
            chart = build_chart(d, YoungPartitionGroup((d - k,) + (1,) * k))
            for family in families:
                cell = {}
                try:
                    rec = refine(family, d)
                    center_xi = _center_in_chart(chart, rec)
                    Hc = chart_hessian(chart, center_xi)
                    dirs, lam0 = minimal_eig_directions(chart, Hc)
                except TangencyLabError as e:
                    cell["value"] = f"error:{type(e).__name__}"
                    cell["error"] = str(e)
                    table[(family, k, d)] = cell
                    continue
                radii, runs, arcs, fallback = [], [], [], None
                floor = 2.0 * cfg.delta_r
                for v in dirs:
                    B = embed(chart, v)
                    for s in (1.0, -1.0):
                        try:
                            arc = trace_arc(chart, rec, s * B, cfg)
                        except TangencyLabError as e:
                            runs.append((f"error:{type(e).__name__}", None))
                            continue
                        runs.append((arc.termination, float(arc.terminal_radius)))
                        if fallback is None:
                            fallback = arc
                        # an arc that dies almost at launch supports no
                        # tangency branch in this direction; skip it
                        if arc.termination != "ReachedRmax" and arc.terminal_radius > floor:
                            radii.append(arc.terminal_radius)
                            arcs.append(arc)
                if radii:
                    best = int(np.argmin(radii))
                    cell["radius"] = radii[best]
                    cell["value"] = "%.2f" % radii[best]
                    if keep_arcs:
                        cell["arc"] = arcs[best]
                else:
                    cell["radius"] = None
                    cell["value"] = "inf"
                    if keep_arcs and fallback is not None:
                        cell["arc"] = fallback
                cell["runs"] = tuple(runs)
                cell["n_directions"] = len(dirs)
                cell["min_eigenvalue"] = lam0
                table[(family, k, d)] = cell
    return table


def arc_to_json(arc, cfg=None):
    """JSON-ready dict: config, center fingerprint, flat samples, termination."""
    obj = {
        "blocks": list(arc.chart.group.blocks),
        "d": arc.chart.d,
        "center_xi": [float(x) for x in arc.center_xi],
        "radii": [float(r) for r, _, _ in arc.samples],
        "xi": [[float(x) for x in xi] for _, xi, _ in arc.samples],
        "lambda": [float(l) for _, _, l in arc.samples],
        "termination": arc.termination,
        "terminal_radius": arc.terminal_radius,
    }
    if cfg is not None:
        obj["config"] = {
            "delta_r": cfg.delta_r,
            "r_min": cfg.r_min,
            "r_max": cfg.r_max,
            "newton_tol": cfg.newton_tol,
            "max_newton_iters": cfg.max_newton_iters,
            "cond_threshold": cfg.cond_threshold,
        }
    return obj


def arc_from_json(obj):
    chart = build_chart(obj["d"], YoungPartitionGroup(tuple(obj["blocks"])))
    samples = tuple(
        (r, np.asarray(xi, dtype=float), lam)
        for r, xi, lam in zip(obj["radii"], obj["xi"], obj["lambda"])
    )
    return ArcRecord(
        chart=chart,
        center_xi=np.asarray(obj["center_xi"], dtype=float),
        samples=samples,
        termination=obj["termination"],
        terminal_radius=obj["terminal_radius"],
    )


def arc_to_csv(arc):
    """CSV of r, loss, lambda along the arc (for plotting profiles)."""
    lines = ["r,loss,lambda"]
    for r, xi, lam in arc.samples:
        lines.append("%.17g,%.17g,%.17g" % (r, loss(embed(arc.chart, xi)), lam))
    return "\n".join(lines) + "\n"
