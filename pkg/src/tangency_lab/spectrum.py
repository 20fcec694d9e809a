"""Hessian spectra at symmetric critical points, assembled from small blocks.

The Hessian of the closed-form loss at a point fixed by a diagonal
permutation group splits along isotypic components. Each component
contributes one small block: the chart-restricted Hessian (multiplicity
one per eigenvalue), an m x m interaction matrix over standard-copy
representatives (multiplicity d-p-1), and two Rayleigh quotients
(multiplicities quadratic in d). A dense eigensolve over all d^2
elementary directions serves as the oracle at small d.
"""

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import (
    MultiplicityMismatch,
    RepresentativeDegenerate,
    TooLarge,
    UnsupportedFamily,
)
from .atlas import chart_hessian
from .kernel import hvp
from .symmetry import embed, representative

#: family tags in the fixed column order used by the CSV layout
FAMILY_ORDER = ("C0I", "C0II", "C1I", "C1II")


@dataclass(frozen=True)
class SpectrumReport:
    """Eigenvalues with multiplicities and isotypic labels; sums to d^2."""

    entries: tuple  # of (eigenvalue, multiplicity, label)
    d: int


def _split_p(record):
    blocks = record.chart.group.blocks
    if blocks == (record.d,):
        return 0
    if blocks == (record.d - 1, 1):
        return 1
    raise UnsupportedFamily(f"spectra support partitions (d,) and (d-1,1), got {blocks}")


def t_block_spectrum(record):
    """Eigenvalues of the Hessian restricted to the isotropy chart."""
    _split_p(record)
    return list(np.linalg.eigvalsh(chart_hessian(record.chart, record.xi)))


def _s_copies(record):
    """Standard-copy representatives for the record's isotropy."""
    d = record.d
    if _split_p(record) == 0:
        return [representative("s", c, d) for c in (1, 2, 3)]
    # five copies for the split isotropy: the three block embeddings of
    # u = (1,...,1,-(d-2)) plus the two cross vectors
    u = np.ones(d - 1)
    u[-1] = -(d - 2)
    mats = []
    D = np.zeros((d, d))
    D[: d - 1, : d - 1] = np.diag(u)
    mats.append(D)
    Ssym = u[:, None] + u[None, :]
    np.fill_diagonal(Ssym, 0.0)
    M = np.zeros((d, d))
    M[: d - 1, : d - 1] = Ssym
    mats.append(M)
    A = u[:, None] - u[None, :]
    M = np.zeros((d, d))
    M[: d - 1, : d - 1] = A
    mats.append(M)
    M = np.zeros((d, d))
    M[: d - 1, -1] = u
    mats.append(M)
    M = np.zeros((d, d))
    M[-1, : d - 1] = u
    mats.append(M)
    return mats


def s_block_spectrum(record):
    """Eigenvalues of the interaction matrix over the standard copies.

    Copies are normalized to unit Frobenius norm first; their span is
    invariant, so the interaction matrix is then symmetric up to finite
    difference noise and symmetrization is safe.
    """
    W = embed(record.chart, record.xi)
    copies = _s_copies(record)
    for S in copies:
        if np.linalg.norm(S) < 1e-10:
            raise RepresentativeDegenerate("standard-copy representative has tiny norm")
    copies = [S / np.linalg.norm(S) for S in copies]
    m = len(copies)
    alpha = np.empty((m, m))
    for i in range(m):
        Hi = hvp(W, copies[i])
        for j in range(m):
            alpha[i, j] = float(np.sum(Hi * copies[j]))
    alpha = 0.5 * (alpha + alpha.T)
    return list(np.linalg.eigvalsh(alpha))


def _rayleigh(record, label):
    d = record.d
    p = _split_p(record)
    R = representative(label, 1, d - p)
    if p:
        M = np.zeros((d, d))
        M[: d - 1, : d - 1] = R
        R = M
    nrm2 = float(np.sum(R * R))
    if np.sqrt(nrm2) < 1e-10:
        raise RepresentativeDegenerate(f"{label}-representative has tiny norm")
    W = embed(record.chart, record.xi)
    return float(np.sum(hvp(W, R) * R)) / nrm2


def x_eigenvalue(record):
    """Single eigenvalue on the skew zero-row-sum component."""
    return _rayleigh(record, "x")


def y_eigenvalue(record):
    """Single eigenvalue on the hollow symmetric zero-row-sum component."""
    return _rayleigh(record, "y")


def full_spectrum(record):
    """All d^2 Hessian eigenvalues grouped by isotypic label."""
    d = record.d
    p = _split_p(record)
    entries = []
    for ev in t_block_spectrum(record):
        entries.append((float(ev), 1, "t"))
    for ev in s_block_spectrum(record):
        entries.append((float(ev), d - p - 1, "s"))
    q = d - p
    entries.append((x_eigenvalue(record), (q - 1) * (q - 2) // 2, "x"))
    entries.append((y_eigenvalue(record), q * (q - 3) // 2, "y"))
    total = sum(mult for _, mult, _ in entries)
    if total != d * d:
        raise MultiplicityMismatch(f"multiplicities sum to {total}, expected {d * d}")
    return SpectrumReport(entries=tuple(entries), d=d)


def predicted_spectrum(family, d):
    """Two-term large-d eigenvalue approximations, grouped like full_spectrum.

    Every entry is the sum of a leading term and one correction in powers
    of d**-0.5. Blocks are sorted ascending at the evaluation width so
    entries pair off against computed spectra slot by slot.
    """
    pi = np.pi
    rd = np.sqrt(d)
    t_growth = [
        d / (2 * pi) + (-pi**2 - 4 + 6 * pi) / (4 * pi * (2 - pi)),
        d / 4 + (-pi**2 - 2 * pi + 4) / (4 * pi * (2 - pi)),
    ]
    if family == "C0I":
        p = 0
        t = list(t_growth)
        s = [(pi - 2) / (4 * pi), 0.25 - 2 / (pi * rd), d / 4 + 0.25]
        x = (pi - 2) / (4 * pi) - 1 / (pi * rd)
        y = (pi + 2) / (4 * pi) - 1 / (pi * rd)
    elif family == "C0II":
        p = 0
        t = list(t_growth)
        s = [(pi - 2) / (4 * pi), 0.25 + (pi - 1) / (pi**2 * d), d / 4 + 0.25]
        x = (pi - 2) / (4 * pi)
        y = (pi + 2) / (4 * pi)
    elif family == "C1I":
        p = 1
        t = [
            (pi - 2) / (4 * pi) + 4 * (pi - 1) / (pi**3 * d),
            0.25 + (pi**3 + 10 * pi**2 - 50 * pi + 24) / (pi**4 * d**2),
            d / 4 + 0.25,
        ] + t_growth
        s = [
            (pi - 2) / (4 * pi) + (2 - pi) / (2 * pi**2 * d),
            (pi - 2) / (4 * pi),
            0.25 + (2 * pi - 3) / (pi**2 * d),
            (pi + 2) / (4 * pi) + 3 * (2 - pi) / (2 * pi**2 * d),
            d / 4 + 0.25,
        ]
        x = (pi - 2) / (4 * pi) - 1 / (pi * rd)
        y = (pi + 2) / (4 * pi) - 1 / (pi * rd)
    elif family == "C1II":
        p = 1
        t = [
            (pi - 2) / (4 * pi) + 2 * (pi - 2) / (pi**2 * d),
            0.25 + (2 * pi - 1) / (pi**2 * d),
            d / 4 + 0.25,
        ] + t_growth
        s = [
            (pi - 2) / (4 * pi) - 1 / (pi**2 * rd),
            (pi - 2) / (4 * pi) + (-(pi**3) / 2 - 8 - pi) / (pi**4 * d),
            0.25 + (-2 * pi**2 - 8 + 7 * pi) / (pi**3 * d),
            (pi + 2) / (4 * pi) - 1 / (pi**2 * rd),
            d / 4 + 0.25,
        ]
        x = (pi - 2) / (4 * pi) - 1 / (pi * d)
        y = (pi + 2) / (4 * pi)
    else:
        raise UnsupportedFamily(f"unknown family {family!r}")
    q = d - p
    entries = [(float(ev), 1, "t") for ev in sorted(t)]
    entries += [(float(ev), d - p - 1, "s") for ev in sorted(s)]
    entries.append((float(x), (q - 1) * (q - 2) // 2, "x"))
    entries.append((float(y), q * (q - 3) // 2, "y"))
    return SpectrumReport(entries=tuple(entries), d=d)


def brute_spectrum(W):
    """Dense Hessian spectrum via hvp on all d^2 elementary directions."""
    W = np.asarray(W, dtype=float)
    d = W.shape[0]
    if d > 12:
        raise TooLarge("dense spectra are limited to d <= 12")
    n = d * d
    H = np.empty((n, n))
    E = np.zeros((d, d))
    for k in range(n):
        E.flat[k] = 1.0
        H[:, k] = hvp(W, E).ravel()
        E.flat[k] = 0.0
    H = 0.5 * (H + H.T)
    return list(np.linalg.eigvalsh(H))


def expand_report(report):
    """Sorted list of all d^2 eigenvalues, multiplicities expanded."""
    out = []
    for ev, mult, _ in report.entries:
        out.extend([ev] * mult)
    return sorted(out)


def report_to_json(report):
    return {
        "d": report.d,
        "entries": [
            {"eigenvalue": ev, "multiplicity": mult, "label": label}
            for ev, mult, label in report.entries
        ],
    }


def report_from_json(obj):
    return SpectrumReport(
        entries=tuple(
            (e["eigenvalue"], e["multiplicity"], e["label"]) for e in obj["entries"]
        ),
        d=obj["d"],
    )


def reports_to_csv(reports):
    """Wide CSV: rows are component slots, columns are families.

    `reports` maps family tag -> SpectrumReport. Cells hold eigenvalues at
    17 significant digits; each family also gets a multiplicity column.
    """
    fams = [f for f in FAMILY_ORDER if f in reports] + [
        f for f in reports if f not in FAMILY_ORDER
    ]
    per = {}
    slots = []
    for fam in fams:
        by_label = {}
        for ev, mult, label in reports[fam].entries:
            by_label.setdefault(label, []).append((ev, mult))
        per[fam] = by_label
    for label in ("t", "s", "x", "y"):
        depth = max((len(per[f].get(label, ())) for f in fams), default=0)
        slots.extend((label, k) for k in range(depth))

    buf = io.StringIO()
    w = csv.writer(buf)
    header = ["component", "slot"]
    for fam in fams:
        header += [fam, fam + "_mult"]
    w.writerow(header)
    for label, k in slots:
        row = [label, k + 1]
        for fam in fams:
            vals = per[fam].get(label, [])
            if k < len(vals):
                row += ["%.17g" % vals[k][0], vals[k][1]]
            else:
                row += ["", ""]
        w.writerow(row)
    return buf.getvalue()
