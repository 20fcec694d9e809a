"""Command line front end: regenerate tables and figure data.

Subcommands write JSON records and CSV tables into an output directory.
Every file embeds the numerically relevant part of its run
configuration, floats are serialized at 17 significant digits, and
reruns with identical configuration are byte-identical. Exit codes:
0 success, 2 invalid configuration, 3 numerical failure (partial
outputs are kept).
"""

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .atlas import FAMILIES, MIN_D, predicted_loss, refine_critical, seed_minimum
from .errors import TangencyLabError
from .spectrum import brute_spectrum, expand_report, full_spectrum, predicted_spectrum
from .symmetry import (
    YoungPartitionGroup,
    build_chart,
    detect_diagonal_isotropy,
    embed,
    isotypic_project,
    project,
)
from .toy import CRITICAL_POINTS, points_to_csv, sample_tangency_set
from .tracer import (
    TraceConfig,
    arc_radius_table,
    arc_to_csv,
    arc_to_json,
    sphere_extremize,
)


class ConfigError(Exception):
    """Invalid command line or config-file values; exits with code 2."""


def _json_text(obj):
    """Deterministic JSON: sorted keys, floats at 17 significant digits."""
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return "%.17g" % float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(_json_text(x) for x in obj) + "]"
    if isinstance(obj, dict):
        items = sorted(obj.items(), key=lambda kv: str(kv[0]))
        return "{" + ",".join(json.dumps(str(k)) + ":" + _json_text(v) for k, v in items) + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _write(outdir, name, text):
    path = os.path.join(outdir, name)
    with open(path, "w") as fh:
        fh.write(text)
    return path


def _write_json(outdir, name, obj):
    return _write(outdir, name, _json_text(obj) + "\n")


def _csv_header(config):
    return "# config: " + _json_text(config) + "\n"


def _parse_int_list(text, what):
    try:
        vals = [int(x) for x in str(text).split(",") if x != ""]
    except ValueError:
        raise ConfigError(f"{what} must be a comma separated integer list, got {text!r}")
    if not vals:
        raise ConfigError(f"{what} list is empty")
    return vals


def _parse_families(text):
    fams = [f for f in str(text).split(",") if f != ""]
    for f in fams:
        if f not in FAMILIES:
            raise ConfigError(f"unknown family {f!r}; choose from {', '.join(FAMILIES)}")
    if not fams:
        raise ConfigError("family list is empty")
    return fams


def _check_widths(ds):
    for d in ds:
        if d < MIN_D:
            raise ConfigError(f"width d={d} is below the supported minimum {MIN_D}")


def _parse_range(text, what):
    parts = str(text).split(":")
    if len(parts) != 2:
        raise ConfigError(f"{what} must look like lo:hi, got {text!r}")
    try:
        lo, hi = float(parts[0]), float(parts[1])
    except ValueError:
        raise ConfigError(f"{what} must be numeric, got {text!r}")
    if not lo < hi:
        raise ConfigError(f"{what} must be increasing, got {text!r}")
    return lo, hi


def _partition_text(group):
    return "+".join(str(b) for b in group.blocks)


def _refine_cached(cache, family, d):
    if (family, d) not in cache:
        cache[(family, d)] = refine_critical(*seed_minimum(family, d))
    return cache[(family, d)]


# ---------------------------------------------------------------- spectrum


def cmd_spectrum(args, outdir):
    families = _parse_families(args.family)
    ds = _parse_int_list(args.d, "--d")
    _check_widths(ds)
    if args.brute:
        for d in ds:
            if d > 12:
                raise ConfigError(f"--brute needs d <= 12 for the dense oracle, got {d}")
    config = {
        "command": "spectrum",
        "family": families,
        "d": ds,
        "brute": bool(args.brute),
        "seed": args.seed,
    }
    cache = {}
    by_d = {}
    for d in ds:
        for fam in families:
            rec = _refine_cached(cache, fam, d)
            comp = full_spectrum(rec)
            pred = predicted_spectrum(fam, d)
            entries = []
            for (ev, mult, label), (pv, _, _) in zip(comp.entries, pred.entries):
                entries.append(
                    {
                        "eigenvalue": ev,
                        "multiplicity": mult,
                        "label": label,
                        "predicted": pv,
                        "absdiff": abs(ev - pv),
                    }
                )
            payload = {
                "config": config,
                "family": fam,
                "d": d,
                "loss": rec.loss_value,
                "loss_predicted": predicted_loss(fam, d),
                "entries": entries,
            }
            if args.brute:
                dense = brute_spectrum(embed(rec.chart, rec.xi))
                flat = expand_report(comp)
                payload["brute_max_absdiff"] = max(
                    abs(a - b) for a, b in zip(flat, dense)
                )
            _write_json(outdir, f"spectrum_{fam}_d{d}.json", payload)
            by_d.setdefault(d, {})[fam] = payload

    for d, per_fam in sorted(by_d.items()):
        lines = [_csv_header(config).rstrip("\n")]
        cols = ["component", "slot"]
        for fam in families:
            cols += [fam, fam + "_mult", fam + "_absdiff"]
            if args.brute:
                cols.append(fam + "_brute")
        lines.append(",".join(cols))
        depth = {}
        for fam in families:
            for e in per_fam[fam]["entries"]:
                depth[e["label"]] = max(depth.get(e["label"], 0), 1)
        slots = {}
        for fam in families:
            by_label = {}
            for e in per_fam[fam]["entries"]:
                by_label.setdefault(e["label"], []).append(e)
            slots[fam] = by_label
        for label in ("t", "s", "x", "y"):
            n = max(len(slots[f].get(label, [])) for f in families)
            for k in range(n):
                row = [label, str(k + 1)]
                for fam in families:
                    es = slots[fam].get(label, [])
                    if k < len(es):
                        e = es[k]
                        row += [
                            "%.17g" % e["eigenvalue"],
                            str(e["multiplicity"]),
                            "%.17g" % e["absdiff"],
                        ]
                    else:
                        row += ["", "", ""]
                    if args.brute:
                        row.append("%.17g" % per_fam[fam]["brute_max_absdiff"])
                lines.append(",".join(row))
        _write(outdir, f"spectrum_table_d{d}.csv", "\n".join(lines) + "\n")
    return 0


# -------------------------------------------------------------------- arcs


def _trace_config(args):
    kw = {}
    for name in ("delta_r", "r_min", "r_max", "newton_tol", "cond_threshold"):
        val = getattr(args, name, None)
        if val is not None:
            kw[name] = float(val)
    if getattr(args, "max_newton_iters", None) is not None:
        kw["max_newton_iters"] = int(args.max_newton_iters)
    try:
        return TraceConfig(**kw)
    except ValueError as e:
        raise ConfigError(str(e))


def _arc_cell(task):
    family, k, d, cfg_kw = task
    cfg = TraceConfig(**cfg_kw)
    table = arc_radius_table([family], [k], [d], cfg=cfg, keep_arcs=True)
    return (family, k, d), table[(family, k, d)]


def cmd_arcs(args, outdir):
    families = _parse_families(args.family)
    ds = _parse_int_list(args.d, "--d")
    ks = _parse_int_list(args.k, "--k")
    _check_widths(ds)
    for k in ks:
        if k < 1 or k > min(ds) - 4:
            raise ConfigError(f"ambient split k={k} must satisfy 1 <= k <= d-4")
    cfg = _trace_config(args)
    cfg_kw = {
        "delta_r": cfg.delta_r,
        "r_min": cfg.r_min,
        "r_max": cfg.r_max,
        "newton_tol": cfg.newton_tol,
        "max_newton_iters": cfg.max_newton_iters,
        "cond_threshold": cfg.cond_threshold,
    }
    config = {
        "command": "arcs",
        "family": families,
        "d": ds,
        "k": ks,
        "trace": cfg_kw,
        "seed": args.seed,
    }
    tasks = [
        (fam, k, d, cfg_kw) for d in sorted(ds) for k in sorted(ks) for fam in families
    ]
    jobs = args.jobs if args.jobs else 1
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = dict(pool.map(_arc_cell, tasks))
    else:
        results = dict(_arc_cell(t) for t in tasks)

    failed = False
    lines = [_csv_header(config).rstrip("\n")]
    lines.append("d,k," + ",".join(families))
    runs_payload = {}
    for d in sorted(ds):
        for k in sorted(ks):
            row = [str(d), str(k)]
            for fam in families:
                cell = results[(fam, k, d)]
                row.append(cell["value"])
                if cell["value"].startswith("error:"):
                    failed = True
                key = f"{fam}_k{k}_d{d}"
                meta = {
                    "value": cell["value"],
                    "radius": cell.get("radius"),
                    "runs": cell.get("runs"),
                    "n_directions": cell.get("n_directions"),
                    "min_eigenvalue": cell.get("min_eigenvalue"),
                    "error": cell.get("error"),
                }
                runs_payload[key] = meta
                arc = cell.get("arc")
                if arc is not None:
                    _write_json(outdir, f"arc_{key}.json", arc_to_json(arc, cfg))
                    _write(outdir, f"arc_{key}.csv", arc_to_csv(arc))
            lines.append(",".join(row))
    _write(outdir, "arcs_table.csv", "\n".join(lines) + "\n")
    _write_json(outdir, "arcs_runs.json", {"config": config, "cells": runs_payload})
    return 3 if failed else 0


# ------------------------------------------------------------------ sphere


def cmd_sphere(args, outdir):
    families = _parse_families(args.family)
    if len(families) != 1:
        raise ConfigError("sphere takes a single --family")
    family = families[0]
    ds = _parse_int_list(args.d, "--d")
    if len(ds) != 1:
        raise ConfigError("sphere takes a single --d")
    d = ds[0]
    _check_widths([d])
    k = int(args.k)
    if k < 1 or k > d - 4:
        raise ConfigError(f"ambient split k={k} must satisfy 1 <= k <= d-4")
    if args.mode not in ("min", "max", "both"):
        raise ConfigError(f"--mode must be min, max or both, got {args.mode!r}")
    lo, hi = _parse_range(args.r_grid, "--r-grid")
    if lo <= 0:
        raise ConfigError("--r-grid radii must be positive")
    count = int(args.r_count)
    if count < 2:
        raise ConfigError("--r-count must be at least 2")
    n_starts = int(args.n_starts)
    config = {
        "command": "sphere",
        "family": family,
        "d": d,
        "k": k,
        "mode": args.mode,
        "r_grid": [lo, hi],
        "r_count": count,
        "n_starts": n_starts,
        "seed": args.seed,
    }
    chart = build_chart(d, YoungPartitionGroup((d - k,) + (1,) * k))
    rec = refine_critical(*seed_minimum(family, d))
    center = project(chart, embed(rec.chart, rec.xi))
    special = (d - 1,) if family in ("C1I", "C1II") else ()
    radii = np.geomspace(lo, hi, count)

    def describe(xi):
        disp = embed(chart, xi - center)
        iso = _partition_text(detect_diagonal_isotropy(disp))
        norms = {
            lab: float(np.linalg.norm(isotypic_project(disp, lab, special=special)))
            for lab in ("t", "s", "x", "y")
        }
        dominant = max(sorted(norms), key=lambda lab: norms[lab])
        return iso, dominant

    rows = []
    for r in radii:
        row = {"r": float(r), "loss_center": rec.loss_value}
        if args.mode in ("min", "both"):
            xi, val = sphere_extremize(chart, rec, float(r), mode="min",
                                       n_starts=n_starts, seed=args.seed)
            iso, lab = describe(xi)
            row.update(m_r=val, min_isotropy=iso, min_label=lab)
        if args.mode in ("max", "both"):
            xi, val = sphere_extremize(chart, rec, float(r), mode="max",
                                       n_starts=n_starts, seed=args.seed)
            iso, lab = describe(xi)
            row.update(M_r=val, max_isotropy=iso, max_label=lab)
        rows.append(row)

    name = f"sphere_{family}_d{d}_k{k}"
    _write_json(outdir, name + ".json", {"config": config, "rows": rows})
    cols = ["r", "m_r", "min_isotropy", "min_label", "M_r", "max_isotropy", "max_label"]
    lines = [_csv_header(config).rstrip("\n"), ",".join(cols)]
    for row in rows:
        out = ["%.17g" % row["r"]]
        for c in ("m_r", "min_isotropy", "min_label", "M_r", "max_isotropy", "max_label"):
            v = row.get(c, "")
            out.append("%.17g" % v if isinstance(v, float) else str(v))
        lines.append(",".join(out))
    _write(outdir, name + ".csv", "\n".join(lines) + "\n")
    return 0


# --------------------------------------------------------------------- toy


_TOY_CENTERS = {
    "max": CRITICAL_POINTS[0],
    "saddle": CRITICAL_POINTS[1],
    "min": CRITICAL_POINTS[5],
}


def cmd_toy(args, outdir):
    names = str(args.center).split(",") if args.center != "all" else ["max", "saddle", "min"]
    centers = {}
    for name in names:
        if name in _TOY_CENTERS:
            centers[name] = _TOY_CENTERS[name]
        else:
            parts = name.split(":")
            if len(parts) != 2:
                raise ConfigError(
                    f"--center must be max, saddle, min, all or x:y, got {name!r}"
                )
            try:
                centers[name] = (float(parts[0]), float(parts[1]))
            except ValueError:
                raise ConfigError(f"--center coordinates must be numeric, got {name!r}")
    resolution = int(args.resolution)
    if resolution < 64:
        raise ConfigError("--resolution must be at least 64")
    lo, hi = _parse_range(args.extent, "--extent")
    config = {
        "command": "toy",
        "center": sorted(centers),
        "resolution": resolution,
        "extent": [lo, hi],
        "seed": args.seed,
    }
    clouds = {}
    for name in sorted(centers):
        clouds[name] = sample_tangency_set(centers[name], resolution=resolution,
                                           extent=(lo, hi))
    text = _csv_header(config) + points_to_csv(clouds)
    _write(outdir, "toy_points.csv", text)
    return 0


# ------------------------------------------------------------------ minima


def cmd_minima(args, outdir):
    families = _parse_families(args.family)
    ds = _parse_int_list(args.d, "--d")
    _check_widths(ds)
    config = {"command": "minima", "family": families, "d": ds, "seed": args.seed}
    lines = [_csv_header(config).rstrip("\n")]
    lines.append("family,d,loss,loss_predicted,absdiff,grad_norm,type")
    cache = {}
    for d in sorted(ds):
        for fam in families:
            rec = _refine_cached(cache, fam, d)
            pred = predicted_loss(fam, d)
            payload = {
                "config": config,
                "family": fam,
                "d": d,
                "blocks": list(rec.chart.group.blocks),
                "xi": [float(x) for x in rec.xi],
                "loss": rec.loss_value,
                "loss_predicted": pred,
                "grad_norm": rec.grad_norm,
                "type": rec.type_label,
            }
            _write_json(outdir, f"minimum_{fam}_d{d}.json", payload)
            lines.append(
                ",".join(
                    [
                        fam,
                        str(d),
                        "%.17g" % rec.loss_value,
                        "%.17g" % pred,
                        "%.17g" % abs(rec.loss_value - pred),
                        "%.17g" % rec.grad_norm,
                        rec.type_label,
                    ]
                )
            )
    _write(outdir, "minima_table.csv", "\n".join(lines) + "\n")
    return 0


# -------------------------------------------------------------------- main


def _build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default="tangency-lab-out",
                        help="output directory (TANGENCY_LAB_OUT overrides)")
    common.add_argument("--seed", type=int, default=0, help="RNG seed")
    common.add_argument("--jobs", type=int, default=0,
                        help="parallel worker count (0 = sequential)")
    common.add_argument("--config", default=None,
                        help="JSON file whose entries become flag defaults")

    parser = argparse.ArgumentParser(
        prog="tangency-lab",
        description="Regenerate loss, spectrum, arc and toy-model tables.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spectrum", parents=[common],
                       help="Hessian spectra with series predictions")
    p.add_argument("--family", default=",".join(FAMILIES))
    p.add_argument("--d", default="7,20,100")
    p.add_argument("--brute", action="store_true",
                   help="add the dense-oracle agreement column (d <= 12)")
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("arcs", parents=[common],
                       help="terminal radii of minimal-eigenvalue arcs")
    p.add_argument("--family", default=",".join(FAMILIES))
    p.add_argument("--d", default="7,20,100")
    p.add_argument("--k", default="1,2,3", help="ambient splits (singleton counts)")
    p.add_argument("--delta-r", dest="delta_r", type=float, default=None)
    p.add_argument("--r-min", dest="r_min", type=float, default=None)
    p.add_argument("--r-max", dest="r_max", type=float, default=None)
    p.add_argument("--newton-tol", dest="newton_tol", type=float, default=None)
    p.add_argument("--max-newton-iters", dest="max_newton_iters", type=int, default=None)
    p.add_argument("--cond-threshold", dest="cond_threshold", type=float, default=None)
    p.set_defaults(func=cmd_arcs)

    p = sub.add_parser("sphere", parents=[common],
                       help="sphere-restricted extremal loss profiles")
    p.add_argument("--family", default="C0I")
    p.add_argument("--d", default="7")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--mode", default="both", help="min, max or both")
    p.add_argument("--r-grid", dest="r_grid", default="1e-3:1e-1")
    p.add_argument("--r-count", dest="r_count", type=int, default=9)
    p.add_argument("--n-starts", dest="n_starts", type=int, default=8)
    p.set_defaults(func=cmd_sphere)

    p = sub.add_parser("toy", parents=[common],
                       help="planar tangency point clouds")
    p.add_argument("--center", default="max",
                   help="max, saddle, min, all, x:y, or a comma list")
    p.add_argument("--resolution", type=int, default=512)
    p.add_argument("--extent", default="-2:2")
    p.set_defaults(func=cmd_toy)

    p = sub.add_parser("minima", parents=[common],
                       help="refined minima with loss predictions")
    p.add_argument("--family", default=",".join(FAMILIES))
    p.add_argument("--d", default="7,20,100")
    p.set_defaults(func=cmd_minima)
    return parser


def _apply_config_file(parser, argv):
    """Use --config entries as defaults; explicit flags still win."""
    probe = argparse.ArgumentParser(add_help=False)
    probe.add_argument("--config", default=None)
    known, _ = probe.parse_known_args(argv)
    if not known.config:
        return
    try:
        with open(known.config) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read config file {known.config!r}: {e}")
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    for action in parser._subparsers._group_actions:
        for sp in action.choices.values():
            sp.set_defaults(**{k: v for k, v in data.items() if k != "config"})


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = _build_parser()
    try:
        _apply_config_file(parser, argv)
        args = parser.parse_args(argv)
        outdir = os.environ.get("TANGENCY_LAB_OUT") or args.out
        os.makedirs(outdir, exist_ok=True)
        return args.func(args, outdir)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except TangencyLabError as e:
        report = {"error": type(e).__name__, "message": str(e)}
        try:
            _write_json(outdir, "error.json", report)
        except OSError:
            pass
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
