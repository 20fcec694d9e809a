import json
import os
import subprocess
import sys

import pytest


def run_cli(args, cwd, env_extra=None, timeout=600):
    env = {k: v for k, v in os.environ.items() if k != "TANGENCY_LAB_OUT"}
    if env_extra:
        env.update(env_extra)
    return subprocess.run(
        [sys.executable, "-m", "tangency_lab.cli", *args],
        cwd=cwd, env=env, capture_output=True, text=True, timeout=timeout)


# ---------------------------------------------------------- config errors


@pytest.mark.parametrize("args", [
    ["minima", "--family", "C0I", "--d", "5"],
    ["minima", "--family", "C7X", "--d", "7"],
    ["sphere", "--family", "C0I", "--d", "7", "--r-grid", "0.1:0.001"],
    ["sphere", "--family", "C0I", "--d", "7", "--k", "9"],
    ["toy", "--resolution", "32"],
    ["toy", "--center", "nonsense"],
    ["arcs", "--family", "C0I", "--d", "7", "--k", "0"],
])
def test_bad_configuration_exits_2(tmp_path, args):
    res = run_cli(args + ["--out", "o"], tmp_path)
    assert res.returncode == 2, res.stderr
    assert res.stderr.strip()
    assert not (tmp_path / "o").exists() or not any((tmp_path / "o").iterdir())


# ------------------------------------------------------------------- toy


def test_toy_outputs_points_with_config_line(tmp_path):
    res = run_cli(["toy", "--center", "max", "--resolution", "96",
                   "--out", "o"], tmp_path)
    assert res.returncode == 0, res.stderr
    text = (tmp_path / "o" / "toy_points.csv").read_text()
    first, header, *rows = text.splitlines()
    assert first.startswith("# config: ")
    cfg = json.loads(first[len("# config: "):])
    assert cfg["resolution"] == 96
    assert header == "x,y,center"
    # the axes belong to the tangency set of the origin
    on_axis = [r for r in rows if r.startswith("0,") or ",0," in r]
    assert len(on_axis) >= 10


def test_toy_rerun_is_byte_identical(tmp_path):
    args = ["toy", "--center", "min", "--resolution", "96", "--out", "o"]
    assert run_cli(args, tmp_path).returncode == 0
    first = (tmp_path / "o" / "toy_points.csv").read_bytes()
    assert run_cli(args, tmp_path).returncode == 0
    assert (tmp_path / "o" / "toy_points.csv").read_bytes() == first


# ---------------------------------------------------------------- minima


def test_minima_reports_and_rerun(tmp_path):
    args = ["minima", "--family", "C0I,C1II", "--d", "7", "--out", "o"]
    res = run_cli(args, tmp_path)
    assert res.returncode == 0, res.stderr
    out = tmp_path / "o"
    table = (out / "minima_table.csv").read_text().splitlines()
    assert table[0].startswith("# config: ")
    assert table[1] == "family,d,loss,loss_predicted,absdiff,grad_norm,type"
    assert len(table) == 4
    rec = json.loads((out / "minimum_C1II_d7.json").read_text())
    assert rec["family"] == "C1II"
    assert rec["d"] == 7
    assert rec["grad_norm"] <= 1e-10
    assert rec["loss"] == pytest.approx(2.320271491357e-02, abs=1e-9)
    first = (out / "minima_table.csv").read_bytes()
    assert run_cli(args, tmp_path).returncode == 0
    assert (out / "minima_table.csv").read_bytes() == first


# -------------------------------------------------------------- spectrum


def test_spectrum_json_and_csv(tmp_path):
    res = run_cli(["spectrum", "--family", "C0I,C0II", "--d", "7", "--brute",
                   "--out", "o"], tmp_path)
    assert res.returncode == 0, res.stderr
    out = tmp_path / "o"
    rep = json.loads((out / "spectrum_C0I_d7.json").read_text())
    assert sum(e["multiplicity"] for e in rep["entries"]) == 49
    for e in rep["entries"]:
        assert abs(e["eigenvalue"] - e["predicted"]) == pytest.approx(
            e["absdiff"], abs=1e-15)
    assert rep["brute_max_absdiff"] <= 1e-6
    csv_lines = (out / "spectrum_table_d7.csv").read_text().splitlines()
    assert csv_lines[0].startswith("# config: ")
    assert csv_lines[1].split(",")[:2] == ["component", "slot"]
    # slot depth for the unsplit families: two t, three s, one x, one y
    assert len(csv_lines) == 2 + 2 + 3 + 1 + 1


# ----------------------------------------------------------------- arcs


def test_arcs_single_cell_and_seed_independence(tmp_path):
    base = ["arcs", "--family", "C1II", "--d", "7", "--k", "2"]
    res = run_cli(base + ["--seed", "1", "--out", "a"], tmp_path)
    assert res.returncode == 0, res.stderr
    out = tmp_path / "a"
    table = (out / "arcs_table.csv").read_text().splitlines()
    assert table[1] == "d,k,C1II"
    assert table[2] == "7,2,0.31"
    runs = json.loads((out / "arcs_runs.json").read_text())
    cell = runs["cells"]["C1II_k2_d7"]
    assert cell["value"] == "0.31"
    assert all(tag in ("StepStalled", "SingularJacobian", "ReachedRmax",
                       "NewtonDiverged") for tag, _ in cell["runs"])
    arc = json.loads((out / "arc_C1II_k2_d7.json").read_text())
    assert arc["termination"] in ("StepStalled", "SingularJacobian")
    assert arc["terminal_radius"] == pytest.approx(0.31, abs=0.05)
    profile = (out / "arc_C1II_k2_d7.csv").read_text().splitlines()
    assert profile[0] == "r,loss,lambda"
    # the RNG seed plays no role in the deterministic pipeline
    res = run_cli(base + ["--seed", "2", "--out", "b"], tmp_path)
    assert res.returncode == 0, res.stderr
    a = (tmp_path / "a" / "arcs_table.csv").read_text().splitlines()[1:]
    b = (tmp_path / "b" / "arcs_table.csv").read_text().splitlines()[1:]
    assert a == b


# ---------------------------------------------------------------- sphere


def test_sphere_report(tmp_path):
    res = run_cli(["sphere", "--family", "C1II", "--d", "7", "--k", "2",
                   "--mode", "min", "--r-grid", "1e-3:1e-2", "--r-count", "2",
                   "--out", "o"], tmp_path)
    assert res.returncode == 0, res.stderr
    out = tmp_path / "o"
    rep = json.loads((out / "sphere_C1II_d7_k2.json").read_text())
    assert len(rep["rows"]) == 2
    row = rep["rows"][0]
    assert row["r"] == pytest.approx(1e-3)
    assert row["min_isotropy"] == "5+1+1"
    assert row["min_label"] == "s"
    # center is a local minimum, so the sphere minimum sits above it by
    # about lam_min / 2 * r^2
    rate = (row["m_r"] - row["loss_center"]) / row["r"] ** 2
    assert rate == pytest.approx(0.00703, rel=0.05)
    csv_lines = (out / "sphere_C1II_d7_k2.csv").read_text().splitlines()
    assert csv_lines[1].split(",")[:3] == ["r", "m_r", "min_isotropy"]


# ------------------------------------------------------------ env + config


def test_out_env_override(tmp_path):
    res = run_cli(["toy", "--resolution", "96", "--out", "ignored"], tmp_path,
                  env_extra={"TANGENCY_LAB_OUT": str(tmp_path / "envdir")})
    assert res.returncode == 0, res.stderr
    assert (tmp_path / "envdir" / "toy_points.csv").exists()
    assert not (tmp_path / "ignored").exists()


def test_config_file_defaults_and_precedence(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"resolution": 96, "center": "saddle"}))
    res = run_cli(["toy", "--config", str(cfg), "--out", "o"], tmp_path)
    assert res.returncode == 0, res.stderr
    line = (tmp_path / "o" / "toy_points.csv").read_text().splitlines()[0]
    embedded = json.loads(line[len("# config: "):])
    assert embedded["resolution"] == 96
    assert embedded["center"] == ["saddle"]
    res = run_cli(["toy", "--config", str(cfg), "--resolution", "128",
                   "--out", "p"], tmp_path)
    assert res.returncode == 0, res.stderr
    line = (tmp_path / "p" / "toy_points.csv").read_text().splitlines()[0]
    embedded = json.loads(line[len("# config: "):])
    assert embedded["resolution"] == 128
    assert embedded["center"] == ["saddle"]
