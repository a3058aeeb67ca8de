import json
import subprocess
import sys

import pytest

from metasir import analytics, cli
from metasir.config import ConfigError, GridSpec
from metasir.errors import QuadratureFailure

NET = ["--lambda", "1", "--alpha", "4", "--R", "0.5"]


def run(argv, capsys):
    code = cli.main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def parse_csv(text):
    lines = text.split("\n")
    assert lines[0].startswith("# manifest ")
    manifest = json.loads(lines[0][len("# manifest "):])
    header = lines[1].split(",")
    rows = [line.split(",") for line in lines[2:] if line]
    return manifest, header, rows


def test_md_gil_pelaez_csv(capsys):
    code, out, err = run(
        ["md", *NET, "--theta", "1", "--method", "gilpelaez", "--x-grid", "0.01:0.99:99:linear"], capsys
    )
    assert code == 0
    manifest, header, rows = parse_csv(out)
    assert header == ["x", "md"] and len(rows) == 99
    assert manifest["method"] == "gilpelaez" and manifest["theta"] == 1.0
    assert "manifest" in err
    assert "\r" not in out
    assert float(rows[0][0]) == 0.01
    values = [float(r[1]) for r in rows]
    assert all(a >= b - 1e-6 for a, b in zip(values, values[1:]))


def test_validate_duality(capsys):
    code, out, err = run(
        ["validate", "--suite", "duality", "--samples", "10000", "--seed", "42", *NET,
         "--theta", "1", "--nu", "0.9"],
        capsys,
    )
    assert code == 0
    _, header, rows = parse_csv(out)
    assert header == ["theta", "nu", "n", "violations", "guard_excluded"]
    assert rows[0][2] == "10000" and rows[0][3] == "0"
    assert "PASS" in err


def test_bad_exponent_is_usage_error(capsys):
    code, out, err = run(["md", "--lambda", "1", "--alpha", "2", "--R", "0.5", "--theta", "1"], capsys)
    assert code == 1
    assert "path_loss_exponent must exceed 2" in err
    assert out == ""


def test_unknown_flag_is_usage_error(capsys):
    code, _, err = run(["md", "--frobnicate"], capsys)
    assert code == 1 and "unrecognized" in err


def test_missing_theta(capsys):
    code, _, err = run(["md", *NET], capsys)
    assert code == 1 and "theta" in err


def test_minimal_config(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"network": {"lambda": 1, "alpha": 4, "R": 0.5}}))
    code, out, _ = run(["md", "--config", str(path), "--theta", "1", "--x-grid", "0.2:0.8:3"], capsys)
    assert code == 0
    manifest, _, rows = parse_csv(out)
    assert manifest["network"] == {"lambda": 1.0, "alpha": 4.0, "R": 0.5}
    assert len(rows) == 3


def test_unknown_config_key_is_named(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"network": {"lambda": 1, "alpha_db": 6, "R": 0.5}}))
    code, _, err = run(["md", "--config", str(path), "--theta", "1"], capsys)
    assert code == 1 and "network.alpha_db" in err


@pytest.mark.parametrize(
    "cfg,key",
    [({"mc": {"seed": "x"}}, "mc.seed"), ({"grids": {"x": "1:2"}}, "grids.x"), ({"target": 0.9}, "target")],
)
def test_config_errors_name_key(tmp_path, capsys, cfg, key):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"network": {"lambda": 1, "alpha": 4, "R": 0.5}, **cfg}))
    code, _, err = run(["md", "--config", str(path), "--theta", "1"], capsys)
    assert code == 1 and key in err


def test_missing_config_file(tmp_path, capsys):
    code, _, err = run(["md", "--config", str(tmp_path / "nope.json")], capsys)
    assert code == 1 and "no such file" in err


def test_flag_overrides_config(tmp_path, capsys):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"network": {"lambda": 1, "alpha": 4, "R": 0.5}, "mc": {"seed": 42}}))
    code, out, _ = run(
        ["md", "--config", str(path), "--seed", "7", "--theta", "1", "--method", "mc",
         "--samples", "20", "--x-grid", "0.2:0.8:2"],
        capsys,
    )
    assert code == 0
    assert parse_csv(out)[0]["mc"]["seed"] == 7
    code, out, _ = run(
        ["md", "--config", str(path), "--theta", "1", "--method", "mc", "--samples", "20", "--x-grid", "0.2:0.8:2"],
        capsys,
    )
    assert parse_csv(out)[0]["mc"]["seed"] == 42


def test_theta_in_decibels(capsys):
    code, out, _ = run(["md", *NET, "--theta-db", "10", "--x-grid", "0.2:0.8:2"], capsys)
    assert code == 0 and parse_csv(out)[0]["theta"] == pytest.approx(10.0, rel=1e-15)
    code, _, _ = run(["md", *NET, "--theta", "1", "--theta-db", "0"], capsys)
    assert code == 1


def test_manifest_reruns_byte_identically(tmp_path, capsys):
    first = tmp_path / "a.csv"
    code, _, _ = run(
        ["tdist", *NET, "--eps", "0.1", "--method", "mc", "--samples", "50", "--seed", "3",
         "--t-grid", "0.01:1:4:log", "--out", str(first)],
        capsys,
    )
    assert code == 0
    manifest = json.loads(first.read_text().split("\n")[0][len("# manifest "):])
    cfg = tmp_path / "manifest.json"
    cfg.write_text(json.dumps(manifest))
    second = tmp_path / "b.csv"
    code, _, _ = run(["tdist", "--config", str(cfg), "--out", str(second)], capsys)
    assert code == 0
    assert first.read_bytes() == second.read_bytes()


def test_json_output(capsys):
    code, out, _ = run(["fig3", "--theta-grid", "0.01:100:3:log", "--samples", "30", "--format", "json"], capsys)
    assert code == 0
    doc = json.loads(out)
    assert set(doc) == {"manifest", "columns", "rows"}
    assert doc["columns"][:5] == ["theta", "S_rc", "Srel_rc", "S_det", "Srel_det"]
    assert "S_det_se" in doc["columns"] and len(doc["rows"]) == 3


def test_fig2_needs_explicit_target(capsys):
    code, _, err = run(["fig2", "--samples", "10"], capsys)
    assert code == 1 and "--nu" in err


def test_emit_table_is_byte_stable(tmp_path):
    rows = [[0.1, 1 / 3, 7], [2.0, 1e-300, 0]]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    cli.emit_table(rows, ["x", "y", "n"], "csv", str(a), {"seed": 1})
    cli.emit_table(rows, ["x", "y", "n"], "csv", str(b), {"seed": 1})
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_bytes().split(b"\n")
    assert lines[1] == b"x,y,n"
    assert lines[2] == b"0.10000000000000001,0.33333333333333331,7"
    assert b"\r" not in a.read_bytes()


def test_empty_table_is_header_only(tmp_path):
    path = tmp_path / "e.csv"
    cli.emit_table([], ["a", "b"], "csv", str(path), {})
    assert path.read_text().split("\n")[1:] == ["a,b", ""]


def test_write_failure_exit_code(tmp_path, capsys):
    code, _, err = run(["md", *NET, "--theta", "1", "--x-grid", "0.2:0.8:2", "--out", str(tmp_path / "no" / "x.csv")], capsys)
    assert code == 3 and "cannot write" in err


def test_numerical_failure_exit_code(monkeypatch, capsys):
    def boom(*args, **kwargs):
        raise QuadratureFailure("error estimate too large")

    monkeypatch.setattr(analytics, "md_gil_pelaez_curve", boom)
    code, _, err = run(["md", *NET, "--theta", "1"], capsys)
    assert code == 2 and "QuadratureFailure" in err


def test_failed_validation_exit_code(monkeypatch, capsys):
    from metasir import mc

    real = mc.verify_duality_grid

    def broken_one(rep):
        return type(rep)(rep.n, 1, rep.guard_excluded, rep.theta, rep.nu)

    monkeypatch.setattr(mc, "verify_duality_grid", lambda *a, **k: [broken_one(r) for r in real(*a, **k)])
    code, out, err = run(["validate", "--suite", "duality", *NET, "--theta", "1", "--nu", "0.9", "--samples", "20"], capsys)
    assert code == 2 and "FAIL" in err
    assert parse_csv(out)[2][0][3] == "1"


@pytest.mark.parametrize(
    "command",
    [
        ["tdist", *NET, "--nu", "0.9", "--method", "ultrarel", "--t-grid", "0.01:1:3:log"],
        ["tdist", *NET, "--nu", "0.9", "--method", "partial", "--t-grid", "0.01:1:3:log"],
        ["tdist", *NET, "--nu", "0.9", "--method", "mc", "--info", "k_nearest", "--k", "3", "--samples", "20"],
        ["md", *NET, "--theta", "1", "--method", "binomial", "--moments", "12"],
        ["interference", *NET, "--samples", "20"],
        ["throughput", *NET, "--eps", "0.01", "--theta-grid", "0.1:10:3:log"],
        ["realization", "--lambda", "0.025", "--alpha", "4", "--R", "2", "--theta", "1", "--nu", "0.9"],
        ["validate", "--suite", "md", *NET, "--theta", "1", "--samples", "3000"],
    ],
)
def test_commands_run(command, capsys):
    code, out, err = run(command, capsys)
    assert code == 0, err
    _, header, rows = parse_csv(out)
    assert rows and all(len(r) == len(header) for r in rows)


def test_grid_spec():
    g = GridSpec.parse("0.01:100:5:log")
    assert g.values()[2] == pytest.approx(1.0)
    assert GridSpec.parse(str(g)) == g
    for bad in ("1:2:1", "0:1:5:log", "1:2:3:cubic", "a:b:c"):
        with pytest.raises(ValueError):
            GridSpec.parse(bad)


def test_config_error_carries_key():
    err = ConfigError("mc.seed", "bad")
    assert err.key == "mc.seed" and str(err) == "mc.seed: bad"


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "metasir", "md", *NET, "--theta", "1", "--x-grid", "0.5:0.6:2"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert proc.stdout.split("\n")[1] == "x,md"
