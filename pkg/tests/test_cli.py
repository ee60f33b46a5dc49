import csv
import json

import pytest
import yaml

from gess import cli


def write_config(path, **overrides):
    data = {
        "target": {"name": "funnel", "dim": 10},
        "sampler": {"name": "gess"},
        "chains": 20,
        "burn_in": 100,
        "samples": 400,
        "reuse_rounds": 50,
        "seed": 2,
        "output": str(path.parent / "out"),
    }
    data.update(overrides)
    path.write_text(yaml.safe_dump(data))
    return path


def test_run_writes_outputs(tmp_path):
    cfg = write_config(tmp_path / "c.yaml")
    out = tmp_path / "run"
    assert cli.main(["run", "--config", str(cfg), "--out", str(out)]) == 0
    for name in ("samples.csv", "loglik.csv", "report.json", "config.resolved.yaml"):
        assert (out / name).is_file()
    with open(out / "samples.csv") as fh:
        rows = list(csv.reader(fh))
    assert len(rows) - 1 == 20 * 400
    report = json.loads((out / "report.json").read_text())
    mix = report["mixing"]
    if mix["ess_per_second"] is not None:
        assert mix["ess_per_second"] == pytest.approx(mix["ess_total"] / mix["wall_seconds"])
    resolved = yaml.safe_load((out / "config.resolved.yaml").read_text())
    assert resolved["output"] == str(out)

    # diagnose reproduces the stored mixing report exactly
    assert cli.main(["diagnose", str(out)]) == 0


def test_same_seed_byte_identical(tmp_path):
    cfg = write_config(tmp_path / "c.yaml", samples=50, burn_in=10)
    a, b = tmp_path / "a", tmp_path / "b"
    assert cli.main(["run", "--config", str(cfg), "--out", str(a)]) == 0
    assert cli.main(["run", "--config", str(cfg), "--out", str(b), "--workers", "3"]) == 0
    assert (a / "samples.csv").read_bytes() == (b / "samples.csv").read_bytes()
    assert cli.main(["run", "--config", str(cfg), "--out", str(b), "--seed", "99"]) == 0
    assert (a / "samples.csv").read_bytes() != (b / "samples.csv").read_bytes()


def test_worker_override_precedence(tmp_path, monkeypatch):
    cfg = write_config(tmp_path / "c.yaml", worker_count=2)
    args = cli.build_parser().parse_args(["run", "--config", str(cfg)])
    assert cli._resolve(args).worker_count == 2
    monkeypatch.setenv("GESS_WORKERS", "5")
    assert cli._resolve(args).worker_count == 5
    args = cli.build_parser().parse_args(["run", "--config", str(cfg), "--workers", "3"])
    assert cli._resolve(args).worker_count == 3
    monkeypatch.setenv("GESS_WORKERS", "many")
    assert cli.main(["run", "--config", str(cfg)]) == 2


def test_config_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("chains: 3\n")
    assert cli.main(["run", "--config", str(bad)]) == 2
    assert "even" in capsys.readouterr().err
    assert cli.main(["run", "--config", str(tmp_path / "none.yaml")]) == 2


def test_runtime_error_exit_code(tmp_path):
    # an initial state far in the funnel's neck has an infinite log density
    cfg = write_config(tmp_path / "c.yaml", init={"center": -2000.0, "scale": 0.0})
    out = tmp_path / "o"
    assert cli.main(["run", "--config", str(cfg), "--out", str(out)]) == 1
    assert not out.exists()


def test_diagnose_missing_dir(tmp_path):
    missing = tmp_path / "nothing"
    assert cli.main(["diagnose", str(missing)]) != 0
    assert not missing.exists()


def test_list_targets(capsys):
    assert cli.main(["list-targets"]) == 0
    out = capsys.readouterr().out.split()
    for name in ("funnel(10)", "mixture(8)", "wishart(D)", "logistic(dataset)"):
        assert name in out


def test_scaling_table(tmp_path):
    cfg = write_config(
        tmp_path / "s.yaml",
        scaling={"triples": [[4, 1, 6], [4, 2, 8]], "time_budget": 0.05, "trials": 2},
        reuse_rounds=10,
    )
    out = tmp_path / "sc"
    assert cli.main(["scaling", "--config", str(cfg), "--out", str(out)]) == 0
    with open(out / "scaling.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 4
    assert [(r["dim"], r["cores"], r["chains"], r["trial"]) for r in rows] == [
        ("4", "1", "6", "0"), ("4", "1", "6", "1"), ("4", "2", "8", "0"), ("4", "2", "8", "1"),
    ]
    assert all(float(r["squared_error"]) >= 0 for r in rows)
