"""Reading and writing run outputs (CSV traces and the JSON report)."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from gess.diagnostics import mixing_report
from gess.engine import RunResult

FLOAT_FMT = "%.17g"


def _rows(run: RunResult):
    n_kept, n_groups, k = run.log_pi.shape
    for r in range(n_kept):
        for g in range(n_groups):
            for c in range(k):
                yield int(run.rounds[r]), g, c, r


def write_samples_csv(run: RunResult, path) -> None:
    d = run.samples.shape[-1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["round", "group", "chain"] + [f"x{i}" for i in range(d)])
        for rnd, g, c, r in _rows(run):
            w.writerow([rnd, g, c] + [FLOAT_FMT % v for v in run.samples[r, g, c]])


def write_loglik_csv(run: RunResult, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["round", "group", "chain", "log_pi"])
        for rnd, g, c, r in _rows(run):
            w.writerow([rnd, g, c, FLOAT_FMT % run.log_pi[r, g, c]])


def _read_table(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    idx = np.array([[int(v) for v in row[:3]] for row in body], dtype=np.int64).reshape(-1, 3)
    vals = np.array([[float(v) for v in row[3:]] for row in body]).reshape(len(body), -1)
    return header, idx, vals


def _reshape(idx, vals):
    rounds = np.unique(idx[:, 0])
    n_groups = int(idx[:, 1].max()) + 1
    k = int(idx[:, 2].max()) + 1
    out = np.empty((rounds.size, n_groups, k, vals.shape[1]))
    pos = np.searchsorted(rounds, idx[:, 0])
    out[pos, idx[:, 1], idx[:, 2]] = vals
    return rounds, out


def read_samples_csv(path):
    """Return ``(rounds, samples)`` with samples shaped ``(n_kept, groups, K, D)``."""
    _, idx, vals = _read_table(path)
    return _reshape(idx, vals)


def read_loglik_csv(path):
    """Return ``(rounds, log_pi)`` with log_pi shaped ``(n_kept, groups, K)``."""
    _, idx, vals = _read_table(path)
    rounds, out = _reshape(idx, vals)
    return rounds, out[..., 0]


def report_schema() -> dict:
    text = resources.files("gess").joinpath("report.schema.json").read_text()
    return json.loads(text)


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def build_report(run: RunResult, target_name: str, sampler: str) -> dict:
    mix = mixing_report(run)
    report = {
        "target": target_name,
        "sampler": sampler,
        "dim": int(run.samples.shape[-1]),
        "n_chains": int(run.n_chains),
        "n_rounds": int(run.n_rounds),
        "n_kept": int(run.samples.shape[0]),
        "mixing": mix.to_dict(),
        "timing": {"wall_seconds": run.wall_seconds, "fit_seconds": run.fit_seconds},
        "evaluations": {
            "total": run.n_evals,
            "per_chain": run.eval_counts.tolist(),
        },
        "fits": run.fits,
    }
    report = _clean(report)
    jsonschema.validate(report, report_schema())
    return report


@dataclass
class StoredRun:
    """The parts of a finished run needed to recompute its mixing report."""

    log_pi: np.ndarray
    n_evals: int
    wall_seconds: float

    @property
    def n_chains(self) -> int:
        return self.log_pi.shape[1] * self.log_pi.shape[2]

    def pooled_log_pi(self) -> np.ndarray:
        return self.log_pi.reshape(self.log_pi.shape[0], -1).sum(axis=1)


def load_stored_run(run_dir) -> tuple[StoredRun, dict]:
    run_dir = Path(run_dir)
    report = json.loads((run_dir / "report.json").read_text())
    _, log_pi = read_loglik_csv(run_dir / "loglik.csv")
    stored = StoredRun(
        log_pi=log_pi,
        n_evals=int(report["evaluations"]["total"]),
        wall_seconds=float(report["mixing"]["wall_seconds"]),
    )
    return stored, report
