"""
Command-line interface.

    gess run --config exp.yaml [--seed N] [--workers N] [--out DIR]
    gess scaling --config scaling.yaml [--out DIR]
    gess diagnose RUN_DIR
    gess list-targets

Exit status is 0 on success, 2 for configuration errors and 1 for runtime
errors. ``GESS_WORKERS`` overrides the worker count from the config file;
``--workers`` overrides both.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import os
import shutil
import sys
import tempfile
from pathlib import Path

from gess import io
from gess.config import ExperimentConfig, dump_config, load_config
from gess.diagnostics import mixing_report
from gess.exceptions import ConfigError, GessError
from gess.experiments import ScalingRow, scaling_trial
from gess.runners import run_sampler
from gess.targets import list_targets, make_target

log = logging.getLogger("gess")

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG = 0, 1, 2
WORKERS_ENV = "GESS_WORKERS"


def _resolve(args) -> ExperimentConfig:
    cfg = load_config(args.config)
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            cfg.worker_count = int(env)
        except ValueError:
            raise ConfigError(f"{WORKERS_ENV} must be an integer, got {env!r}") from None
    if args.workers is not None:
        cfg.worker_count = args.workers
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if args.out is not None:
        cfg.output = args.out
    return cfg.validate()


def _build_target(cfg: ExperimentConfig):
    t = cfg.target
    try:
        return make_target(t.name, t.dim, t.seed, t.dataset, t.label_column, t.prior_var)
    except (KeyError, ValueError) as err:
        raise ConfigError(f"cannot build target {t.name!r}: {err}") from err


def _commit(tmp: Path, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    for f in tmp.iterdir():
        shutil.move(str(f), out / f.name)


def cmd_run(args) -> int:
    cfg = _resolve(args)
    target = _build_target(cfg)
    result = run_sampler(target, cfg.sampler.name, cfg.engine_config(), cfg.init_spec(),
                         cfg.baseline_params())
    out = Path(cfg.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory(dir=out.parent) as tmp:
        tmp = Path(tmp)
        io.write_samples_csv(result, tmp / "samples.csv")
        io.write_loglik_csv(result, tmp / "loglik.csv")
        report = io.build_report(result, target.name, cfg.sampler.name)
        (tmp / "report.json").write_text(json.dumps(report, indent=2))
        dump_config(cfg, tmp / "config.resolved.yaml")
        _commit(tmp, out)
    mix = report["mixing"]
    print(f"{target.name} / {cfg.sampler.name}: ess={mix['ess_total']} "
          f"geweke_z={mix['geweke_z']} converged={mix['converged']} -> {out}")
    return EXIT_OK


def cmd_scaling(args) -> int:
    cfg = _resolve(args)
    sc = cfg.scaling
    if not sc.triples:
        raise ConfigError("scaling.triples is empty")
    out = Path(cfg.output)
    out.mkdir(parents=True, exist_ok=True)
    fields = [f.name for f in dataclasses.fields(ScalingRow)]
    path = out / "scaling.csv"
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fields)
        for dim, cores, chains in sc.triples:
            for trial in range(sc.trials):
                row = scaling_trial(dim, cores, chains, trial, sc.time_budget,
                                    seed=cfg.seed, thin=sc.thin, reuse_rounds=cfg.reuse_rounds)
                w.writerow([getattr(row, f) for f in fields])
                fh.flush()
                log.info("D=%d C=%d K=%d trial %d: error %.4g", dim, cores, chains, trial,
                         row.squared_error)
    dump_config(cfg, out / "config.resolved.yaml")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_diagnose(args) -> int:
    run_dir = Path(args.run_dir)
    if not (run_dir / "loglik.csv").is_file() or not (run_dir / "report.json").is_file():
        raise ConfigError(f"{run_dir} is not a run directory (need loglik.csv and report.json)")
    stored, report = io.load_stored_run(run_dir)
    mix = mixing_report(stored).to_dict()
    print(json.dumps(mix, indent=2))
    if mix != report["mixing"]:
        log.error("recomputed mixing report differs from report.json")
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_list_targets(args) -> int:
    for name in list_targets():
        print(name)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gess", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one sampler on one target")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("scaling", help="Wishart-Gaussian scaling experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_scaling)

    p = sub.add_parser("diagnose", help="recompute the mixing report of a run directory")
    p.add_argument("run_dir")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("list-targets", help="list available targets")
    p.set_defaults(func=cmd_list_targets)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (GessError, OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
