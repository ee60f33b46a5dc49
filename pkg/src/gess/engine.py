"""
Two-group parallel GESS.

Chains are split into two groups. A multivariate t approximation fitted to
one group drives GESS updates of every chain in the other group, so each
group's product distribution stays invariant while the chains inside a group
update independently (and in parallel).

With approximation reuse ``r`` the schedule is ``Q2^r Q1^r``: group 0 is
updated ``r`` times under the fit of group 1, then group 1 is updated ``r``
times under a fit of the new group 0. Round ``i`` of the output holds the
``i``-th state of both groups.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from gess.core import TApprox
from gess.exceptions import ConfigError, FitError, GessError, PreconditionError
from gess.generalized import gess_update_batch
from gess.mvt_fit import FitReport, select_fit, spherical_fallback
from gess.targets import TargetDensity

log = logging.getLogger(__name__)


@dataclass
class EngineConfig:
    n_chains_per_group: int | None = None
    reuse_rounds: int = 100
    burn_in: int = 1000
    n_samples: int = 1000
    seed: int = 0
    worker_count: int = 1
    thin: int = 1
    block_size: int = 32
    fit_tol: float = 1e-4
    fit_max_iter: int = 200
    time_budget: float | None = None

    def __post_init__(self):
        if self.n_chains_per_group is None:
            self.n_chains_per_group = self.worker_count
        for name in ("n_chains_per_group", "reuse_rounds", "worker_count", "thin",
                     "block_size", "fit_max_iter"):
            if int(getattr(self, name)) < 1:
                raise ConfigError(f"{name} must be a positive integer")
        if self.burn_in < 0 or self.n_samples < 0:
            raise ConfigError("burn_in and n_samples must be non-negative")
        if self.time_budget is None and self.n_samples < 1:
            raise ConfigError("n_samples must be positive")


@dataclass
class InitSpec:
    """Spherical Gaussian ``center + scale * z`` for initial states."""

    center: float | list = 0.0
    scale: float = 1.0

    def draw(self, rng: np.random.Generator, dim: int) -> np.ndarray:
        return np.asarray(self.center, dtype=float) + self.scale * rng.standard_normal(dim)


def chain_streams(seed: int, group: int, n_chains: int) -> list[np.random.Generator]:
    """Independent counter-based streams keyed by (seed, group, chain)."""
    return [
        np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(group, k))))
        for k in range(n_chains)
    ]


@dataclass
class ChainGroupState:
    group_id: int
    positions: np.ndarray
    rngs: list
    log_pi: np.ndarray
    eval_counts: np.ndarray
    version: int = 0

    @property
    def n_chains(self) -> int:
        return self.positions.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]


def init_group(target: TargetDensity, group_id: int, n_chains: int, seed: int,
               init: InitSpec | Callable) -> ChainGroupState:
    rngs = chain_streams(seed, group_id, n_chains)
    draw = init.draw if isinstance(init, InitSpec) else init
    pos = np.array([draw(g, target.dim) for g in rngs], dtype=float).reshape(n_chains, target.dim)
    lp = np.asarray(target.log_density(pos), dtype=float)
    bad = np.flatnonzero(~np.isfinite(lp))
    if bad.size:
        raise PreconditionError(
            f"group {group_id}, chain {int(bad[0])}: initial log density is not finite"
        )
    return ChainGroupState(group_id, pos, rngs, lp, np.ones(n_chains, dtype=np.int64))


def fit_approx(source: ChainGroupState, previous: TApprox | None,
               config: EngineConfig) -> tuple[TApprox, FitReport | None]:
    """Fit from ``source``; on failure fall back to ``previous`` or a spherical fit."""
    t0 = time.perf_counter()
    try:
        report = select_fit(source.positions, tol=config.fit_tol, max_iter=config.fit_max_iter)
        report.seconds = time.perf_counter() - t0
        return report.result, report
    except (FitError, ValueError) as err:
        log.warning("fit from group %d failed (%s); using fallback", source.group_id, err)
        if previous is not None:
            return previous, None
        report = spherical_fallback(source.positions)
        return report.result, report


def _blocks(n: int, size: int) -> list[slice]:
    return [slice(i, min(i + size, n)) for i in range(0, n, size)]


def update_group(state: ChainGroupState, approx: TApprox, target: TargetDensity,
                 block_size: int, pool: ThreadPoolExecutor | None = None) -> ChainGroupState:
    """Apply one GESS update to every chain of ``state`` (in place)."""

    def work(sl):
        return gess_update_batch(
            state.positions[sl], approx, target.log_density, state.rngs[sl], state.log_pi[sl]
        )

    blocks = _blocks(state.n_chains, block_size)
    if pool is None or len(blocks) == 1:
        results = [work(sl) for sl in blocks]
    else:
        results = list(pool.map(work, blocks))
    new_pos = np.empty_like(state.positions)
    new_lp = np.empty_like(state.log_pi)
    for sl, (x_new, lp_new, n_prop, _) in zip(blocks, results):
        new_pos[sl] = x_new
        new_lp[sl] = lp_new
        state.eval_counts[sl] += n_prop
    state.positions = new_pos
    state.log_pi = new_lp
    state.version += 1
    return state


def half_step(updating: ChainGroupState, fitting_source: ChainGroupState,
              approx: TApprox | None, round_index: int, target: TargetDensity,
              config: EngineConfig, pool: ThreadPoolExecutor | None = None):
    """
    Update ``updating`` once under an approximation built from ``fitting_source``.

    A fresh fit is made when ``round_index`` is a multiple of the reuse
    count; otherwise ``approx`` is reused. ``fitting_source`` is never
    modified. Returns ``(updating, approx, fit_report_or_None)``.
    """
    if updating.dim != fitting_source.dim:
        raise ValueError("groups have different dimensions")
    report = None
    if round_index % config.reuse_rounds == 0:
        approx, report = fit_approx(fitting_source, approx, config)
    elif approx is None:
        raise ValueError("no approximation to reuse; fits happen at multiples of reuse_rounds")
    update_group(updating, approx, target, config.block_size, pool)
    return updating, approx, report


@dataclass
class RunResult:
    samples: np.ndarray          # (n_kept, 2, K, D)
    log_pi: np.ndarray           # (n_kept, 2, K)
    rounds: np.ndarray           # kept round indices
    eval_counts: np.ndarray      # (2, K) density evaluations, burn-in included
    wall_seconds: float
    fit_seconds: float
    n_rounds: int
    fits: list = field(default_factory=list)
    config: dict = field(default_factory=dict)

    @property
    def n_chains(self) -> int:
        return self.samples.shape[1] * self.samples.shape[2]

    @property
    def n_evals(self) -> int:
        return int(self.eval_counts.sum())

    def pooled_log_pi(self) -> np.ndarray:
        """Per-round sum of log pi over every chain of both groups."""
        return self.log_pi.reshape(self.log_pi.shape[0], -1).sum(axis=1)


def _fit_record(round_index, group, approx, report, source_version):
    rec = {"round": int(round_index), "group": int(group), "source_version": int(source_version)}
    rec.update(approx.summary())
    if report is not None:
        rec.update(method=report.method, n_iterations=report.n_iterations,
                   converged=bool(report.converged))
    else:
        rec.update(method="reused-after-failure", n_iterations=0, converged=False)
    return rec


def run(target: TargetDensity, config: EngineConfig, init: InitSpec | Callable | None = None,
        progress: Callable[[int], None] | None = None) -> RunResult:
    """
    Run two-group GESS for ``burn_in + n_samples`` rounds.

    When ``config.time_budget`` is set the run instead stops at the first
    cycle boundary after the budget is spent (``n_samples`` is ignored and
    every round after ``burn_in`` is kept subject to thinning).
    """
    init = InitSpec() if init is None else init
    k = config.n_chains_per_group
    r = config.reuse_rounds
    budget = config.time_budget
    total_rounds = None if budget is not None else config.burn_in + config.n_samples

    t0 = time.perf_counter()
    groups = [init_group(target, g, k, config.seed, init) for g in (0, 1)]
    approx: list[TApprox | None] = [None, None]
    kept_x: list[np.ndarray] = []
    kept_lp: list[np.ndarray] = []
    kept_rounds: list[int] = []
    fits = []
    fit_seconds = 0.0

    def keep(i):
        return i >= config.burn_in and (i - config.burn_in) % config.thin == 0

    pool = ThreadPoolExecutor(config.worker_count) if config.worker_count > 1 else None
    try:
        start = 0
        while True:
            if total_rounds is not None:
                if start >= total_rounds:
                    break
                stop = min(start + r, total_rounds)
            else:
                if time.perf_counter() - t0 >= budget:
                    break
                stop = start + r
            cycle_x = {0: [], 1: []}
            cycle_lp = {0: [], 1: []}
            for g in (0, 1):
                upd, src = groups[g], groups[1 - g]
                src_version = src.version
                for i in range(start, stop):
                    _, approx[g], rep = half_step(upd, src, approx[g], i - start, target,
                                                  config, pool)
                    if i == start:
                        fit_seconds += rep.seconds if rep is not None else 0.0
                        fits.append(_fit_record(i, g, approx[g], rep, src_version))
                    if keep(i):
                        cycle_x[g].append(upd.positions.copy())
                        cycle_lp[g].append(upd.log_pi.copy())
                if src.version != src_version:
                    raise GessError("fitting source changed during a half step")
            for j, i in enumerate(i for i in range(start, stop) if keep(i)):
                kept_x.append(np.stack([cycle_x[0][j], cycle_x[1][j]]))
                kept_lp.append(np.stack([cycle_lp[0][j], cycle_lp[1][j]]))
                kept_rounds.append(i)
            if progress is not None:
                progress(stop)
            start = stop
    finally:
        if pool is not None:
            pool.shutdown()

    d = target.dim
    samples = np.array(kept_x).reshape(len(kept_x), 2, k, d)
    log_pi = np.array(kept_lp).reshape(len(kept_lp), 2, k)
    return RunResult(
        samples=samples,
        log_pi=log_pi,
        rounds=np.array(kept_rounds, dtype=np.int64),
        eval_counts=np.stack([groups[0].eval_counts, groups[1].eval_counts]),
        wall_seconds=time.perf_counter() - t0,
        fit_seconds=fit_seconds,
        n_rounds=start,
        fits=fits,
        config=asdict(config),
    )
