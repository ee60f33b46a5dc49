"""Multi-chain drivers for the baseline samplers, producing :class:`RunResult`."""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from gess import baselines as bl
from gess.engine import EngineConfig, InitSpec, RunResult, chain_streams, run as run_gess
from gess.exceptions import ConfigError, PreconditionError
from gess.targets import TargetDensity

SAMPLERS = ("gess", "rdss", "cwss", "mh", "amh", "pt")


@dataclass
class BaselineParams:
    width: float = 1.0
    max_expansions: int = 30
    step: float = 1.0
    n_temps: int = 10
    t_max: float = 1e3
    swap_interval: int = 10
    amh_mix_weight: float = 0.05
    amh_epsilon: float = 1e-6


def _streams(seed, key, n):
    return [np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=key + (i,))))
            for i in range(n)]


def _init_positions(target, rngs, init):
    draw = init.draw if isinstance(init, InitSpec) else init
    pos = np.array([draw(g, target.dim) for g in rngs], dtype=float).reshape(len(rngs), target.dim)
    lp = np.asarray(target.log_density(pos), dtype=float)
    bad = np.flatnonzero(~np.isfinite(lp))
    if bad.size:
        raise PreconditionError(f"chain {int(bad[0])}: initial log density is not finite")
    return pos, lp


def run_baseline(target: TargetDensity, sampler: str, config: EngineConfig,
                 init: InitSpec | Callable | None = None,
                 params: BaselineParams | None = None) -> RunResult:
    """
    Run ``config.n_chains_per_group`` independent chains of a baseline sampler.

    For ``pt`` each chain is a whole temperature ladder and only its t = 1
    rung is recorded; evaluation counts cover every rung.
    """
    if sampler not in SAMPLERS or sampler == "gess":
        raise ConfigError(f"unknown baseline sampler {sampler!r}")
    init = InitSpec() if init is None else init
    params = BaselineParams() if params is None else params
    k, d = config.n_chains_per_group, target.dim
    budget = config.time_budget
    total = None if budget is not None else config.burn_in + config.n_samples
    lp_fn = target.log_density
    t0 = time.perf_counter()

    if sampler == "pt":
        ladder = bl.TemperatureLadder.geometric(params.n_temps, params.t_max, params.swap_interval)
        ladders = []
        for c in range(k):
            rngs = _streams(config.seed, (2, c), params.n_temps)
            pos, lp = _init_positions(target, rngs, init)
            swap = np.random.Generator(np.random.Philox(np.random.SeedSequence(config.seed, spawn_key=(3, c))))
            ladders.append(bl.PtState(pos, lp, rngs, swap, n_evals=params.n_temps))
        evals = None
    else:
        rngs = chain_streams(config.seed, 0, k)
        pos, lp = _init_positions(target, rngs, init)
        evals = np.ones(k, dtype=np.int64)
        tuner = bl.StepSizeTuner.create(k, params.step) if sampler == "mh" else None
        amh_set = bl.AmhSettings(params.amh_mix_weight, params.amh_epsilon)
        histories = [bl.RunningMoments(d) for _ in range(k)] if sampler == "amh" else None

    blocks = [slice(i, min(i + config.block_size, k)) for i in range(0, k, config.block_size)]
    pool = ThreadPoolExecutor(config.worker_count) if config.worker_count > 1 else None
    slice_kw = dict(width=params.width, max_expansions=params.max_expansions)

    def slice_block(sl):
        fn = bl.rdss_update_batch if sampler == "rdss" else bl.cwss_update_batch
        return fn(pos[sl], lp_fn, rngs[sl], lp[sl], **slice_kw)

    def mh_block(sl):
        return bl.mh_update_batch(pos[sl], lp_fn, rngs[sl], lp[sl], tuner.steps[sl])

    def pmap(fn, items):
        if pool is None or len(items) == 1:
            return [fn(it) for it in items]
        return list(pool.map(fn, items))

    kept_x, kept_lp, kept_rounds = [], [], []
    i = 0
    try:
        while True:
            if total is not None and i >= total:
                break
            if budget is not None and time.perf_counter() - t0 >= budget:
                break
            if sampler in ("rdss", "cwss"):
                new_pos, new_lp = np.empty_like(pos), np.empty_like(lp)
                for sl, (x, l, n_ev, _) in zip(blocks, pmap(slice_block, blocks)):
                    new_pos[sl], new_lp[sl] = x, l
                    evals[sl] += n_ev
                pos, lp = new_pos, new_lp
            elif sampler == "mh":
                if i == config.burn_in:
                    tuner.freeze()
                new_pos, new_lp = np.empty_like(pos), np.empty_like(lp)
                acc = np.empty(k, dtype=bool)
                for sl, (x, l, a) in zip(blocks, pmap(mh_block, blocks)):
                    new_pos[sl], new_lp[sl], acc[sl] = x, l, a
                pos, lp = new_pos, new_lp
                evals += 1
                tuner.update(acc)
            elif sampler == "amh":
                for c in range(k):
                    pos[c], lp[c], _ = bl.amh_update(pos[c], histories[c], lp_fn, rngs[c],
                                                     cur_lp=lp[c], settings=amh_set)
                evals += 1
            else:
                pmap(lambda st: bl.pt_step(st, ladder, lp_fn), ladders)

            if i >= config.burn_in and (i - config.burn_in) % config.thin == 0:
                if sampler == "pt":
                    kept_x.append(np.array([st.positions[0] for st in ladders]))
                    kept_lp.append(np.array([st.log_pi[0] for st in ladders]))
                else:
                    kept_x.append(pos.copy())
                    kept_lp.append(lp.copy())
                kept_rounds.append(i)
            i += 1
    finally:
        if pool is not None:
            pool.shutdown()

    if sampler == "pt":
        evals = np.array([st.n_evals for st in ladders], dtype=np.int64)
    cfg = asdict(config)
    cfg["sampler"] = sampler
    return RunResult(
        samples=np.array(kept_x).reshape(len(kept_x), 1, k, d),
        log_pi=np.array(kept_lp).reshape(len(kept_lp), 1, k),
        rounds=np.array(kept_rounds, dtype=np.int64),
        eval_counts=evals[None, :],
        wall_seconds=time.perf_counter() - t0,
        fit_seconds=0.0,
        n_rounds=i,
        config=cfg,
    )


def run_sampler(target: TargetDensity, sampler: str, config: EngineConfig,
                init: InitSpec | Callable | None = None,
                params: BaselineParams | None = None) -> RunResult:
    """Dispatch to the GESS engine or a baseline runner."""
    if sampler == "gess":
        return run_gess(target, config, init)
    return run_baseline(target, sampler, config, init, params)
