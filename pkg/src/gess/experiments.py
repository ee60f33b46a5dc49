"""Scaling experiment: error of marginal standard deviations on Wishart Gaussians."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from gess.engine import EngineConfig, InitSpec, run
from gess.targets import wishart_gaussian

BROAD_INIT_SCALE = 10.0


def sigma_squared_error(samples: np.ndarray, sigma_true: np.ndarray) -> float:
    """Sum over coordinates of ``(sigma_hat_d - sigma_d)^2``.

    ``samples`` is any array whose last axis is the coordinate; all other
    axes are pooled.
    """
    flat = np.asarray(samples, dtype=float).reshape(-1, np.shape(sigma_true)[0])
    sigma_hat = flat.std(axis=0, ddof=1)
    return float(np.sum((sigma_hat - sigma_true) ** 2))


@dataclass
class ScalingRow:
    dim: int
    cores: int
    chains: int
    trial: int
    rounds: int
    kept: int
    squared_error: float
    wall_seconds: float


def scaling_trial(dim: int, cores: int, chains: int, trial: int, time_budget: float,
                  seed: int = 0, thin: int = 1, reuse_rounds: int = 100) -> ScalingRow:
    """
    Run GESS on a Wishart Gaussian for ``time_budget`` seconds.

    ``chains`` is the number of chains per group and ``cores`` the worker
    count. The first half of the kept rounds is discarded before estimating
    the marginal standard deviations.
    """
    target = wishart_gaussian(dim, seed=seed + trial)
    config = EngineConfig(
        n_chains_per_group=chains,
        reuse_rounds=reuse_rounds,
        burn_in=0,
        n_samples=0,
        seed=seed + trial,
        worker_count=cores,
        thin=thin,
        time_budget=time_budget,
    )
    res = run(target, config, InitSpec(0.0, BROAD_INIT_SCALE))
    half = res.samples.shape[0] // 2
    err = sigma_squared_error(res.samples[half:], target.ground_truth["sigma"])
    return ScalingRow(dim, cores, chains, trial, res.n_rounds, res.samples.shape[0] - half,
                      err, res.wall_seconds)
