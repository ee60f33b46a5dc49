"""
Comparison samplers: random-direction and coordinate-wise slice sampling,
tuned random-walk Metropolis-Hastings, adaptive Metropolis and parallel
tempering.

The batched functions advance several independent chains at once; chain
``k`` only ever draws from ``rngs[k]``. All log-density caches hold the raw
(untempered) ``log pi``; a per-chain inverse temperature multiplies it where
a tempered density is wanted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from gess.ess import MAX_PROPOSALS, open_uniform
from gess.exceptions import NonTerminationError, PreconditionError

TARGET_ACCEPT = 0.234


def _check_start(cur_lp):
    cur_lp = np.asarray(cur_lp, dtype=float)
    if not np.all(np.isfinite(cur_lp)):
        raise PreconditionError("log density of the current state is not finite")
    return cur_lp


def slice_update_batch(
    xs: np.ndarray,
    directions: np.ndarray,
    log_pi: Callable,
    rngs: Sequence[np.random.Generator],
    cur_lp: np.ndarray,
    *,
    width: float = 1.0,
    max_expansions: int = 30,
    inv_temps: np.ndarray | None = None,
    max_shrinks: int = MAX_PROPOSALS,
):
    """
    Stepping-out and shrinkage slice sampling along ``x + t * direction``.

    Returns ``(x_new, lp_new, n_evals, thresholds)``; ``thresholds`` are the
    slice heights on the tempered log scale.
    """
    xs = np.asarray(xs, dtype=float)
    cur_lp = _check_start(cur_lp)
    k = xs.shape[0]
    beta = np.ones(k) if inv_temps is None else np.asarray(inv_temps, dtype=float)

    log_y = np.empty(k)
    left = np.empty(k)
    j_left = np.empty(k, dtype=np.int64)
    for i, g in enumerate(rngs):
        log_y[i] = beta[i] * cur_lp[i] + math.log(open_uniform(g))
        left[i] = -width * g.random()
        j_left[i] = int(math.floor(max_expansions * g.random()))
    right = left + width
    j_right = max_expansions - 1 - j_left
    n_evals = np.zeros(k, dtype=np.int64)

    def tempered(idx, t):
        lp = np.asarray(log_pi(xs[idx] + t[:, None] * directions[idx]), dtype=float)
        n_evals[idx] += 1
        return beta[idx] * lp, lp

    for ends, budget, sign in ((left, j_left, -1.0), (right, j_right, 1.0)):
        active = np.flatnonzero(budget > 0)
        while active.size:
            val, _ = tempered(active, ends[active])
            grow = active[val > log_y[active]]
            ends[grow] += sign * width
            budget[grow] -= 1
            active = grow[budget[grow] > 0]

    x_new = np.empty_like(xs)
    lp_new = np.empty(k)
    t = np.empty(k)
    active = np.arange(k)
    n_shrink = 0
    while active.size:
        n_shrink += 1
        if n_shrink > max_shrinks:
            raise NonTerminationError(f"slice shrinkage exceeded {max_shrinks} proposals")
        for i in active:
            t[i] = rngs[i].uniform(left[i], right[i])
        val, lp = tempered(active, t[active])
        ok = val > log_y[active]
        done = active[ok]
        x_new[done] = xs[done] + t[done, None] * directions[done]
        lp_new[done] = lp[ok]
        rej = active[~ok]
        for i in rej:
            if t[i] < 0.0:
                left[i] = t[i]
            else:
                right[i] = t[i]
        active = rej
    return x_new, lp_new, n_evals, log_y


def random_directions(rngs, dim: int) -> np.ndarray:
    """One direction per chain, uniform on the unit sphere."""
    z = np.array([g.standard_normal(dim) for g in rngs]).reshape(len(rngs), dim)
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def axis_directions(rngs, dim: int) -> np.ndarray:
    """One standard basis vector per chain, axis chosen uniformly."""
    out = np.zeros((len(rngs), dim))
    for i, g in enumerate(rngs):
        out[i, g.integers(dim)] = 1.0
    return out


def rdss_update_batch(xs, log_pi, rngs, cur_lp, **kw):
    dirs = random_directions(rngs, xs.shape[1])
    return slice_update_batch(xs, dirs, log_pi, rngs, cur_lp, **kw)


def cwss_update_batch(xs, log_pi, rngs, cur_lp, **kw):
    dirs = axis_directions(rngs, xs.shape[1])
    return slice_update_batch(xs, dirs, log_pi, rngs, cur_lp, **kw)


def _single(batch_fn, x, log_pi, rng, **kw):
    x = np.asarray(x, dtype=float)[None, :]
    cur = np.atleast_1d(np.asarray(log_pi(x), dtype=float))
    out = batch_fn(x, log_pi, [rng], cur, **kw)
    return out[0][0]


def slice_update(x, direction, log_pi, rng, width=1.0, max_expansions=30):
    """Single-chain slice update along ``direction`` (unit vector)."""
    x = np.asarray(x, dtype=float)
    direction = np.asarray(direction, dtype=float)
    cur = np.atleast_1d(np.asarray(log_pi(x[None, :]), dtype=float))
    out = slice_update_batch(x[None, :], direction[None, :], log_pi, [rng], cur,
                             width=width, max_expansions=max_expansions)
    return out[0][0]


def rdss_update(x, log_pi, rng, **kw):
    return _single(rdss_update_batch, x, log_pi, rng, **kw)


def cwss_update(x, log_pi, rng, **kw):
    return _single(cwss_update_batch, x, log_pi, rng, **kw)


# Metropolis-Hastings -------------------------------------------------------

def mh_update_batch(xs, log_pi, rngs, cur_lp, steps, inv_temps=None):
    """Spherical random-walk MH. Returns ``(x_new, lp_new, accepted)``."""
    xs = np.asarray(xs, dtype=float)
    cur_lp = _check_start(cur_lp)
    k, d = xs.shape
    beta = np.ones(k) if inv_temps is None else np.asarray(inv_temps, dtype=float)
    steps = np.broadcast_to(np.asarray(steps, dtype=float), (k,))
    z = np.array([g.standard_normal(d) for g in rngs]).reshape(k, d)
    props = xs + steps[:, None] * z
    lp = np.asarray(log_pi(props), dtype=float)
    log_u = np.array([math.log(open_uniform(g)) for g in rngs])
    with np.errstate(invalid="ignore"):
        accepted = log_u < beta * (lp - cur_lp)
    x_new = np.where(accepted[:, None], props, xs)
    lp_new = np.where(accepted, lp, cur_lp)
    return x_new, lp_new, accepted


def mh_update(x, log_pi, rng, step):
    """Single-chain MH step. Returns ``(x_new, accepted)``."""
    x = np.asarray(x, dtype=float)[None, :]
    cur = np.atleast_1d(np.asarray(log_pi(x), dtype=float))
    x_new, _, acc = mh_update_batch(x, log_pi, [rng], cur, step)
    return x_new[0], bool(acc[0])


@dataclass
class StepSizeTuner:
    """Robbins-Monro adaptation of per-chain log step sizes toward a target acceptance."""

    log_step: np.ndarray
    target_accept: float = TARGET_ACCEPT
    n_updates: int = 0
    frozen: bool = False

    @classmethod
    def create(cls, n_chains: int, step: float = 1.0, target_accept=TARGET_ACCEPT):
        return cls(np.full(n_chains, math.log(step)), target_accept)

    @property
    def steps(self) -> np.ndarray:
        return np.exp(self.log_step)

    def update(self, accepted):
        if self.frozen:
            return
        self.n_updates += 1
        rate = 1.0 / math.sqrt(self.n_updates)
        self.log_step = self.log_step + rate * (
            np.asarray(accepted, dtype=float) - self.target_accept
        )

    def freeze(self):
        self.frozen = True


# Adaptive Metropolis --------------------------------------------------------

@dataclass
class RunningMoments:
    """Welford running mean and covariance of one chain's history."""

    dim: int
    n: int = 0
    mean: np.ndarray = None
    m2: np.ndarray = None

    def __post_init__(self):
        if self.mean is None:
            self.mean = np.zeros(self.dim)
        if self.m2 is None:
            self.m2 = np.zeros((self.dim, self.dim))

    def push(self, x):
        x = np.asarray(x, dtype=float)
        self.n += 1
        delta = x - self.mean
        self.mean = self.mean + delta / self.n
        self.m2 = self.m2 + np.outer(delta, x - self.mean)

    @property
    def cov(self) -> np.ndarray:
        return self.m2 / (self.n - 1)


@dataclass
class AmhSettings:
    mix_weight: float = 0.05
    epsilon: float = 1e-6
    adaptive_scale: float = 2.38
    fixed_scale: float = 0.1


def amh_proposal_cov(history: RunningMoments, settings: AmhSettings = AmhSettings()):
    """Covariance of the adaptive component, or ``None`` while history is too short."""
    d = history.dim
    if history.n < d + 1:
        return None
    return settings.adaptive_scale**2 / d * history.cov + settings.epsilon * np.eye(d)


def amh_update(x, history: RunningMoments, log_pi, rng, *, cur_lp=None,
               settings: AmhSettings = AmhSettings(), adapt: bool = True,
               proposal_chol=None):
    """
    Adaptive Metropolis step for one chain.

    Proposes from the mixture ``(1 - b) N(x, 2.38^2/D Sigma_hist + eps I) +
    b N(x, 0.1^2/D I)``. Pass ``proposal_chol`` to use a frozen adaptive
    component. Returns ``(x_new, lp_new, accepted)``.
    """
    x = np.asarray(x, dtype=float)
    d = x.shape[0]
    if cur_lp is None:
        cur_lp = float(log_pi(x))
    if not np.isfinite(cur_lp):
        raise PreconditionError("log density of the current state is not finite")
    chol = proposal_chol
    if chol is None:
        cov = amh_proposal_cov(history, settings)
        chol = None if cov is None else np.linalg.cholesky(cov)
    pick_fixed = rng.random() < settings.mix_weight
    z = rng.standard_normal(d)
    if chol is None or pick_fixed:
        prop = x + settings.fixed_scale / math.sqrt(d) * z
    else:
        prop = x + chol @ z
    lp = float(log_pi(prop))
    accepted = math.log(open_uniform(rng)) < lp - cur_lp
    if accepted:
        x, cur_lp = prop, lp
    if adapt:
        history.push(x)
    return x, cur_lp, accepted


# Parallel tempering ---------------------------------------------------------

@dataclass
class TemperatureLadder:
    temperatures: np.ndarray
    swap_interval: int = 10

    @classmethod
    def geometric(cls, n_temps: int = 10, t_max: float = 1e3, swap_interval: int = 10):
        if n_temps < 1:
            raise ValueError("need at least one temperature")
        if n_temps == 1:
            temps = np.ones(1)
        else:
            temps = t_max ** (np.arange(n_temps) / (n_temps - 1))
            temps[0] = 1.0
        return cls(temps, swap_interval)

    @property
    def inv_temps(self) -> np.ndarray:
        return 1.0 / self.temperatures


def swap_log_accept(lp_k: float, lp_j: float, t_k: float, t_j: float) -> float:
    """Log acceptance ratio for exchanging the states at temperatures t_k and t_j."""
    return min(0.0, (1.0 / t_k - 1.0 / t_j) * (lp_j - lp_k))


@dataclass
class PtState:
    positions: np.ndarray
    log_pi: np.ndarray
    rngs: list
    swap_rng: np.random.Generator
    n_rounds: int = 0
    n_swaps_proposed: int = 0
    n_swaps_accepted: int = 0
    n_evals: int = 0


def pt_step(state: PtState, ladder: TemperatureLadder, log_pi: Callable,
            inner_update: Callable = cwss_update_batch) -> PtState:
    """
    One parallel tempering round on a single ladder.

    Every rung gets one ``inner_update`` against ``pi^(1/t)``; on every
    ``swap_interval``-th round adjacent rungs propose exchanges. Samples of
    the target come from rung 0 only.
    """
    beta = ladder.inv_temps
    x_new, lp_new, n_ev, *_ = inner_update(
        state.positions, log_pi, state.rngs, state.log_pi, inv_temps=beta
    )
    state.positions, state.log_pi = x_new, lp_new
    state.n_evals += int(np.sum(n_ev))
    state.n_rounds += 1
    if state.n_rounds % ladder.swap_interval == 0:
        temps = ladder.temperatures
        for k in range(len(temps) - 1):
            j = k + 1
            log_a = swap_log_accept(state.log_pi[k], state.log_pi[j], temps[k], temps[j])
            state.n_swaps_proposed += 1
            if math.log(open_uniform(state.swap_rng)) < log_a:
                state.positions[[k, j]] = state.positions[[j, k]]
                state.log_pi[[k, j]] = state.log_pi[[j, k]]
                state.n_swaps_accepted += 1
    return state
