"""
Elliptical slice sampling.

:func:`ess_update` moves a single state; :func:`ess_update_batch` advances a
block of independent chains in lockstep, each chain drawing from its own
random stream in the same order the single-chain version does.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from gess.exceptions import NonTerminationError, PreconditionError

TWO_PI = 2.0 * math.pi
MAX_PROPOSALS = 10**6


@dataclass
class EssTrace:
    """Bookkeeping for one elliptical slice update."""

    accepted_theta: float
    n_proposals: int
    n_loglik_evals: int
    aux_point: np.ndarray
    threshold: float
    log_l_new: float
    brackets: list = field(default_factory=list)


def open_uniform(rng: np.random.Generator) -> float:
    """Uniform draw on the open interval (0, 1)."""
    u = rng.random()
    while u == 0.0:
        u = rng.random()
    return u


def ellipse_point(x, aux, mu, theta):
    """Point at angle ``theta`` on the ellipse through ``x`` and ``aux``.

    Written as ``x cos + aux sin + mu (1 - cos - sin)`` so that ``theta = 0``
    returns ``x`` exactly.
    """
    c, s = math.cos(theta), math.sin(theta)
    return x * c + aux * s + mu * (1.0 - c - s)


def ess_update(
    x,
    mu,
    sigma_chol,
    log_l: Callable[[np.ndarray], float],
    rng: np.random.Generator,
    *,
    cur_log_l: float | None = None,
    max_proposals: int = MAX_PROPOSALS,
):
    """
    One elliptical slice sampling step for ``N(x; mu, Sigma) L(x)``.

    Parameters
    ----------
    x : array, shape (D,)
        Current state.
    mu, sigma_chol : array
        Mean and lower Cholesky factor of the Gaussian.
    log_l : callable
        Log-likelihood.
    rng : numpy.random.Generator
    cur_log_l : float, optional
        ``log_l(x)`` if the caller already knows it. When given, the
        threshold costs no evaluation and ``n_loglik_evals == n_proposals``.
    max_proposals : int
        Safety cap on the shrinking loop.

    Returns
    -------
    x_new : array
    trace : EssTrace
    """
    x = np.asarray(x, dtype=float)
    mu = np.asarray(mu, dtype=float)
    n_evals = 0
    if cur_log_l is None:
        cur_log_l = float(log_l(x))
        n_evals = 1
    if not np.isfinite(cur_log_l):
        raise PreconditionError("log-likelihood of the current state is not finite")

    aux = mu + np.asarray(sigma_chol) @ rng.standard_normal(x.shape[0])
    log_y = cur_log_l + math.log(open_uniform(rng))
    theta = rng.uniform(0.0, TWO_PI)
    lo, hi = theta - TWO_PI, theta
    brackets = [(lo, hi)]

    n_prop = 0
    while True:
        n_prop += 1
        if n_prop > max_proposals:
            raise NonTerminationError(f"no acceptance after {max_proposals} proposals")
        x_new = ellipse_point(x, aux, mu, theta)
        ll = float(log_l(x_new))
        n_evals += 1
        if ll > log_y:
            break
        if theta < 0.0:
            lo = theta
        else:
            hi = theta
        brackets.append((lo, hi))
        theta = rng.uniform(lo, hi)

    trace = EssTrace(theta, n_prop, n_evals, aux, log_y, ll, brackets)
    return x_new, trace


@dataclass
class BatchTrace:
    """Per-chain results of :func:`ess_update_batch`."""

    accepted_theta: np.ndarray
    n_proposals: np.ndarray
    aux_points: np.ndarray
    thresholds: np.ndarray
    log_l_new: np.ndarray
    side_new: np.ndarray | None = None


def ess_update_batch(
    xs: np.ndarray,
    mu: np.ndarray,
    chol: np.ndarray,
    log_l_batch: Callable,
    rngs: Sequence[np.random.Generator],
    cur_log_l: np.ndarray,
    *,
    scales: np.ndarray | None = None,
    max_proposals: int = MAX_PROPOSALS,
):
    """
    Lockstep elliptical slice updates for ``K`` independent chains.

    Chain ``k`` uses the Gaussian ``N(mu, (scales[k] L)(scales[k] L)^T)`` and
    stream ``rngs[k]`` only. ``log_l_batch`` maps an ``(n, D)`` array to
    ``n`` log-likelihoods, or to a pair ``(log_l, side)`` where ``side`` is
    an extra per-row array (e.g. the target log-density) that is kept for
    the accepted rows.
    """
    xs = np.asarray(xs, dtype=float)
    k, d = xs.shape
    cur_log_l = np.asarray(cur_log_l, dtype=float)
    if not np.all(np.isfinite(cur_log_l)):
        bad = int(np.flatnonzero(~np.isfinite(cur_log_l))[0])
        raise PreconditionError(f"chain {bad}: log-likelihood is not finite")
    if scales is None:
        scales = np.ones(k)

    z = np.empty((k, d))
    log_y = np.empty(k)
    theta = np.empty(k)
    for i, g in enumerate(rngs):
        z[i] = g.standard_normal(d)
        log_y[i] = cur_log_l[i] + math.log(open_uniform(g))
        theta[i] = g.uniform(0.0, TWO_PI)
    aux = mu + scales[:, None] * (z @ chol.T)
    lo = theta - TWO_PI
    hi = theta.copy()

    x_new = np.empty_like(xs)
    ll_new = np.empty(k)
    side_new = None
    n_prop = np.zeros(k, dtype=np.int64)
    active = np.arange(k)
    while active.size:
        n_prop[active] += 1
        if n_prop[active[0]] > max_proposals:
            raise NonTerminationError(f"no acceptance after {max_proposals} proposals")
        th = theta[active]
        c, s = np.cos(th)[:, None], np.sin(th)[:, None]
        props = xs[active] * c + aux[active] * s + mu * (1.0 - c - s)
        out = log_l_batch(props)
        if isinstance(out, tuple):
            ll, side = out
            if side_new is None:
                side_new = np.empty(k)
        else:
            ll, side = out, None
        ll = np.asarray(ll, dtype=float)
        ok = ll > log_y[active]
        done = active[ok]
        x_new[done] = props[ok]
        ll_new[done] = ll[ok]
        if side is not None:
            side_new[done] = np.asarray(side)[ok]
        rejected = active[~ok]
        for i in rejected:
            if theta[i] < 0.0:
                lo[i] = theta[i]
            else:
                hi[i] = theta[i]
            theta[i] = rngs[i].uniform(lo[i], hi[i])
        active = rejected

    return x_new, BatchTrace(theta, n_prop, aux, log_y, ll_new, side_new)
