"""
Generalized elliptical slice sampling.

The target is written as ``pi(x) = R(x) T_nu(x; mu, Sigma)`` with the t
distribution expanded as an inverse-gamma scale mixture of Gaussians. One
update draws the scale ``s`` from its conjugate conditional and then runs an
elliptical slice step on ``N(mu, s Sigma)`` against the residual ``R``.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from gess.core import TApprox, log_mvt_pdf, sample_inverse_gamma
from gess.ess import MAX_PROPOSALS, ess_update, ess_update_batch
from gess.exceptions import PreconditionError


def ig_posterior_params(x, t: TApprox):
    """Return ``(alpha', beta')`` of the scale's inverse-gamma conditional.

    Works on a single vector or a stack of row vectors.
    """
    quad = t.sigma.quad_form(np.asarray(x, dtype=float) - t.mu)
    alpha = 0.5 * (t.dim + t.nu)
    beta = 0.5 * (t.nu + quad)
    return alpha, beta


def residual_log_l(log_pi: Callable, t: TApprox) -> Callable:
    """log R(x) = log pi(x) - log T(x), formed by subtraction."""

    def log_r(x):
        return log_pi(x) - log_mvt_pdf(x, t)

    return log_r


def gess_update(
    x,
    t: TApprox,
    log_pi: Callable,
    rng: np.random.Generator,
    *,
    cur_log_pi: float | None = None,
    max_proposals: int = MAX_PROPOSALS,
):
    """
    One GESS transition ``S(x -> x'; nu, mu, Sigma)``.

    Returns ``(x_new, trace, s)``; ``trace.log_l_new`` is the residual at
    ``x_new``.
    """
    x = np.asarray(x, dtype=float)
    if cur_log_pi is None:
        cur_log_pi = float(log_pi(x))
        n_extra = 1
    else:
        n_extra = 0
    if not np.isfinite(cur_log_pi):
        raise PreconditionError("log density of the current state is not finite")

    alpha, beta = ig_posterior_params(x, t)
    s = sample_inverse_gamma(alpha, float(beta), rng)
    log_r = residual_log_l(log_pi, t)
    cur_log_r = cur_log_pi - float(log_mvt_pdf(x, t))
    x_new, trace = ess_update(
        x,
        t.mu,
        math.sqrt(s) * t.sigma.chol,
        log_r,
        rng,
        cur_log_l=cur_log_r,
        max_proposals=max_proposals,
    )
    trace.n_loglik_evals += n_extra
    return x_new, trace, s


def gess_update_batch(
    xs: np.ndarray,
    t: TApprox,
    log_pi: Callable,
    rngs: Sequence[np.random.Generator],
    cur_log_pi: np.ndarray,
    *,
    max_proposals: int = MAX_PROPOSALS,
):
    """
    GESS transitions for a block of chains sharing one approximation.

    ``log_pi`` must accept an ``(n, D)`` array. Returns
    ``(x_new, log_pi_new, n_proposals, scales)``; ``log_pi_new`` is the
    target log-density at the new states as evaluated during the update.
    """
    xs = np.asarray(xs, dtype=float)
    alpha, beta = ig_posterior_params(xs, t)
    s = np.array([b / g.standard_gamma(alpha) for g, b in zip(rngs, beta)])
    cur_log_r = cur_log_pi - log_mvt_pdf(xs, t)

    def log_r(ys):
        lp = log_pi(ys)
        return lp - log_mvt_pdf(ys, t), lp

    x_new, trace = ess_update_batch(
        xs,
        t.mu,
        t.sigma.chol,
        log_r,
        rngs,
        cur_log_r,
        scales=np.sqrt(s),
        max_proposals=max_proposals,
    )
    return x_new, trace.side_new, trace.n_proposals, s
