"""
Maximum-likelihood multivariate t fitting.

The fitter is the ECME scheme of Liu & Rubin (1995): an EM step for the
location and scale matrix given the degrees of freedom, then a direct
one-dimensional maximization of the observed likelihood over the degrees of
freedom. Small populations (fewer than ``2 D`` points) are handled by fitting
in the span of the leading principal components and padding the diagonal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.special import digamma

from gess.core import NU_MAX, NU_MIN, SpdMatrix, TApprox, log_mvt_pdf
from gess.exceptions import FitError, NotPositiveDefiniteError

NU_INIT = 10.0
INIT_JITTER = 1e-8


@dataclass
class FitReport:
    result: TApprox
    n_iterations: int
    final_nu_delta: float
    loglik_trace: list = field(default_factory=list)
    regularized: bool = False
    projection_dim: int = 0
    converged: bool = False
    nu_clamped: bool = False
    method: str = "ml"
    seconds: float = 0.0


def _as_points(points) -> np.ndarray:
    x = np.asarray(points, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise ValueError("points must be a sequence of equal-length vectors")
    return x


def _factor(matrix) -> SpdMatrix:
    try:
        return SpdMatrix.from_matrix(matrix)
    except NotPositiveDefiniteError as err:
        raise FitError("degenerate population: scale matrix is singular") from err


def nu_equation(nu: float, delta: np.ndarray, dim: int) -> float:
    """Left side minus right side of the degrees-of-freedom equation.

    Positive values mean the likelihood still increases with ``nu``.
    """
    w = (nu + dim) / (nu + delta)
    return (
        -digamma(0.5 * nu)
        + math.log(0.5 * nu)
        + float(np.mean(np.log(w) - w))
        + digamma(0.5 * (nu + dim))
        - math.log(0.5 * (nu + dim))
        + 1.0
    )


def solve_nu(delta: np.ndarray, dim: int, nu_min=NU_MIN, nu_max=NU_MAX, xtol=1e-10):
    """Root of :func:`nu_equation` in ``[nu_min, nu_max]``.

    Returns ``(nu, clamped)``. A root outside the bracket is clamped to the
    nearer edge, which is where the likelihood is maximal on the bracket.
    """

    def g(log_nu):
        return nu_equation(math.exp(log_nu), delta, dim)

    a, b = math.log(nu_min), math.log(nu_max)
    ga, gb = g(a), g(b)
    if not (np.isfinite(ga) and np.isfinite(gb)):
        raise FitError("degrees-of-freedom equation is not finite on the bracket")
    if gb >= 0.0:
        return nu_max, True
    if ga <= 0.0:
        return nu_min, True
    try:
        root = brentq(g, a, b, xtol=xtol)
    except (ValueError, RuntimeError) as err:
        raise FitError(f"degrees-of-freedom solver failed: {err}") from err
    return min(max(math.exp(root), nu_min), nu_max), False


def _loglik(x, nu, mu, sigma) -> float:
    return float(np.sum(log_mvt_pdf(x, TApprox(nu, mu, sigma))))


def fit_mvt(points, tol: float = 1e-4, max_iter: int = 200) -> FitReport:
    """
    Fit (nu, mu, Sigma) to ``points`` by maximum likelihood.

    Parameters
    ----------
    points : array_like, shape (I, D)
        Needs ``I >= max(2, 2 D)``; use :func:`select_fit` otherwise.
    tol : float
        Stop once the degrees of freedom move by less than this.
    max_iter : int
        Iteration cap.

    Returns
    -------
    FitReport
    """
    x = _as_points(points)
    n, d = x.shape
    if n < 2 or n < 2 * d:
        raise ValueError(
            f"fit_mvt needs at least max(2, 2D) = {max(2, 2 * d)} points, got {n}; "
            "use fit_mvt_regularized"
        )
    if not np.all(np.isfinite(x)):
        raise FitError("points contain non-finite values")

    mu = x.mean(axis=0)
    cov = np.cov(x, rowvar=False, bias=True).reshape(d, d)
    cov = cov + INIT_JITTER * float(np.mean(np.diag(cov))) * np.eye(d)
    sigma = _factor(cov)
    nu = NU_INIT

    trace = [_loglik(x, nu, mu, sigma)]
    delta_nu = math.inf
    converged = clamped = False
    it = 0
    while it < max_iter:
        it += 1
        delta = sigma.quad_form(x - mu)
        w = (nu + d) / (nu + delta)
        mu = (w @ x) / np.sum(w)
        diff = x - mu
        sigma = _factor((diff.T * w) @ diff / n)
        delta = sigma.quad_form(x - mu)
        nu_new, clamped = solve_nu(delta, d)
        delta_nu = abs(nu_new - nu)
        nu = nu_new
        trace.append(_loglik(x, nu, mu, sigma))
        if delta_nu < tol:
            converged = True
            break

    return FitReport(
        result=TApprox(nu, mu, sigma),
        n_iterations=it,
        final_nu_delta=delta_nu,
        loglik_trace=trace,
        converged=converged,
        nu_clamped=clamped,
    )


def principal_directions(centered: np.ndarray, n_dirs: int) -> np.ndarray:
    """Leading ``n_dirs`` right singular vectors as columns of a D x J matrix."""
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    return vt[:n_dirs].T


def fit_mvt_regularized(points, tol: float = 1e-4, max_iter: int = 200) -> FitReport:
    """
    Fit in the span of the top ``J = K // 2`` principal directions, then lift.

    The lifted scale matrix is ``A S A^T + eps I`` with ``eps`` the median
    diagonal entry of the projected fit ``S``, so the result is always full
    rank.
    """
    y = _as_points(points)
    k, d = y.shape
    if k < 4:
        raise ValueError(f"regularized fit needs at least 4 points, got {k}")
    ybar = y.mean(axis=0)
    centered = y - ybar
    j = min(k // 2, d)
    a = principal_directions(centered, j)
    inner = fit_mvt(centered @ a, tol=tol, max_iter=max_iter)
    t_hat = inner.result

    s_hat = t_hat.sigma.entries
    eps = float(np.median(np.diag(s_hat)))
    eps = max(eps, 1e-12 * float(np.max(np.diag(s_hat))), np.finfo(float).tiny)
    sigma = a @ s_hat @ a.T + eps * np.eye(d)
    result = TApprox(t_hat.nu, a @ t_hat.mu + ybar, _factor(sigma))

    inner.result = result
    inner.regularized = True
    inner.projection_dim = j
    inner.method = "pca"
    return inner


def spherical_fallback(points) -> FitReport:
    """Near-Gaussian spherical approximation for tiny or failed populations."""
    y = _as_points(points)
    k, d = y.shape
    mu = y.mean(axis=0)
    var = float(np.mean((y - mu) ** 2)) if k > 1 else 0.0
    if not (np.isfinite(var) and var > 0.0):
        var = 1.0
    return FitReport(
        result=TApprox(NU_MAX, mu, SpdMatrix.identity(d, var)),
        n_iterations=0,
        final_nu_delta=0.0,
        converged=True,
        nu_clamped=True,
        method="fallback",
    )


def select_fit(points, tol: float = 1e-4, max_iter: int = 200) -> FitReport:
    """Choose the plain, regularized or fallback fit from the population size."""
    y = _as_points(points)
    if y.shape[0] == 0:
        raise ValueError("cannot fit an empty population")
    k, d = y.shape
    if k >= max(2, 2 * d):
        return fit_mvt(y, tol=tol, max_iter=max_iter)
    if k >= 4:
        return fit_mvt_regularized(y, tol=tol, max_iter=max_iter)
    return spherical_fallback(y)
