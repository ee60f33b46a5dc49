"""
Distribution primitives and dense linear algebra shared by the samplers.

Everything is computed in log space. Quadratic forms go through triangular
solves against a stored Cholesky factor; no covariance matrix is ever
inverted explicitly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cholesky, solve_triangular
from scipy.special import gammaln

from gess.exceptions import DimensionError, NotPositiveDefiniteError

NU_MIN = 0.5
NU_MAX = 1e6
LOG_2PI = math.log(2.0 * math.pi)
JITTER_SCALE = 1e-9


def _cholesky_lower(matrix: np.ndarray) -> np.ndarray:
    try:
        return cholesky(matrix, lower=True, check_finite=False)
    except np.linalg.LinAlgError:
        pass
    # one retry with a small diagonal jitter, then give up
    jitter = JITTER_SCALE * float(np.mean(np.diag(matrix)))
    if not np.isfinite(jitter) or jitter <= 0.0:
        raise NotPositiveDefiniteError("matrix is not positive definite")
    try:
        return cholesky(
            matrix + jitter * np.eye(matrix.shape[0]), lower=True, check_finite=False
        )
    except np.linalg.LinAlgError as err:
        raise NotPositiveDefiniteError(
            "matrix is not positive definite (jitter retry failed)"
        ) from err


@dataclass(frozen=True, eq=False)
class SpdMatrix:
    """
    Symmetric positive-definite matrix together with its lower Cholesky factor.

    Build instances with :meth:`from_matrix` (factorizes, with one jitter
    retry) or :meth:`from_cholesky` (trusts a given factor).
    """

    entries: np.ndarray
    chol: np.ndarray
    _logdet: float = field(init=False, repr=False)

    def __post_init__(self):
        d = np.diag(self.chol)
        object.__setattr__(self, "_logdet", 2.0 * float(np.sum(np.log(d))))
        self.entries.setflags(write=False)
        self.chol.setflags(write=False)

    @classmethod
    def from_matrix(cls, matrix) -> "SpdMatrix":
        m = np.array(matrix, dtype=float, ndmin=2)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"expected a square matrix, got shape {m.shape}")
        scale = max(float(np.max(np.abs(m))), np.finfo(float).tiny)
        if np.max(np.abs(m - m.T)) > 1e-12 * scale:
            raise NotPositiveDefiniteError("matrix is not symmetric")
        m = 0.5 * (m + m.T)
        return cls(m, _cholesky_lower(m))

    @classmethod
    def from_cholesky(cls, chol) -> "SpdMatrix":
        chol = np.tril(np.array(chol, dtype=float, ndmin=2))
        if np.any(np.diag(chol) <= 0.0):
            raise NotPositiveDefiniteError("Cholesky factor needs a positive diagonal")
        return cls(chol @ chol.T, chol)

    @classmethod
    def identity(cls, dim: int, scale: float = 1.0) -> "SpdMatrix":
        return cls(scale * np.eye(dim), math.sqrt(scale) * np.eye(dim))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def logdet(self) -> float:
        return self._logdet

    def whiten(self, diff: np.ndarray) -> np.ndarray:
        """Return L^{-1} diff for a vector or a stack of row vectors."""
        diff = np.asarray(diff, dtype=float)
        if diff.shape[-1] != self.dim:
            raise DimensionError(
                f"vector length {diff.shape[-1]} does not match matrix dim {self.dim}"
            )
        if diff.ndim == 1:
            return solve_triangular(self.chol, diff, lower=True, check_finite=False)
        flat = diff.reshape(-1, self.dim)
        z = solve_triangular(self.chol, flat.T, lower=True, check_finite=False).T
        return z.reshape(diff.shape)

    def quad_form(self, diff: np.ndarray):
        """(x - mu)^T M^{-1} (x - mu), broadcasting over leading axes."""
        z = self.whiten(diff)
        return np.sum(z * z, axis=-1)

    def reconstruction_error(self) -> float:
        m = self.entries
        return float(np.linalg.norm(self.chol @ self.chol.T - m) / np.linalg.norm(m))


@dataclass(frozen=True, eq=False)
class TApprox:
    """Multivariate t parameters (degrees of freedom, location, scale matrix)."""

    nu: float
    mu: np.ndarray
    sigma: SpdMatrix

    def __post_init__(self):
        mu = np.array(self.mu, dtype=float, ndmin=1)
        mu.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        if not NU_MIN <= self.nu <= NU_MAX:
            raise ValueError(f"nu={self.nu} outside [{NU_MIN}, {NU_MAX}]")
        if mu.shape != (self.sigma.dim,):
            raise DimensionError(
                f"mu has shape {mu.shape}, sigma has dim {self.sigma.dim}"
            )

    @property
    def dim(self) -> int:
        return self.sigma.dim

    def summary(self) -> dict:
        return {
            "nu": float(self.nu),
            "trace_sigma": float(np.trace(self.sigma.entries)),
            "mu_norm": float(np.linalg.norm(self.mu)),
        }


def _check_dim(x: np.ndarray, dim: int):
    if x.shape[-1] != dim:
        raise DimensionError(f"expected vectors of length {dim}, got {x.shape[-1]}")


def log_mvn_pdf(x, mu, sigma: SpdMatrix):
    """Normalized Gaussian log-density; ``x`` may be a stack of row vectors."""
    x = np.asarray(x, dtype=float)
    mu = np.asarray(mu, dtype=float)
    _check_dim(x, sigma.dim)
    _check_dim(mu, sigma.dim)
    quad = sigma.quad_form(x - mu)
    return -0.5 * (sigma.dim * LOG_2PI + sigma.logdet + quad)


def log_mvt_pdf(x, t: TApprox):
    """Normalized multivariate t log-density T_nu(x; mu, Sigma)."""
    x = np.asarray(x, dtype=float)
    _check_dim(x, t.dim)
    d = t.dim
    nu = float(t.nu)
    quad = t.sigma.quad_form(x - t.mu)
    norm = (
        gammaln(0.5 * (nu + d))
        - gammaln(0.5 * nu)
        - 0.5 * d * math.log(nu * math.pi)
        - 0.5 * t.sigma.logdet
    )
    return norm - 0.5 * (nu + d) * np.log1p(quad / nu)


def sample_mvn(mu, sigma_chol, rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Draw ``mu + L z`` with ``z`` standard normal; ``size`` stacks that many rows."""
    mu = np.asarray(mu, dtype=float)
    chol = np.asarray(sigma_chol, dtype=float)
    if size is None:
        return mu + chol @ rng.standard_normal(mu.shape[0])
    return mu + rng.standard_normal((size, mu.shape[0])) @ chol.T


def sample_inverse_gamma(alpha: float, beta: float, rng: np.random.Generator) -> float:
    """Draw from IG(alpha, beta) as ``beta / Gamma(alpha, 1)``."""
    if not (alpha > 0.0 and beta > 0.0):
        raise ValueError(f"inverse gamma needs alpha, beta > 0 (got {alpha}, {beta})")
    return beta / rng.standard_gamma(alpha)


def sample_wishart(dim: int, dof, rng: np.random.Generator) -> SpdMatrix:
    """Wishart(I_dim, dof) draw via the Bartlett decomposition.

    The Bartlett factor is already lower triangular with a positive
    diagonal, so it is stored directly as the Cholesky factor.
    """
    if dim < 1:
        raise ValueError("dim must be positive")
    if dof < dim:
        raise ValueError(f"Wishart needs dof >= dim (dof={dof}, dim={dim})")
    a = np.zeros((dim, dim))
    a[np.diag_indices(dim)] = np.sqrt(rng.chisquare(dof - np.arange(dim)))
    rows, cols = np.tril_indices(dim, k=-1)
    a[rows, cols] = rng.standard_normal(rows.size)
    return SpdMatrix.from_cholesky(a)
