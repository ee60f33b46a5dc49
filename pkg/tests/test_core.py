import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, stats

from gess.core import (
    SpdMatrix,
    TApprox,
    log_mvn_pdf,
    log_mvt_pdf,
    sample_inverse_gamma,
    sample_mvn,
    sample_wishart,
)
from gess.exceptions import DimensionError, NotPositiveDefiniteError


def random_spd(rng, d):
    a = rng.standard_normal((d, d))
    return a @ a.T + d * np.eye(d)


# SpdMatrix ----------------------------------------------------------------

def test_spd_reconstruction_and_logdet(rng):
    m = random_spd(rng, 6)
    s = SpdMatrix.from_matrix(m)
    assert s.reconstruction_error() <= 1e-10
    assert np.allclose(np.tril(s.chol), s.chol)
    assert s.logdet == pytest.approx(np.linalg.slogdet(m)[1], rel=1e-12)


def test_spd_rejects_asymmetric():
    with pytest.raises(ValueError):
        SpdMatrix.from_matrix([[1.0, 0.5], [0.0, 1.0]])


def test_spd_rejects_indefinite():
    with pytest.raises(NotPositiveDefiniteError):
        SpdMatrix.from_matrix([[1.0, 2.0], [2.0, 1.0]])


def test_spd_jitter_rescues_borderline_matrix():
    # rank one: singular, rescued by one jitter retry
    m = np.ones((3, 3))
    s = SpdMatrix.from_matrix(m)
    assert np.all(np.diag(s.chol) > 0)


@given(st.integers(1, 10), st.integers(0, 2**32 - 1))
def test_quad_form_matches_brute_force_inverse(d, seed):
    rng = np.random.default_rng(seed)
    m = random_spd(rng, d)
    s = SpdMatrix.from_matrix(m)
    diff = rng.standard_normal(d) * 3
    brute = diff @ np.linalg.inv(m) @ diff
    assert s.quad_form(diff) == pytest.approx(brute, rel=1e-8)


# densities -----------------------------------------------------------------

def test_log_mvn_examples():
    one = SpdMatrix.identity(1)
    assert log_mvn_pdf([0.0], [0.0], one) == pytest.approx(-0.5 * math.log(2 * math.pi), abs=1e-12)
    assert log_mvn_pdf([1.0, 1.0], [1.0, 1.0], SpdMatrix.identity(2)) == pytest.approx(
        -math.log(2 * math.pi), abs=1e-12
    )
    # direct evaluation of the 1-D formula
    expected = -0.5 * math.log(8 * math.pi) - 1.0 / 8.0
    assert log_mvn_pdf([1.0], [0.0], SpdMatrix.from_matrix([[4.0]])) == pytest.approx(
        expected, abs=1e-12
    )
    assert log_mvn_pdf([1.0], [0.0], SpdMatrix.from_matrix([[4.0]])) == pytest.approx(
        stats.norm(0.0, 2.0).logpdf(1.0), abs=1e-12
    )


def test_log_mvn_matches_scipy(rng):
    m = random_spd(rng, 4)
    mu = rng.standard_normal(4)
    x = rng.standard_normal((5, 4))
    got = log_mvn_pdf(x, mu, SpdMatrix.from_matrix(m))
    assert np.allclose(got, stats.multivariate_normal(mu, m).logpdf(x), atol=1e-10)


def test_log_mvn_dimension_mismatch():
    with pytest.raises(DimensionError):
        log_mvn_pdf([0.0, 0.0], [0.0], SpdMatrix.identity(1))
    with pytest.raises(ValueError):
        log_mvn_pdf([0.0, 0.0, 0.0], [0.0, 0.0], SpdMatrix.identity(2))


def test_log_mvt_cauchy_mode():
    t = TApprox(1.0, np.zeros(1), SpdMatrix.identity(1))
    assert log_mvt_pdf([0.0], t) == pytest.approx(math.log(1 / math.pi), abs=1e-12)


def test_log_mvt_gaussian_limit():
    t = TApprox(1e6, np.zeros(1), SpdMatrix.identity(1))
    assert log_mvt_pdf([0.0], t) == pytest.approx(
        log_mvn_pdf([0.0], [0.0], SpdMatrix.identity(1)), abs=1e-4
    )


def test_log_mvt_normalizes_by_quadrature():
    t = TApprox(3.0, np.zeros(1), SpdMatrix.identity(1))
    val, _ = integrate.quad(lambda u: math.exp(log_mvt_pdf([u], t)), -np.inf, np.inf,
                            epsabs=1e-12, epsrel=1e-10, limit=500)
    assert val == pytest.approx(1.0, abs=1e-3)
    grid = np.linspace(-2000, 2000, 4_000_001)
    dens = np.exp(log_mvt_pdf(grid[:, None], t))
    assert np.trapezoid(dens, grid) == pytest.approx(1.0, abs=1e-3)


def test_log_mvt_matches_scipy(rng):
    m = random_spd(rng, 3)
    mu = rng.standard_normal(3)
    x = rng.standard_normal((6, 3)) * 4
    t = TApprox(4.5, mu, SpdMatrix.from_matrix(m))
    ref = stats.multivariate_t(loc=mu, shape=m, df=4.5).logpdf(x)
    assert np.allclose(log_mvt_pdf(x, t), ref, atol=1e-10)


def _gap(d, seed, radius, nu=1e5):
    rng = np.random.default_rng(seed)
    mu = rng.standard_normal(d)
    sigma = SpdMatrix.from_matrix(random_spd(rng, d))
    u = rng.standard_normal(d)
    u *= radius / np.linalg.norm(u)
    x = mu + sigma.chol @ u
    return float(log_mvt_pdf(x, TApprox(nu, mu, sigma)) - log_mvn_pdf(x, mu, sigma))


@given(st.integers(1, 6), st.integers(0, 2**32 - 1), st.floats(0.0, 4.0))
def test_log_mvt_large_nu_close_to_gaussian(d, seed, radius):
    assert abs(_gap(d, seed, radius)) < 1e-3


@pytest.mark.parametrize("d", [1, 3, 6])
def test_log_mvt_large_nu_gap_follows_expansion(d):
    # log T - log N = (q^2 - 2 D q + D (D - 2)) / (4 nu) + O(nu^-2)
    nu, radius = 1e5, 5.0
    q = radius**2
    lead = (q * q - 2 * d * q + d * (d - 2)) / (4 * nu)
    assert _gap(d, 7, radius, nu) == pytest.approx(lead, rel=1e-2)


def test_tapprox_validation():
    with pytest.raises(ValueError):
        TApprox(0.1, np.zeros(1), SpdMatrix.identity(1))
    with pytest.raises(ValueError):
        TApprox(2e6, np.zeros(1), SpdMatrix.identity(1))
    with pytest.raises(ValueError):
        TApprox(3.0, np.zeros(2), SpdMatrix.identity(1))


# sampling ------------------------------------------------------------------

def test_sample_mvn_mean(rng):
    n = 10**6
    draws = sample_mvn(np.zeros(2), np.eye(2), rng, size=n)
    assert np.all(np.abs(draws.mean(axis=0)) < 4 / math.sqrt(n))


def test_sample_mvn_single_draws(rng):
    n = 20_000
    chol = np.array([[2.0, 0.0], [1.0, math.sqrt(2.0)]])
    draws = np.array([sample_mvn(np.zeros(2), chol, rng) for _ in range(n)])
    assert np.all(np.abs(draws.mean(axis=0)) < 4 * np.sqrt(np.array([4.0, 3.0]) / n))


def test_sample_mvn_zero_factor_returns_mean(rng):
    mu = np.array([1.5, -2.0])
    assert np.array_equal(sample_mvn(mu, np.zeros((2, 2)), rng), mu)


def test_sample_mvn_covariance_and_whitening(rng):
    cov = np.array([[4.0, 2.0], [2.0, 3.0]])
    s = SpdMatrix.from_matrix(cov)
    assert np.allclose(s.chol, [[2.0, 0.0], [1.0, math.sqrt(2.0)]])
    n = 10**6
    draws = sample_mvn(np.zeros(2), s.chol, rng, size=n)
    emp = np.cov(draws, rowvar=False)
    assert np.linalg.norm(emp - cov) / np.linalg.norm(cov) < 0.02
    white = s.whiten(draws[:100_000])
    for d in range(2):
        assert stats.kstest(white[:, d], "norm").pvalue > 1e-3


def test_sample_inverse_gamma_moments(rng):
    draws = np.array([sample_inverse_gamma(3.0, 3.0, rng) for _ in range(10**6)])
    assert np.all(draws > 0)
    assert draws.mean() == pytest.approx(1.5, abs=0.01)
    assert draws.var() == pytest.approx(2.25, rel=0.05)


@pytest.mark.parametrize("alpha,beta", [(0.0, 1.0), (1.0, 0.0), (-1.0, 2.0)])
def test_sample_inverse_gamma_rejects_bad_params(rng, alpha, beta):
    with pytest.raises(ValueError):
        sample_inverse_gamma(alpha, beta, rng)


def test_sample_inverse_gamma_small_shape_positive(rng):
    draws = np.array([sample_inverse_gamma(0.05, 1.0, rng) for _ in range(1000)])
    assert np.all(draws > 0)


def test_wishart_dim1_is_chi_squared(rng):
    draws = np.array([sample_wishart(1, 5, rng).entries[0, 0] for _ in range(10**5)])
    assert draws.mean() == pytest.approx(5.0, rel=0.02)


def test_wishart_mean(rng):
    draws = [sample_wishart(3, 10, rng) for _ in range(10**4)]
    mean = np.mean([w.entries for w in draws], axis=0)
    # 5% per entry, relative to the diagonal scale for the zero entries
    assert np.all(np.abs(mean - 10 * np.eye(3)) < 0.05 * 10)
    for w in draws[:200]:
        assert w.reconstruction_error() <= 1e-10
        assert np.allclose(w.entries, w.entries.T)


def test_wishart_rejects_low_dof(rng):
    with pytest.raises(ValueError):
        sample_wishart(4, 3, rng)
