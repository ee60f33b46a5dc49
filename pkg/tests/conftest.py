import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def assert_moments_within(samples, mean, var, n_se=4.0):
    """Per-coordinate mean and variance agree with exact values within ``n_se`` standard errors."""
    samples = np.asarray(samples)
    n = samples.shape[0]
    mean = np.asarray(mean)
    var = np.asarray(var)
    se_mean = np.sqrt(var / n)
    # variance of the sample variance for a Gaussian: 2 var^2 / (n - 1)
    se_var = np.sqrt(2.0 * var**2 / (n - 1))
    assert np.all(np.abs(samples.mean(axis=0) - mean) < n_se * se_mean), samples.mean(axis=0)
    assert np.all(np.abs(samples.var(axis=0, ddof=1) - var) < n_se * se_var), samples.var(
        axis=0, ddof=1
    )


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
