"""
Mixing diagnostics.

The spectral density at frequency zero is estimated the way R's ``coda``
does it (``spectrum0.ar``): fit an autoregression by Yule-Walker with the
order picked by AIC and read off ``sigma^2 / (1 - sum(phi))^2``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

MAX_AR_ORDER = 20
MIN_SEGMENT = 100
GEWEKE_THRESHOLD = 2.0


@dataclass
class Spectrum0:
    spec0: float
    order: int
    coefficients: np.ndarray


def _autocovariance(x: np.ndarray, max_lag: int) -> np.ndarray:
    n = x.size
    nfft = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(x, nfft)
    acov = np.fft.irfft(f * np.conj(f), nfft)[: max_lag + 1]
    return acov / n


def levinson_durbin(acov: np.ndarray, order: int):
    """Yule-Walker AR fits of every order up to ``order``.

    Returns the list of coefficient vectors and innovation variances,
    indexed by order (order 0 has no coefficients).
    """
    phis = [np.zeros(0)]
    variances = [float(acov[0])]
    phi = np.zeros(0)
    v = float(acov[0])
    for k in range(1, order + 1):
        if v <= 0.0:
            break
        refl = (acov[k] - phi @ acov[k - 1:0:-1]) / v if k > 1 else acov[1] / v
        phi = np.append(phi - refl * phi[::-1], refl)
        v = v * (1.0 - refl * refl)
        phis.append(phi)
        variances.append(float(v))
    return phis, variances


def spectrum0_ar(series, max_order: int = MAX_AR_ORDER) -> Spectrum0:
    """Spectral density at zero from an AIC-selected AR model."""
    x = np.asarray(series, dtype=float)
    n = x.size
    x = x - x.mean()
    order_max = int(min(max_order, n - 1, math.floor(10 * math.log10(n))))
    acov = _autocovariance(x, order_max)
    phis, variances = levinson_durbin(acov, order_max)
    aic = [n * math.log(v) + 2 * k if v > 0 else math.inf for k, v in enumerate(variances)]
    best = int(np.argmin(aic))
    phi = phis[best]
    var_pred = variances[best] * n / (n - (best + 1))
    return Spectrum0(var_pred / (1.0 - float(np.sum(phi))) ** 2, best, phi)


@dataclass
class EssResult:
    ess: float
    degenerate: bool
    ar_order: int = 0


def effective_sample_size(series, *, full: bool = False):
    """
    Effective sample size ``N var(x) / S(0)``.

    The series is standardized first, so the estimate is invariant to
    affine transformations. A constant series gives 0 (flagged degenerate
    when ``full=True``).
    """
    x = np.asarray(series, dtype=float)
    if x.ndim != 1 or x.size < MIN_SEGMENT:
        raise ValueError(f"need a 1-D series of at least {MIN_SEGMENT} values")
    sd = x.std(ddof=1)
    if not np.isfinite(sd) or sd == 0.0 or np.ptp(x) <= 1e-14 * max(abs(x.mean()), 1.0):
        res = EssResult(0.0, True)
        return res if full else res.ess
    z = (x - x.mean()) / sd
    sp = spectrum0_ar(z)
    res = EssResult(x.size / sp.spec0, False, sp.order)
    return res if full else res.ess


def geweke_z(series, first_frac: float = 0.1, last_frac: float = 0.5) -> float:
    """Geweke z-score comparing the means of an early and a late segment."""
    x = np.asarray(series, dtype=float)
    if not (0 < first_frac < 1 and 0 < last_frac < 1 and first_frac + last_frac <= 1):
        raise ValueError("segment fractions must be in (0, 1) and sum to at most 1")
    n = x.size
    n1 = int(math.floor(first_frac * n))
    n2 = int(math.floor(last_frac * n))
    if min(n1, n2) < MIN_SEGMENT:
        raise ValueError(
            f"segments of {n1} and {n2} values are too short (need {MIN_SEGMENT}); "
            f"series has {n} values"
        )
    a, b = x[:n1], x[n - n2:]
    diff = a.mean() - b.mean()
    var = 0.0
    for seg in (a, b):
        if np.ptp(seg) > 0.0:
            var += spectrum0_ar(seg).spec0 / seg.size
    if var == 0.0:
        return 0.0 if diff == 0.0 else math.copysign(math.inf, diff)
    return float(diff / math.sqrt(var))


@dataclass
class MixingReport:
    ess_pooled: float
    ess_total: float
    ess_per_second: float | None
    ess_per_eval: float | None
    geweke_z: float | None
    converged: bool
    degenerate: bool
    n_chains: int
    n_kept: int
    n_evals: int
    wall_seconds: float

    def to_dict(self) -> dict:
        out = asdict(self)
        for key, val in out.items():
            if isinstance(val, float) and not math.isfinite(val):
                out[key] = None
        return out


def mixing_report(run, threshold: float = GEWEKE_THRESHOLD) -> MixingReport:
    """
    Summarize a run by the ESS of its pooled log-density sequence.

    ``ess_total`` multiplies the pooled ESS by the number of chains; the
    per-second and per-evaluation metrics are ``None`` when the Geweke test
    rejects convergence. Runs with fewer than 100 kept rounds get a NaN ESS
    and ``degenerate=True``.
    """
    pooled = run.pooled_log_pi()
    n_kept = pooled.size
    if n_kept < MIN_SEGMENT:
        # too short to estimate; reported as null and flagged
        ess = EssResult(math.nan, True)
    else:
        ess = effective_sample_size(pooled, full=True)
    try:
        z = geweke_z(pooled)
    except ValueError:
        z = None
    converged = z is not None and math.isfinite(z) and abs(z) < threshold
    total = run.n_chains * ess.ess
    n_evals = run.n_evals
    wall = float(run.wall_seconds)
    return MixingReport(
        ess_pooled=float(ess.ess),
        ess_total=float(total),
        ess_per_second=total / wall if converged and wall > 0 else None,
        ess_per_eval=total / n_evals if converged and n_evals > 0 else None,
        geweke_z=z,
        converged=bool(converged),
        degenerate=ess.degenerate,
        n_chains=int(run.n_chains),
        n_kept=int(n_kept),
        n_evals=int(n_evals),
        wall_seconds=wall,
    )
