"""
Benchmark target densities.

Every ``log_density`` is vectorized: it accepts a single point of shape
``(D,)`` or a stack of shape ``(n, D)`` and returns a scalar or ``(n,)``
array of unnormalized log-densities.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.linalg import cho_solve

from gess.core import LOG_2PI, sample_wishart
from gess.exceptions import DataError


@dataclass(frozen=True)
class TargetDensity:
    name: str
    dim: int
    log_density: Callable = field(repr=False)
    ground_truth: dict | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("target dimension must be positive")

    def __call__(self, x):
        return self.log_density(x)


def funnel(dim: int = 10) -> TargetDensity:
    """Neal's funnel: ``v ~ N(0, 9)`` and ``x_i | v ~ N(0, e^v)``."""
    if dim < 2:
        raise ValueError("funnel needs dim >= 2")
    log_norm_v = -0.5 * (LOG_2PI + math.log(9.0))
    n_rest = dim - 1

    def log_density(x):
        x = np.asarray(x, dtype=float)
        v = x[..., 0]
        rest = x[..., 1:]
        lv = log_norm_v - v * v / 18.0
        ss = np.sum(rest * rest, axis=-1)
        # exp(log ss - v) avoids inf * 0 when v is very negative
        with np.errstate(over="ignore", divide="ignore"):
            lx = -0.5 * n_rest * (LOG_2PI + v) - 0.5 * np.exp(np.log(ss) - v)
        return lv + lx

    truth = {"first_mean": 0.0, "first_var": 9.0}
    return TargetDensity(f"funnel({dim})", dim, log_density, truth)


def gaussian_mixture(
    dim: int = 8, n_components: int = 8, seed: int = 0, centers=None
) -> TargetDensity:
    """Equal-weight mixture of unit spherical Gaussians.

    Centers are uniform in ``[-2, 2]^dim`` drawn from ``seed`` unless given.
    """
    if centers is None:
        rng = np.random.default_rng(seed)
        centers = rng.uniform(-2.0, 2.0, size=(n_components, dim))
    centers = np.array(centers, dtype=float)
    n_components, dim = centers.shape
    log_w = -math.log(n_components)
    const = -0.5 * dim * LOG_2PI

    def log_density(x):
        x = np.asarray(x, dtype=float)
        diff = x[..., None, :] - centers
        comp = const + log_w - 0.5 * np.sum(diff * diff, axis=-1)
        # plain max-shift log-sum-exp; scipy's version is ~10x slower per call
        top = comp.max(axis=-1)
        return top + np.log(np.sum(np.exp(comp - top[..., None]), axis=-1))

    c_mean = centers.mean(axis=0)
    c_cov = np.atleast_2d(np.cov(centers, rowvar=False, bias=True))
    truth = {"mean": c_mean, "cov": np.eye(dim) + c_cov, "centers": centers}
    return TargetDensity(f"mixture({dim})", dim, log_density, truth)


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    scales: np.ndarray
    columns: tuple = ()


def logistic_posterior(data: Dataset, prior_var: float = 100.0) -> TargetDensity:
    """Posterior of a logistic regression with an intercept and N(0, prior_var) priors."""
    y = np.asarray(data.labels, dtype=float)
    if not np.all((y == 0.0) | (y == 1.0)):
        raise DataError("labels must be 0 or 1")
    feats = np.asarray(data.features, dtype=float)
    design = np.hstack([np.ones((feats.shape[0], 1)), feats])
    dim = design.shape[1]
    prior_const = -0.5 * dim * (LOG_2PI + math.log(prior_var))

    def log_density(beta):
        beta = np.asarray(beta, dtype=float)
        logits = beta @ design.T
        loglik = np.sum(y * logits - np.logaddexp(0.0, logits), axis=-1)
        return loglik + prior_const - 0.5 * np.sum(beta * beta, axis=-1) / prior_var

    return TargetDensity(f"logistic({dim})", dim, log_density)


def wishart_gaussian(dim: int, seed: int = 0) -> TargetDensity:
    """Zero-mean Gaussian whose precision is a Wishart(I, dim) draw."""
    if dim < 2:
        raise ValueError("wishart_gaussian needs dim >= 2")
    precision = sample_wishart(dim, dim, np.random.default_rng(seed))
    chol = precision.chol
    const = -0.5 * dim * LOG_2PI + 0.5 * precision.logdet

    def log_density(x):
        x = np.asarray(x, dtype=float)
        z = x @ chol
        return const - 0.5 * np.sum(z * z, axis=-1)

    cov = cho_solve((chol, True), np.eye(dim))
    truth = {
        "precision": precision.entries,
        "sigma": np.sqrt(np.diag(cov)),
        "mean": np.zeros(dim),
    }
    return TargetDensity(f"wishart({dim})", dim, log_density, truth)


def _parse_float(text: str, line: int, col: int) -> float:
    try:
        return float(text)
    except ValueError:
        raise DataError(f"line {line}: column {col}: not a number: {text!r}") from None


def load_csv_dataset(path, label_column=-1, standardize: bool = True) -> Dataset:
    """
    Read a numeric CSV table with a binary label column.

    Parameters
    ----------
    path : str or Path
    label_column : str or int
        Column name (requires a header row) or index; negative indices count
        from the end.
    standardize : bool
        Divide every feature column by its standard deviation.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [(i + 1, r) for i, r in enumerate(csv.reader(fh)) if r]
    if not rows:
        raise DataError(f"{path}: empty file")

    header = None
    first = rows[0][1]
    try:
        [float(v) for v in first]
    except ValueError:
        header = [h.strip() for h in first]
        rows = rows[1:]
    if not rows:
        raise DataError(f"{path}: no data rows")

    width = len(header) if header else len(rows[0][1])
    if isinstance(label_column, str):
        if header is None or label_column not in header:
            raise DataError(f"{path}: no column named {label_column!r}")
        label_idx = header.index(label_column)
    else:
        label_idx = int(label_column)
        if not -width <= label_idx < width:
            raise DataError(f"{path}: label column {label_idx} out of range")
        label_idx %= width

    table = np.empty((len(rows), width))
    for r, (line, row) in enumerate(rows):
        if len(row) != width:
            raise DataError(f"line {line}: expected {width} fields, got {len(row)}")
        table[r] = [_parse_float(v, line, c) for c, v in enumerate(row)]

    labels = table[:, label_idx]
    if not np.all((labels == 0.0) | (labels == 1.0)):
        raise DataError(f"{path}: labels must be 0 or 1")
    keep = [c for c in range(width) if c != label_idx]
    features = table[:, keep]
    names = tuple(header[c] for c in keep) if header else tuple(str(c) for c in keep)

    scales = np.ones(len(keep))
    if standardize:
        scales = features.std(axis=0)
        flat = np.flatnonzero(~(scales > 0.0))
        if flat.size:
            raise DataError(f"{path}: column {names[flat[0]]!r} is constant")
        features = features / scales
    return Dataset(features, labels.astype(np.int64), scales, names)


def breast_cancer(standardize: bool = True) -> Dataset:
    """The bundled Breast Cancer Wisconsin table (30 features)."""
    src = resources.files("gess") / "data" / "breast_cancer.csv"
    with resources.as_file(src) as path:
        return load_csv_dataset(Path(path), "malignant", standardize)


def make_target(name: str, dim: int | None = None, seed: int = 0, dataset=None,
                label_column=-1, prior_var: float = 100.0) -> TargetDensity:
    """Build a registered target from its name and parameters."""
    if name == "funnel":
        return funnel(dim or 10)
    if name == "mixture":
        return gaussian_mixture(dim or 8, 8, seed)
    if name == "wishart":
        return wishart_gaussian(dim or 50, seed)
    if name == "logistic":
        data = breast_cancer() if dataset is None else load_csv_dataset(dataset, label_column)
        return logistic_posterior(data, prior_var)
    raise KeyError(f"unknown target {name!r}")


TARGET_NAMES = ("funnel", "mixture", "wishart", "logistic")


def list_targets() -> list[str]:
    return ["funnel(10)", "mixture(8)", "wishart(D)", "logistic(dataset)"]
