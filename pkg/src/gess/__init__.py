"""Generalized elliptical slice sampling with two groups of parallel chains."""

from gess.core import SpdMatrix, TApprox, log_mvn_pdf, log_mvt_pdf
from gess.diagnostics import effective_sample_size, geweke_z, mixing_report
from gess.engine import EngineConfig, InitSpec, RunResult, run
from gess.ess import ess_update
from gess.exceptions import (
    ConfigError,
    DataError,
    DimensionError,
    FitError,
    GessError,
    NonTerminationError,
    NotPositiveDefiniteError,
    PreconditionError,
)
from gess.generalized import gess_update
from gess.mvt_fit import fit_mvt, fit_mvt_regularized, select_fit
from gess.runners import run_sampler
from gess.targets import TargetDensity, make_target

__all__ = [
    "ConfigError", "DataError", "DimensionError", "EngineConfig", "FitError", "GessError",
    "InitSpec", "NonTerminationError", "NotPositiveDefiniteError", "PreconditionError",
    "RunResult", "SpdMatrix", "TApprox", "TargetDensity", "effective_sample_size",
    "ess_update", "fit_mvt", "fit_mvt_regularized", "gess_update", "geweke_z",
    "log_mvn_pdf", "log_mvt_pdf", "make_target", "mixing_report", "run", "run_sampler",
    "select_fit",
]
__version__ = "0.1.0"
