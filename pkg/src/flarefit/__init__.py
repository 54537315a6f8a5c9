"""Regression with positively skewed errors.

Two model families share the linear-predictor structure: the EMG regression
(Gaussian-plus-exponential convolution errors, fitted by block relaxation)
and the flare mixture regression (Gaussian or exponential error per
observation, fitted by ECM), plus OLS and mixture-of-regressions baselines,
standard errors, BIC comparison, and a Monte Carlo study harness.
"""

from .baselines import LinFit, MixRegFit, fit_mixreg2, fit_ols
from .data import Dataset, FitError
from .distributions import (
    EmgParams,
    FlareParams,
    emg_log_density,
    erfcx,
    flare_density,
)
from .emg import EmgFit, emg_loglik, fit_emg
from .flare import (
    COMPONENT_EXPONENTIAL,
    COMPONENT_GAUSSIAN,
    ClusterLabels,
    FlareFit,
    classify,
    cm_step_beta,
    cm_step_psi2,
    fit_flare,
    observed_loglik,
    posterior_gaussian,
)
from .inference import (
    ComparisonReport,
    SeReport,
    bic,
    bootstrap_se,
    compare_models,
    louis_information,
)
from .ingest import AimingRecord, difficulty, ingest, truncate
from .simulation import (
    SETTINGS,
    McReport,
    SimSetting,
    gen_emg_data,
    gen_flare_data,
    monte_carlo_study,
)

__all__ = [
    "AimingRecord", "COMPONENT_EXPONENTIAL", "COMPONENT_GAUSSIAN",
    "ClusterLabels", "ComparisonReport", "Dataset", "EmgFit", "EmgParams",
    "FitError", "FlareFit", "FlareParams", "LinFit", "McReport", "MixRegFit",
    "SETTINGS", "SeReport", "SimSetting", "bic", "bootstrap_se", "classify",
    "cm_step_beta", "cm_step_psi2", "compare_models", "difficulty",
    "emg_log_density", "emg_loglik", "erfcx", "fit_emg", "fit_flare",
    "fit_mixreg2", "fit_ols", "flare_density", "gen_emg_data",
    "gen_flare_data", "ingest", "louis_information", "monte_carlo_study",
    "observed_loglik", "posterior_gaussian", "truncate",
]

__version__ = "0.1.0"
