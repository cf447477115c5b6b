"""Smooth-transition HYGARCH volatility modelling."""

from .data import load_returns
from .estimate import FitResult, fit
from .evaluate import (BacktestReport, DescriptiveStats, backtest,
                       descriptive_stats, evaluate_fit, one_step_forecast)
from .experiments import (EstimationStudyResult, ExperimentConfig,
                          SizePowerStudyResult, run_estimation_study,
                          run_size_power_study)
from .fracdiff import pi_coeffs
from .model import ModelParams, TransitionSpec, variance_path
from .scoretest import ScoreTestResult, chi2_1_pvalue, score_test
from .simulate import SimConfig, child_seed, simulate, simulate_path
from .stability import StabilityReport, check_stability, spectral_radius

__version__ = "0.1.0"

__all__ = [
    "BacktestReport", "DescriptiveStats", "EstimationStudyResult",
    "ExperimentConfig", "FitResult", "ModelParams", "ScoreTestResult",
    "SimConfig", "SizePowerStudyResult", "StabilityReport", "TransitionSpec",
    "backtest", "check_stability", "chi2_1_pvalue", "child_seed",
    "descriptive_stats", "evaluate_fit", "fit", "load_returns",
    "one_step_forecast", "pi_coeffs", "run_estimation_study",
    "run_size_power_study", "score_test", "simulate", "simulate_path",
    "spectral_radius", "variance_path",
]
