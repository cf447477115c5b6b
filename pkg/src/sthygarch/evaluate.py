"""Forecast evaluation: one-step-ahead variance, backtests, sample moments.

The variance filter is causal: h_t is a function of y_{s<t} and the
frozen presample conventions, so the fitted in-sample h_t is already the
one-step-ahead forecast of y_t^2.  A backtest therefore runs one
continuous filter pass over the whole series with conventions (presample,
component seeds, asym threshold) frozen at their in-sample values; the
out-of-sample segment simply continues the filter state across the split
with no refitting and no discontinuity.

Model comparison uses the root mean squared error of h_t against y_t^2
and the log-likelihood value LLV = -0.5 sum l_t over a segment (larger is
better).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .estimate import FitResult, fit
from .model import TransitionSpec, variance_path

__all__ = ["BacktestReport", "DescriptiveStats", "one_step_forecast",
           "evaluate_fit", "backtest", "descriptive_stats"]

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass
class BacktestReport:
    """Per-model backtest row.

    `forecasts[t]` is the one-step-ahead variance forecast of y_{t+1}^2
    made at time t (0-based over the full series), i.e. the filter's h
    path; entries up to `n_in` are in-sample.  A failed fit leaves the
    numeric fields NaN, `forecasts` None, and the reason in `error`.
    """

    label: str
    n_in: int
    n_out: int
    rmse_in: float = math.nan
    rmse_out: float = math.nan
    llv_in: float = math.nan
    llv_out: float = math.nan
    forecasts: np.ndarray | None = field(default=None, repr=False)
    converged: bool = False
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None


@dataclass(frozen=True)
class DescriptiveStats:
    mean: float
    std: float
    min: float
    max: float
    skewness: float
    kurtosis: float


def one_step_forecast(fit_result: FitResult, spec: TransitionSpec, history) -> float:
    """Variance forecast for the step after `history` ends.

    Re-runs the filter over y_1..y_T under the fit's frozen conventions
    and advances it once; causality makes the result a function of
    information through T only.  `spec` is normally `fit_result.spec`
    (for constant-weight fits that carries the estimated weight).
    An unconverged fit is usable but warns.
    """
    if not fit_result.converged:
        warnings.warn("forecasting from an unconverged fit "
                      f"(grad norm {fit_result.grad_norm:.2e})", UserWarning)
    y = np.asarray(history, dtype=float)
    if y.ndim != 1 or y.size == 0:
        raise ValueError("history must be a non-empty 1-d series")
    # the appended value never reaches h[-1]; it only lets the filter take
    # one more step
    extended = np.append(y, 0.0)
    path = variance_path(fit_result.params, spec, extended, fit_result.k_max,
                         presample=fit_result.presample,
                         threshold=fit_result.threshold)
    return float(path.h[-1])


def evaluate_fit(fit_result: FitResult, y, split: int, label: str | None = None) -> BacktestReport:
    """Score a finished fit on the full series with an in/out split.

    Filters y_1..y_T in one causal pass under the fit's frozen
    conventions, so the first `split` h values reproduce the in-sample
    fit exactly and the rest are genuine one-step-ahead forecasts.
    """
    y = np.asarray(y, dtype=float)
    n = y.size
    if not 0 < split < n:
        raise ValueError(f"split must lie strictly inside the series, got "
                         f"{split} for length {n}")
    path = variance_path(fit_result.params, fit_result.spec, y,
                         fit_result.k_max, presample=fit_result.presample,
                         threshold=fit_result.threshold)
    h = path.h
    sq = y ** 2
    llv_t = -0.5 * (_LOG_2PI + np.log(h) + sq / h)
    err2 = (h - sq) ** 2
    return BacktestReport(
        label=label or f"{fit_result.fit_kind}:{fit_result.spec.kind}",
        n_in=split, n_out=n - split,
        rmse_in=float(np.sqrt(np.mean(err2[:split]))),
        rmse_out=float(np.sqrt(np.mean(err2[split:]))),
        llv_in=float(np.sum(llv_t[:split])),
        llv_out=float(np.sum(llv_t[split:])),
        forecasts=h, converged=fit_result.converged)


def backtest(y, split: int, specs, fit_kinds, *, k_max: int = 1000,
             fix_b2: float | None = None, multistart: int = 5,
             maxiter: int = 500) -> list[BacktestReport]:
    """Fit each (spec, fit_kind) pair on y[:split] and score it out of sample.

    Models are independent: a fit that raises produces a flagged report
    (fields NaN, `error` set) without disturbing the others.
    """
    y = np.asarray(y, dtype=float)
    if len(specs) != len(fit_kinds):
        raise ValueError("specs and fit_kinds must pair up")
    if not 0 < split < y.size:
        raise ValueError(f"split must lie strictly inside the series, got "
                         f"{split} for length {y.size}")
    reports = []
    for spec, kind in zip(specs, fit_kinds):
        label = f"{kind}:{spec.kind}"
        try:
            fr = fit(y[:split], spec, kind, k_max=k_max, fix_b2=fix_b2,
                     multistart=multistart, maxiter=maxiter)
            reports.append(evaluate_fit(fr, y, split, label=label))
        except (ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
            reports.append(BacktestReport(label=label, n_in=split,
                                          n_out=y.size - split,
                                          error=str(exc)))
    return reports


def descriptive_stats(y, *, excess: bool = False) -> DescriptiveStats:
    """Sample moments of a series.

    std uses the n-1 normalization.  Skewness and kurtosis are the
    standardized third and fourth central sample moments; by default the
    kurtosis of a Gaussian sample is near 3.0, with `excess=True`
    subtracting the 3.  A constant series has undefined shape moments,
    reported as NaN.
    """
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size < 2:
        raise ValueError("need a 1-d series with at least 2 observations")
    s = float(np.std(y, ddof=1))
    if s == 0.0:
        skew = kurt = math.nan
    else:
        skew = float(stats.skew(y, bias=True))
        kurt = float(stats.kurtosis(y, fisher=False, bias=True))
        if excess:
            kurt -= 3.0
    return DescriptiveStats(mean=float(np.mean(y)), std=s,
                            min=float(np.min(y)), max=float(np.max(y)),
                            skewness=skew, kurtosis=kurt)
