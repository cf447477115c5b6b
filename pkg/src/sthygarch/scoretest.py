"""Score (LM) test for the smooth-transition property, H0: gamma = 0.

Only the constrained model has to be estimated: under the null the
logistic weight is identically 1/2, so the null model is the constant
half-weight mixture and its likelihood does not involve the transition
variable at all.  The transition enters the test through the slope of the
variance in gamma at the null,

    dh_t/dgamma |_{gamma=0} = -(z_t / 4) (h2_t - h1_t),

so one constrained fit supports a test against every candidate
transition.

With eta the seven component parameters, the statistic is

    psi_s = S^2 / (kappa * (Q - R' J^{-1} R)),

S the 1/sqrt(T)-normalized gamma-score, kappa the sample second moment of
(y_t^2/h_t - 1), and Q, R, J the 1/T-normalized sums of h_t^{-2}-weighted
products of the variance derivatives.  psi_s is asymptotically chi^2(1);
it equals the textbook LM form xi' I^{-1} xi with the blocked information
I = kappa * [[J, R], [R', Q]] (the tests assemble that form as an
independent cross-check).

J is inverted through a Cholesky factorization.  A condition number above
1e12 or a nonpositive Schur complement Q - R'J^{-1}R marks the result
degenerate (psi_s = nan, no p-value) instead of reporting a meaningless
number; a J that is not positive definite at all raises.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg
from scipy.special import erfc

from .estimate import FitResult, _estimation_conventions, _path_and_gradient, fit
from .model import ModelParams, TransitionSpec

__all__ = ["ScoreTestResult", "chi2_1_pvalue", "score_statistic", "score_test"]

_COND_LIMIT = 1e12


def chi2_1_pvalue(x):
    """Upper tail of chi^2 with one degree of freedom.

    For X = Z^2 with Z standard normal, P(X > x) = 2 P(Z > sqrt(x))
    = erfc(sqrt(x/2)); accurate to ~1e-15 over the whole range.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("chi-squared statistic must be nonnegative")
    out = erfc(np.sqrt(0.5 * x))
    return float(out) if out.ndim == 0 else out


@dataclass
class ScoreTestResult:
    """psi_s with its ingredients, kept for diagnostics and the CLI."""

    psi_s: float
    p_value: float | None
    eta_tilde: ModelParams
    S: float
    kappa: float
    Q: float
    R: np.ndarray = field(repr=False)
    J: np.ndarray = field(repr=False)
    schur: float = float("nan")
    cond_J: float = float("nan")
    degenerate: bool = False
    spec: TransitionSpec | None = None
    n_obs: int = 0
    k_max: int = 0

    def reject(self, level: float = 0.05) -> bool:
        if self.p_value is None:
            raise ValueError("degenerate score test has no p-value")
        return self.p_value < level


def score_statistic(eta_tilde, spec: TransitionSpec, y, *,
                    k_max: int | None = None) -> ScoreTestResult:
    """Evaluate psi_s at a constrained (gamma = 0) estimate.

    `eta_tilde` is either the FitResult of a "null" fit on `y`, or a bare
    ModelParams with gamma == 0 (useful for pinned-parameter checks).
    """
    if isinstance(eta_tilde, FitResult):
        if eta_tilde.fit_kind != "null":
            raise ValueError("score test needs the constrained (null) fit")
        params = eta_tilde.params
        if k_max is None:
            k_max = eta_tilde.k_max
    else:
        params = eta_tilde
        if params.gamma != 0.0:
            raise ValueError("score test is evaluated at gamma = 0")
        if k_max is None:
            k_max = 1000
    y = np.ascontiguousarray(y, dtype=float)
    T = y.size
    if T == 0:
        raise ValueError("return series is empty")

    conv = _estimation_conventions(y, spec)
    path, st, DH = _path_and_gradient(params, spec, y, int(k_max), conv)
    h = path.h
    resid = st.y2 / h - 1.0

    dh_eta = DH[:, :7] / h[:, None]
    dh_g = DH[:, 7] / h

    S = float(-resid @ dh_g) / math.sqrt(T)
    kappa = float(resid @ resid) / T
    Q = float(dh_g @ dh_g) / T
    R = (dh_eta.T @ dh_g) / T
    J = (dh_eta.T @ dh_eta) / T

    cond_J = float(np.linalg.cond(J))
    try:
        cho = linalg.cho_factor(J, lower=True)
    except linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            f"information block J is singular (condition number {cond_J:.3e})"
        ) from exc
    schur = Q - float(R @ linalg.cho_solve(cho, R))

    degenerate = cond_J > _COND_LIMIT or schur <= 0.0 or kappa <= 0.0
    if degenerate:
        psi = float("nan")
        p = None
    else:
        psi = S * S / (kappa * schur)
        p = chi2_1_pvalue(psi)
    return ScoreTestResult(
        psi_s=psi, p_value=p, eta_tilde=params, S=S, kappa=kappa, Q=Q,
        R=R, J=J, schur=schur, cond_J=cond_J, degenerate=degenerate,
        spec=spec, n_obs=T, k_max=int(k_max),
    )


def score_test(y, spec: TransitionSpec, *, k_max: int = 1000,
               fix_b2: float | None = None, multistart: int = 5,
               maxiter: int = 500) -> ScoreTestResult:
    """Fit the constrained model, then test against `spec`."""
    null = fit(y, spec, "null", k_max=k_max, fix_b2=fix_b2,
               multistart=multistart, maxiter=maxiter)
    return score_statistic(null, spec, y, k_max=k_max)
