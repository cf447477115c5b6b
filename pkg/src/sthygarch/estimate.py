"""Maximum-likelihood estimation with analytic gradients.

The Gaussian quasi-likelihood is L(theta) = -0.5 sum_t l_t with

    l_t = ln(2 pi) + ln h_t + y_t^2 / h_t,

and gradient dL/dtheta_i = sum_t (1/(2 h_t)) (y_t^2/h_t - 1) dh_t/dtheta_i.
The eight dh_t/dtheta_i recursions run alongside the filter: the GARCH
partials are AR(1) filters in a1, the FIGARCH partials AR(1) filters in b1
with convolution inputs (the b2 and d partials differentiate the expanded
lag weights; the d partial uses the coefficient derivatives dpi/dd).  The
weight contributes (h2_t - h1_t) dw_t/dtheta, where dw_t/dgamma =
-z_t w_t (1 - w_t); for the lagged-variance transition z_t = h_{t-lag}
itself depends on the parameters, so its exact chain term
-gamma w_t (1 - w_t) (h2_t - h1_t) dh_{t-lag}/dtheta is propagated
stepwise (it vanishes at gamma = 0 and for return-driven transitions).

Estimation initializes the filter with the usual presample convention:
y_s^2 = mean(y^2) for s <= 0, with the same value seeding h1_0 and h2_0.

Constraints are enforced by reparameterization, so the quasi-Newton
search is unconstrained (up to a wide safety box):

    a0, a1, a2, b0, gamma = exp(u)         (positivity)
    d = s(u_d), b1 = d s(u_b1), b2 = b1 s(u_b2)   (0 < b2 < b1 < d < 1)

with s the logistic sigmoid; the chain rule keeps gradients exact.  Three
fit kinds cover the model family: "full" (all 8 parameters), "null"
(gamma = 0, i.e. constant weight 1/2; the basis of the score test), and
"hygarch" (constant weight w estimated alongside the 7 component
parameters).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, signal
from scipy.special import expit, logit

from .fracdiff import pi_coeffs, pi_coeffs_dd
from .model import (
    ASYM_AVG,
    FIXED_W,
    LAGGED_VARIANCE,
    ModelParams,
    TransitionSpec,
    _filter,
    squared_return_threshold,
)

__all__ = [
    "FIT_KINDS",
    "FitResult",
    "neg2_loglik_terms",
    "loglik",
    "loglik_gradient",
    "fit",
]

FIT_KINDS = ("full", "null", "hygarch")

_LOG2PI = math.log(2.0 * math.pi)
_PENALTY = 1e15
_UBOX = 30.0


@dataclass
class FitResult:
    """Outcome of one maximum-likelihood fit.

    `spec` is the transition to filter with at the estimate; for the
    "hygarch" kind it is a FixedWeight transition carrying the estimated
    constant weight (also exposed as `w`).  `presample` and `threshold`
    freeze the in-sample filter conventions so forecasts can continue the
    same filter on extended data without recomputing them.
    """

    params: ModelParams
    spec: TransitionSpec
    fit_kind: str
    loglik: float
    loglik_per_obs: float
    grad_norm: float
    n_iter: int
    converged: bool
    n_obs: int
    k_max: int
    presample: float
    threshold: float | None = None
    w: float | None = None


def _estimation_conventions(y, spec, threshold=None):
    pre = float(np.mean(np.square(y)))
    if threshold is None and spec.kind == ASYM_AVG:
        threshold = squared_return_threshold(y, spec.percentile)
    return dict(presample=pre, h1_init=pre, h2_init=pre, h_init=pre,
                threshold=threshold)


def _as_series(y):
    y = np.ascontiguousarray(y, dtype=float)
    if y.size == 0:
        raise ValueError("return series is empty")
    return y


def neg2_loglik_terms(params: ModelParams, spec: TransitionSpec, y,
                      k_max: int = 1000, **conventions) -> np.ndarray:
    """Per-observation terms l_t; the log-likelihood is -0.5 * sum."""
    y = _as_series(y)
    conv = _estimation_conventions(y, spec, conventions.pop("threshold", None))
    conv.update(conventions)
    path, st = _filter(params, spec, y, int(k_max), **conv)
    if not np.isfinite(path.h).all() or np.min(path.h) <= 0.0:
        raise ValueError("variance path is not positive and finite at these parameters")
    return _LOG2PI + np.log(path.h) + st.y2 / path.h


def loglik(params: ModelParams, spec: TransitionSpec, y, k_max: int = 1000,
           **conventions) -> float:
    """L(theta) = -0.5 sum_t l_t."""
    return -0.5 * float(np.sum(neg2_loglik_terms(params, spec, y, k_max, **conventions)))


def _dh_columns(params: ModelParams, path, st, y, k_max):
    """Component derivative paths: (S,3) for h1 wrt (a0,a1,a2) and (S,4)
    for h2 wrt (b0,b1,b2,d), all with zero seeds (the initialization is a
    data constant)."""
    S = y.size
    P = k_max + 1
    ar_a = np.array([1.0, -params.a1])
    ar_b = np.array([1.0, -params.b1])
    zi = np.zeros(1)
    ones = np.ones(S)

    h1lag = np.empty(S)
    h1lag[0] = path.h1_init
    h1lag[1:] = path.h1[:-1]
    h2lag = np.empty(S)
    h2lag[0] = path.h2_init
    h2lag[1:] = path.h2[:-1]

    d_a0 = signal.lfilter([1.0], ar_a, ones, zi=zi)[0]
    d_a1 = signal.lfilter([1.0], ar_a, h1lag, zi=zi)[0]
    d_a2 = signal.lfilter([1.0], ar_a, st.y2lag, zi=zi)[0]

    k = k_max
    pi = st.pi
    dpi = pi_coeffs_dd(params.d, k).dpi_dd
    c_b2 = np.concatenate([[1.0], -pi])
    c_d = np.empty(k + 1)
    c_d[0] = dpi[0]
    if k > 1:
        c_d[1:k] = dpi[1:] - params.b2 * dpi[:-1]
    c_d[k] = -params.b2 * dpi[k - 1]
    u_b2 = signal.convolve(st.ext, c_b2)[P - 1 : P - 1 + S]
    u_d = signal.convolve(st.ext, c_d)[P - 1 : P - 1 + S]

    d_b0 = signal.lfilter([1.0], ar_b, ones, zi=zi)[0]
    d_b1 = signal.lfilter([1.0], ar_b, h2lag - st.y2lag, zi=zi)[0]
    d_b2 = signal.lfilter([1.0], ar_b, u_b2, zi=zi)[0]
    d_d = signal.lfilter([1.0], ar_b, u_d, zi=zi)[0]

    return (d_a0, d_a1, d_a2), (d_b0, d_b1, d_b2, d_d)


def _path_and_gradient(params: ModelParams, spec: TransitionSpec, y, k_max, conv):
    """Filter plus dh_t/dtheta as an (S, 8) array in parameter order
    (a0,a1,a2,b0,b1,b2,d,gamma).  For a fixed-weight transition the gamma
    column is zero (the weight does not move with gamma); the weight
    derivative dh/dw = h2 - h1 is returned separately by the caller's
    algebra when needed."""
    path, st = _filter(params, spec, y, int(k_max), **conv)
    S = y.size
    (d_a0, d_a1, d_a2), (d_b0, d_b1, d_b2, d_d) = _dh_columns(params, path, st, y, int(k_max))

    w = path.w
    omw = 1.0 - w
    diff = path.h2 - path.h1
    DH = np.empty((S, 8))
    DH[:, 0] = omw * d_a0
    DH[:, 1] = omw * d_a1
    DH[:, 2] = omw * d_a2
    DH[:, 3] = w * d_b0
    DH[:, 4] = w * d_b1
    DH[:, 5] = w * d_b2
    DH[:, 6] = w * d_d

    g = params.gamma
    if spec.kind == FIXED_W:
        DH[:, 7] = 0.0
    elif spec.kind == LAGGED_VARIANCE and g > 0.0:
        # z_t = h_{t-lag} moves with every parameter: propagate the chain
        # term forward (rows before t are final when row t is formed)
        cw = w * omw * diff
        z = path.z
        lag = spec.lag
        DH[:, 7] = 0.0
        for t in range(S):
            if t >= lag:
                DH[t] -= (g * cw[t]) * DH[t - lag]
            DH[t, 7] -= cw[t] * z[t]
    else:
        # dw/dgamma = -z w (1 - w); at gamma = 0 this is -z/4
        DH[:, 7] = -(w * omw * path.z) * diff
    return path, st, DH


def loglik_gradient(params: ModelParams, spec: TransitionSpec, y,
                    k_max: int = 1000, **conventions) -> np.ndarray:
    """Analytic dL/dtheta, ordered (a0,a1,a2,b0,b1,b2,d,gamma).

    Needs d strictly inside (0,1) (the coefficient derivatives are not
    defined at the endpoints).
    """
    if not 0.0 < params.d < 1.0:
        raise ValueError(f"gradient needs 0 < d < 1, got d={params.d}")
    y = _as_series(y)
    conv = _estimation_conventions(y, spec, conventions.pop("threshold", None))
    conv.update(conventions)
    path, st, DH = _path_and_gradient(params, spec, y, k_max, conv)
    if not np.isfinite(path.h).all() or np.min(path.h) <= 0.0:
        raise ValueError("variance path is not positive and finite at these parameters")
    score = (st.y2 / path.h - 1.0) / path.h
    return 0.5 * (score @ DH)


# ---------------------------------------------------------------------------
# constrained fitting through an unconstrained reparameterization

def _unpack(u, fit_kind, fix_b2, fix_w):
    a0, a1, a2, b0 = np.exp(u[0:4])
    d = float(expit(u[4]))
    s_b1 = float(expit(u[5]))
    b1 = d * s_b1
    i = 6
    if fix_b2 is None:
        s_b2 = float(expit(u[i]))
        b2 = b1 * s_b2
        i += 1
    else:
        s_b2 = None
        b2 = fix_b2
    gamma = 0.0
    w = None
    if fit_kind == "full":
        gamma = float(np.exp(u[i]))
    elif fit_kind == "hygarch":
        w = fix_w if fix_w is not None else float(expit(u[i]))
    params = ModelParams(a0=float(a0), a1=float(a1), a2=float(a2), b0=float(b0),
                         b1=b1, b2=b2, d=d, gamma=gamma)
    return params, w, (d, s_b1, s_b2)


def _pack(params: ModelParams, fit_kind, fix_b2, fix_w, w=None):
    eps = 1e-12
    u = [math.log(max(p, eps)) for p in (params.a0, params.a1, params.a2, params.b0)]
    d = min(max(params.d, eps), 1.0 - eps)
    u.append(float(logit(d)))
    r1 = min(max(params.b1 / d, eps), 1.0 - eps)
    u.append(float(logit(r1)))
    if fix_b2 is None:
        b1 = max(params.b1, eps)
        r2 = min(max(params.b2 / b1, eps), 1.0 - eps)
        u.append(float(logit(r2)))
    if fit_kind == "full":
        u.append(math.log(max(params.gamma, eps)))
    elif fit_kind == "hygarch" and fix_w is None:
        ws = min(max(0.5 if w is None else w, eps), 1.0 - eps)
        u.append(float(logit(ws)))
    return np.clip(np.array(u), -_UBOX, _UBOX)


def _chain_to_u(grad_theta, grad_w, params, maps, fit_kind, fix_b2, fix_w):
    """dL/du from dL/dtheta via the reparameterization chain rule."""
    d, s_b1, s_b2 = maps
    g = grad_theta
    out = [
        g[0] * params.a0,
        g[1] * params.a1,
        g[2] * params.a2,
        g[3] * params.b0,
    ]
    # u_d moves d, b1 and b2 together; u_b1 moves b1 and b2
    gu_d = g[6] * d * (1.0 - d) + g[4] * params.b1 * (1.0 - d)
    gu_b1 = g[4] * params.b1 * (1.0 - s_b1)
    if fix_b2 is None:
        gu_d += g[5] * params.b2 * (1.0 - d)
        gu_b1 += g[5] * params.b2 * (1.0 - s_b1)
    out.append(gu_d)
    out.append(gu_b1)
    if fix_b2 is None:
        out.append(g[5] * params.b2 * (1.0 - s_b2))
    if fit_kind == "full":
        out.append(g[7] * params.gamma)
    elif fit_kind == "hygarch" and fix_w is None:
        # grad_w already carries the expit chain factor w (1 - w)
        out.append(grad_w)
    return np.asarray(out)


def _default_starts(y, fit_kind, fix_b2):
    v = max(float(np.mean(np.square(y))), 1e-8)
    combos = [(0.6, 0.5, 0.5), (0.3, 0.5, 0.5), (0.6, 2.0, 0.35),
              (0.3, 2.0, 0.65), (0.45, 1.0, 0.5)]
    starts = []
    for d, gamma, wstart in combos:
        b1 = 0.6 * d
        b2 = 0.0 if fix_b2 is not None else 0.3 * b1
        p = ModelParams(a0=0.15 * v, a1=0.20, a2=0.30, b0=0.10 * v,
                        b1=b1, b2=b2, d=d,
                        gamma=gamma if fit_kind == "full" else 0.0)
        starts.append((p, wstart))
    return starts


def fit(y, spec: TransitionSpec, fit_kind: str = "full", *, k_max: int = 1000,
        fix_b2: float | None = None, fix_w: float | None = None,
        start: ModelParams | None = None, multistart: int = 5,
        maxiter: int = 500, gtol: float = 1e-6, ftol: float = 1e-10,
        min_obs: int = 50) -> FitResult:
    """Maximize the likelihood for one model variant.

    Parameters
    ----------
    fit_kind : {"full", "null", "hygarch"}
        "full" estimates all 8 parameters of the smooth-transition model;
        "null" imposes gamma = 0 (constant weight 1/2) and estimates the 7
        component parameters; "hygarch" estimates the component parameters
        plus a constant weight w (the transition argument is ignored for
        the likelihood in that case).
    fix_b2 : float, optional
        Pin b2 during estimation.  Only 0.0 is supported (the common
        choice that drops the FIGARCH moving-average term); other values
        cannot be guaranteed to satisfy b2 <= b1 along the search path.
    fix_w : float, optional
        For "hygarch", pin the constant weight instead of estimating it.
    start : ModelParams, optional
        User initial point, tried before the built-in multistart seeds.
    multistart : int
        Number of starting points (built-in list of 5, variance-scaled
        intercepts crossed with d in {0.3, 0.6} and gamma in {0.5, 2}).

    Notes
    -----
    `converged` requires both optimizer success and a final gradient
    sup-norm (in the optimization space) below `gtol`; a fit that stops on
    the relative-objective criterion with a larger gradient is still
    returned, flagged converged=False.
    """
    if fit_kind not in FIT_KINDS:
        raise ValueError(f"fit_kind must be one of {FIT_KINDS}, got {fit_kind!r}")
    y = _as_series(y)
    if y.size < min_obs:
        raise ValueError(f"need at least {min_obs} observations, got {y.size}")
    if fix_b2 is not None and fix_b2 != 0.0:
        raise ValueError("fix_b2 supports only 0.0")
    if fit_kind == "full" and spec.kind == FIXED_W:
        raise ValueError(
            "gamma is not identified under a fixed-weight transition; "
            "use fit_kind='hygarch' for the constant-weight model"
        )

    filter_spec = TransitionSpec.fixed_weight(0.5) if fit_kind == "hygarch" else spec
    conv = _estimation_conventions(y, filter_spec)
    k_max = int(k_max)
    S = y.size

    def objective(u):
        params, w, maps = _unpack(u, fit_kind, fix_b2, fix_w)
        fspec = TransitionSpec.fixed_weight(w) if fit_kind == "hygarch" else spec
        try:
            # line searches probe infeasible corners of the box where the
            # recursion overflows; the penalty branch below handles those,
            # so the intermediate inf/nan arithmetic is expected
            with np.errstate(invalid="ignore", over="ignore",
                             divide="ignore"):
                path, st, DH = _path_and_gradient(params, fspec, y, k_max, conv)
        except (ValueError, FloatingPointError):
            return _PENALTY, np.zeros_like(u)
        h = path.h
        if not np.isfinite(h).all() or h.min() <= 0.0:
            return _PENALTY, np.zeros_like(u)
        lt = _LOG2PI + np.log(h) + st.y2 / h
        f = 0.5 * float(np.sum(lt))  # = -L
        if not np.isfinite(f):
            return _PENALTY, np.zeros_like(u)
        score = (st.y2 / h - 1.0) / h
        grad_theta = 0.5 * (score @ DH)
        grad_w = 0.0
        if fit_kind == "hygarch" and fix_w is None:
            dLdw = 0.5 * float(score @ (path.h2 - path.h1))
            grad_w = dLdw * w * (1.0 - w)
        gu = _chain_to_u(grad_theta, grad_w, params, maps, fit_kind, fix_b2, fix_w)
        return f, -gu

    starts = _default_starts(y, fit_kind, fix_b2)
    points = [(start, 0.5)] if start is not None else []
    points += starts
    points = points[: max(1, int(multistart))]

    dim = _pack(points[0][0], fit_kind, fix_b2, fix_w, w=points[0][1]).size
    bounds = [(-_UBOX, _UBOX)] * dim
    best = None
    for p0, w0 in points:
        u0 = _pack(p0, fit_kind, fix_b2, fix_w, w=w0)
        res = optimize.minimize(
            objective, u0, jac=True, method="L-BFGS-B", bounds=bounds,
            options={"maxiter": maxiter, "ftol": ftol, "gtol": gtol},
        )
        if not np.isfinite(res.fun) or res.fun >= _PENALTY:
            continue
        if best is None or res.fun < best.fun:
            best = res
    if best is None:
        raise ValueError("no starting point yielded a finite likelihood")

    params, w, _ = _unpack(best.x, fit_kind, fix_b2, fix_w)
    f, gneg = objective(best.x)
    grad_norm = float(np.max(np.abs(gneg)))
    result_spec = TransitionSpec.fixed_weight(w) if fit_kind == "hygarch" else spec
    return FitResult(
        params=params,
        spec=result_spec,
        fit_kind=fit_kind,
        loglik=-f,
        loglik_per_obs=-f / S,
        grad_norm=grad_norm,
        n_iter=int(best.nit),
        converged=bool(best.success) and grad_norm < gtol,
        n_obs=S,
        k_max=k_max,
        presample=conv["presample"],
        threshold=conv["threshold"],
        w=w,
    )
