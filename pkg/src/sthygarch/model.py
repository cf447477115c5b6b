"""Conditional-variance filter for the smooth-transition HYGARCH model.

The total conditional variance is a convex combination of a short-memory
GARCH(1,1) component and a long-memory FIGARCH(1,d,1) component,

    h_t = (1 - w_t) h1_t + w_t h2_t,

with a logistic weight

    w_t = exp(-gamma z_t) / (1 + exp(-gamma z_t))

driven by an observable transition variable z_t.  gamma = 0 freezes the
weight at 1/2 (the constant-weight model with w = 1/2); large gamma
approaches a hard threshold in z_t.  A constant weight w other than 1/2 is
available through the FixedWeight transition, giving the plain HYGARCH
model.

The components are

    h1_t = a0 + a1 h1_{t-1} + a2 y_{t-1}^2
    h2_t = b0 + b1 h2_{t-1} + [1 - b1 B - (1 - b2 B)(1 - B)^d] y_t^2

where B is the backshift operator.  Expanding (1 - B)^d through its
truncated coefficient sequence pi_1..pi_k turns the bracket into a
distributed lag

    h2_t = b0 + b1 h2_{t-1} + sum_{j=1}^{k+1} c_j y_{t-j}^2,

    c_1 = b2 - b1 + pi_1,   c_j = pi_j - b2 pi_{j-1}  (2 <= j <= k),
    c_{k+1} = -b2 pi_k,

which is what the filter evaluates: the lag sums come from a single
convolution and both component recursions are first-order linear filters,
so a full path costs O(S log S + S) regardless of k_max.

Presample convention: squared returns before the first observation are
replaced by a constant (the in-sample mean of y_t^2 when estimating;
zero when simulating, where a burn-in absorbs initialization).  Component
seeds h1_0 and h2_0 default to the same constant.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import signal
from scipy.special import expit

from .fracdiff import pi_coeffs

__all__ = [
    "PARAM_NAMES",
    "ModelParams",
    "TransitionSpec",
    "VariancePath",
    "logistic_weight",
    "squared_return_threshold",
    "transition_values",
    "variance_path",
    "hygarch_variance_path",
]

PARAM_NAMES = ("a0", "a1", "a2", "b0", "b1", "b2", "d", "gamma")

LAGGED_RETURN = "lagged-return"
LAGGED_VARIANCE = "lagged-variance"
ASYM_AVG = "asym-avg"
FIXED_W = "fixed-w"
SPEC_KINDS = (LAGGED_RETURN, LAGGED_VARIANCE, ASYM_AVG, FIXED_W)


@dataclass(frozen=True)
class ModelParams:
    """Full parameter vector (a0, a1, a2, b0, b1, b2, d, gamma).

    Constraints checked at construction: a0, b0 > 0; a1, a2 >= 0;
    0 <= b2 <= b1 <= d <= 1; gamma >= 0.  The estimation theory wants
    a1, a2 strictly positive and d < 1; zero feedback values and the d = 1
    endpoint are accepted here because degenerate cases (pure intercepts,
    fully differenced h2) are legitimate inputs for the filter itself.
    b2 = 0 sits on the boundary of the stated constraint 0 < b2 but is
    standard practice (it drops the moving-average term of the FIGARCH
    component), so it is accepted with a warning.
    """

    a0: float
    a1: float
    a2: float
    b0: float
    b1: float
    b2: float
    d: float
    gamma: float = 0.0

    def __post_init__(self):
        vals = self.as_array()
        if not np.all(np.isfinite(vals)):
            raise ValueError(f"parameters must be finite, got {self}")
        if self.a0 <= 0.0:
            raise ValueError(f"a0 must be positive, got {self.a0}")
        if self.b0 <= 0.0:
            raise ValueError(f"b0 must be positive, got {self.b0}")
        if self.a1 < 0.0 or self.a2 < 0.0:
            raise ValueError(
                f"a1 and a2 must be nonnegative, got a1={self.a1}, a2={self.a2}"
            )
        if not 0.0 <= self.b2 <= self.b1 <= self.d <= 1.0:
            raise ValueError(
                "need 0 <= b2 <= b1 <= d <= 1, got "
                f"b2={self.b2}, b1={self.b1}, d={self.d}"
            )
        if self.gamma < 0.0:
            raise ValueError(f"gamma must be nonnegative, got {self.gamma}")
        if self.b2 == 0.0:
            warnings.warn(
                "b2 = 0 lies on the boundary of the constraint 0 < b2 <= b1; "
                "accepted (drops the FIGARCH moving-average term)",
                UserWarning,
                stacklevel=2,
            )

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.a0, self.a1, self.a2, self.b0, self.b1, self.b2, self.d, self.gamma]
        )

    @classmethod
    def from_array(cls, theta) -> "ModelParams":
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (8,):
            raise ValueError(f"expected 8 parameters, got shape {theta.shape}")
        return cls(*theta)


@dataclass(frozen=True)
class TransitionSpec:
    """Choice of transition variable z_t driving the logistic weight.

    kind
        "lagged-return"   z_t = y_{t-lag}
        "lagged-variance" z_t = h_{t-lag} (total variance from the path
                          being built, which keeps the filter causal)
        "asym-avg"        z_t = y_{t-1} when y_{t-1}^2 is below the given
                          percentile of squared returns, else the average
                          of the last three returns
        "fixed-w"         no transition variable; w_t is the constant
                          fixed_w (plain HYGARCH)
    """

    kind: str
    lag: int = 1
    percentile: float = 0.95
    fixed_w: float = 0.5

    def __post_init__(self):
        if self.kind not in SPEC_KINDS:
            raise ValueError(f"unknown transition kind {self.kind!r}; use one of {SPEC_KINDS}")
        if self.lag < 1:
            raise ValueError(f"lag must be >= 1, got {self.lag}")
        if not 0.0 < self.percentile < 1.0:
            raise ValueError(f"percentile must lie in (0, 1), got {self.percentile}")
        if not 0.0 <= self.fixed_w <= 1.0:
            raise ValueError(f"fixed_w must lie in [0, 1], got {self.fixed_w}")

    @classmethod
    def lagged_return(cls, lag: int = 1) -> "TransitionSpec":
        return cls(kind=LAGGED_RETURN, lag=lag)

    @classmethod
    def lagged_variance(cls, lag: int = 1) -> "TransitionSpec":
        return cls(kind=LAGGED_VARIANCE, lag=lag)

    @classmethod
    def asym_average(cls, percentile: float = 0.95) -> "TransitionSpec":
        return cls(kind=ASYM_AVG, percentile=percentile)

    @classmethod
    def fixed_weight(cls, w: float = 0.5) -> "TransitionSpec":
        return cls(kind=FIXED_W, fixed_w=w)


@dataclass
class VariancePath:
    """Filter output: h_t = (1 - w_t) h1_t + w_t h2_t along with the pieces.

    Also records the conventions the path was computed under (presample
    value, component seeds, asym-avg threshold, truncation length) so a
    forecast can be continued without re-deriving them.
    """

    h: np.ndarray
    h1: np.ndarray
    h2: np.ndarray
    w: np.ndarray
    z: np.ndarray
    presample: float
    h1_init: float
    h2_init: float
    h_init: float
    threshold: float | None
    k_max: int


def logistic_weight(gamma, z):
    """w = exp(-gamma z)/(1 + exp(-gamma z)), overflow-safe.

    Evaluated as the logistic sigmoid at -gamma*z, which uses
    1/(1 + exp(gamma z)) on the branch where exp(-gamma z) would overflow.
    Decreasing in z for gamma > 0; identically 1/2 at gamma = 0.
    """
    gamma = float(gamma)
    if not gamma >= 0.0:
        raise ValueError(f"gamma must be nonnegative, got {gamma}")
    z = np.asarray(z, dtype=float)
    out = expit(-gamma * z)
    return float(out) if out.ndim == 0 else out


def _logistic_scalar(gz: float) -> float:
    # logistic at -gz for scalar arguments (hot loop helper); both branches
    # exponentiate a nonpositive argument, so neither can overflow
    if gz >= 0.0:
        e = math.exp(-gz)
        return e / (1.0 + e)
    return 1.0 / (1.0 + math.exp(gz))


def squared_return_threshold(y, percentile: float = 0.95) -> float:
    """Percentile of the squared returns, the asym-avg branch threshold."""
    return float(np.percentile(np.square(np.asarray(y, dtype=float)), 100.0 * percentile))


def transition_values(spec: TransitionSpec, y, h=None, *, h_init: float = 0.0,
                      threshold: float | None = None) -> np.ndarray:
    """Transition-variable series z_1..z_S for a given spec.

    Presample values (indices reaching before the first observation) are
    zero for return-based specs and `h_init` for the lagged-variance spec,
    which needs the completed variance path `h`.
    """
    y = np.asarray(y, dtype=float)
    S = y.size
    if spec.kind == LAGGED_RETURN:
        z = np.zeros(S)
        z[spec.lag:] = y[: S - spec.lag]
        return z
    if spec.kind == LAGGED_VARIANCE:
        if h is None:
            raise ValueError("lagged-variance transition needs the variance path h")
        h = np.asarray(h, dtype=float)
        z = np.full(S, float(h_init))
        z[spec.lag:] = h[: S - spec.lag]
        return z
    if spec.kind == ASYM_AVG:
        if threshold is None:
            threshold = squared_return_threshold(y, spec.percentile)
        ypad = np.concatenate([np.zeros(3), y])
        y1 = ypad[2 : 2 + S]
        calm = np.square(y1) < threshold
        avg3 = (y1 + ypad[1 : 1 + S] + ypad[:S]) / 3.0
        return np.where(calm, y1, avg3)
    return np.zeros(S)


def _figarch_lag_weights(b1: float, b2: float, pi: np.ndarray) -> np.ndarray:
    """Distributed-lag weights c_1..c_{k+1} of the expanded FIGARCH bracket."""
    k = pi.shape[0]
    c = np.empty(k + 1)
    c[0] = b2 - b1 + pi[0]
    if k > 1:
        c[1:k] = pi[1:] - b2 * pi[:-1]
    c[k] = -b2 * pi[k - 1]
    return c


class _FilterState(NamedTuple):
    """Intermediate arrays shared with the gradient recursions."""

    y2: np.ndarray       # y_t^2
    ext: np.ndarray      # presample padding (length k_max+1) followed by y2
    y2lag: np.ndarray    # y_{t-1}^2 with presample at t=1
    lagsum: np.ndarray   # sum_j c_j y_{t-j}^2
    pi: np.ndarray
    c: np.ndarray


def _filter(params: ModelParams, spec: TransitionSpec, y: np.ndarray, k_max: int,
            presample: float, h1_init: float, h2_init: float, h_init: float,
            threshold: float | None):
    """Run the full filter; returns (VariancePath, _FilterState).

    Does not check positivity of the output.  Under the ordering constraint
    0 <= b2 <= b1 <= d the expanded lag weights keep h2 positive for any
    nonnegative data and seeds (that is what the constraint is for), so the
    public wrapper's positivity check is a defensive guard against corrupt
    seeds or numeric overflow rather than a reachable state for feasible
    inputs.
    """
    S = y.size
    y2 = np.square(y)
    P = k_max + 1
    ext = np.concatenate([np.full(P, presample), y2])
    pi = pi_coeffs(params.d, k_max).pi
    c = _figarch_lag_weights(params.b1, params.b2, pi)
    lagsum = signal.convolve(ext, c)[P - 1 : P - 1 + S]
    y2lag = ext[P - 1 : P - 1 + S]

    h1 = signal.lfilter(
        [1.0], [1.0, -params.a1], params.a0 + params.a2 * y2lag,
        zi=np.array([params.a1 * h1_init]),
    )[0]
    h2 = signal.lfilter(
        [1.0], [1.0, -params.b1], params.b0 + lagsum,
        zi=np.array([params.b1 * h2_init]),
    )[0]

    g = params.gamma
    if spec.kind == FIXED_W:
        z = np.zeros(S)
        w = np.full(S, spec.fixed_w)
        h = (1.0 - w) * h1 + w * h2
    elif g == 0.0:
        w = np.full(S, 0.5)
        h = (h1 + h2) / 2.0
        z = transition_values(spec, y, h=h, h_init=h_init, threshold=threshold)
    elif spec.kind == LAGGED_VARIANCE:
        # self-referential: w_t needs h_{t-lag}, so this one runs stepwise
        lag = spec.lag
        z = np.empty(S)
        w = np.empty(S)
        h = np.empty(S)
        for i in range(S):
            zi = h[i - lag] if i >= lag else h_init
            wi = _logistic_scalar(g * zi)
            z[i] = zi
            w[i] = wi
            h[i] = (1.0 - wi) * h1[i] + wi * h2[i]
    else:
        z = transition_values(spec, y, threshold=threshold)
        w = expit(-g * z)
        h = (1.0 - w) * h1 + w * h2

    path = VariancePath(
        h=h, h1=h1, h2=h2, w=w, z=z,
        presample=presample, h1_init=h1_init, h2_init=h2_init, h_init=h_init,
        threshold=threshold, k_max=k_max,
    )
    return path, _FilterState(y2=y2, ext=ext, y2lag=y2lag, lagsum=lagsum, pi=pi, c=c)


def _resolve_conventions(y, spec, presample, h1_init, h2_init, h_init, threshold):
    y = np.ascontiguousarray(y, dtype=float)
    if y.size == 0:
        raise ValueError("return series is empty")
    if presample is None:
        presample = float(np.mean(np.square(y)))
    if h1_init is None:
        h1_init = presample
    if h2_init is None:
        h2_init = presample
    if h_init is None:
        h_init = 0.5 * (h1_init + h2_init)
    if threshold is None and spec.kind == ASYM_AVG:
        threshold = squared_return_threshold(y, spec.percentile)
    return y, float(presample), float(h1_init), float(h2_init), float(h_init), threshold


def variance_path(params: ModelParams, spec: TransitionSpec, y, k_max: int = 1000, *,
                  presample: float | None = None, h1_init: float | None = None,
                  h2_init: float | None = None, h_init: float | None = None,
                  threshold: float | None = None) -> VariancePath:
    """Conditional-variance path h_1..h_S for observed returns y_1..y_S.

    Parameters
    ----------
    params : ModelParams
    spec : TransitionSpec
    y : array_like
        Observed returns.
    k_max : int
        Truncation length for the fractional-differencing expansion.
    presample : float, optional
        Stand-in for squared returns before the sample.  Defaults to
        mean(y**2), the usual estimation convention; simulation-style
        continuation passes 0.
    h1_init, h2_init : float, optional
        Component seeds h1_0, h2_0; default is the presample value.
    h_init : float, optional
        Seed for the total variance, used by the lagged-variance
        transition when t - lag reaches before the sample.  Defaults to
        the midpoint of the component seeds.
    threshold : float, optional
        Asym-avg percentile threshold; defaults to the percentile of the
        squared returns of `y` itself.  Pass a frozen value when
        filtering out-of-sample.

    Raises
    ------
    ValueError
        On an empty series or when the expanded FIGARCH weights drive the
        variance nonpositive for these parameters.
    """
    y, presample, h1_init, h2_init, h_init, threshold = _resolve_conventions(
        y, spec, presample, h1_init, h2_init, h_init, threshold
    )
    path, _ = _filter(params, spec, y, int(k_max), presample, h1_init, h2_init,
                      h_init, threshold)
    hmin = float(np.min(path.h2))
    if not np.isfinite(hmin) or hmin <= 0.0:
        raise ValueError(
            f"nonpositive FIGARCH component (min h2 = {hmin:.3g}): the expanded "
            "lag weights are not all positivity-preserving at these parameters"
        )
    return path


def hygarch_variance_path(params: ModelParams, w: float, y, k_max: int = 1000,
                          **conventions) -> VariancePath:
    """Constant-weight path h_t = (1 - w) h1_t + w h2_t (plain HYGARCH).

    Equivalent to `variance_path` with a FixedWeight transition; gamma in
    `params` is ignored.
    """
    return variance_path(params, TransitionSpec.fixed_weight(w), y, k_max, **conventions)
