"""Path simulation for Monte Carlo studies.

Draws iid standard-normal innovations from numpy's PCG64 generator (the
`default_rng` bit stream; `Generator.standard_normal` uses the ziggurat
transform), runs the variance recursions forward step by step with
y_t = sqrt(h_t) * eps_t, and discards a burn-in prefix.

Initialization during simulation differs from estimation on purpose:
presample squared returns are zero (no data exists yet), the component
seeds are the intercepts h1_0 = a0 and h2_0 = b0, and the burn-in absorbs
all of it.  The asym-avg transition has no full-sample percentile to lean
on while the path is being generated, so it uses an expanding-window
percentile recomputed every 500 steps (before the first recomputation the
threshold is +inf, i.e. the calm branch).

Replication seeding: child streams for replication grids come from
`child_seed(master_seed, *indices)`, which builds
`SeedSequence(master_seed, spawn_key=indices)`.  Distinct index tuples give
independent streams and the mapping is documented, stable, and
order-independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fracdiff import pi_coeffs
from .model import (
    ASYM_AVG,
    FIXED_W,
    LAGGED_RETURN,
    LAGGED_VARIANCE,
    ModelParams,
    TransitionSpec,
    _figarch_lag_weights,
    _logistic_scalar,
)

__all__ = ["SimConfig", "SimResult", "simulate", "simulate_path", "child_seed"]

_THRESHOLD_REFRESH = 500


@dataclass(frozen=True)
class SimConfig:
    params: ModelParams
    spec: TransitionSpec = field(default_factory=TransitionSpec.lagged_return)
    n: int = 1000
    burn_in: int = 1000
    seed: int = 0
    k_max: int = 1000

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.burn_in < 0:
            raise ValueError(f"burn_in must be >= 0, got {self.burn_in}")


@dataclass
class SimResult:
    """Simulated returns with the variance path that generated them
    (burn-in already discarded)."""

    y: np.ndarray
    h: np.ndarray
    h1: np.ndarray
    h2: np.ndarray
    w: np.ndarray
    z: np.ndarray


def child_seed(master_seed: int, *indices: int) -> np.random.SeedSequence:
    """Independent, reproducible seed stream for a replication index tuple."""
    return np.random.SeedSequence(master_seed, spawn_key=tuple(int(i) for i in indices))


def simulate_path(params: ModelParams, spec: TransitionSpec, n: int, burn_in: int,
                  rng: np.random.Generator, k_max: int = 1000) -> SimResult:
    """Generate burn_in + n steps and return the final n."""
    total = int(burn_in) + int(n)
    P = int(k_max) + 1
    pi = pi_coeffs(params.d, k_max).pi
    c_rev = np.ascontiguousarray(_figarch_lag_weights(params.b1, params.b2, pi)[::-1])
    eps = rng.standard_normal(total)

    ext = np.zeros(P + total)  # squared returns, zero before the stream starts
    y = np.empty(total)
    h = np.empty(total)
    h1 = np.empty(total)
    h2 = np.empty(total)
    w = np.empty(total)
    z = np.empty(total)

    a0, a1, a2 = params.a0, params.a1, params.a2
    b0, b1 = params.b0, params.b1
    g = params.gamma
    kind = spec.kind
    lag = spec.lag
    fixed_w = spec.fixed_w
    h1_prev = a0
    h2_prev = b0
    h_seed = 0.5 * (a0 + b0)
    threshold = math.inf  # asym-avg, before the first expanding-window estimate

    for i in range(total):
        h1_t = a0 + a1 * h1_prev + a2 * ext[P + i - 1]
        h2_t = b0 + b1 * h2_prev + float(np.dot(c_rev, ext[i : i + P]))

        if kind == FIXED_W:
            zt = 0.0
            wt = fixed_w
        else:
            if kind == LAGGED_RETURN:
                zt = y[i - lag] if i >= lag else 0.0
            elif kind == LAGGED_VARIANCE:
                zt = h[i - lag] if i >= lag else h_seed
            else:  # asym-avg
                if i >= _THRESHOLD_REFRESH and i % _THRESHOLD_REFRESH == 0:
                    threshold = float(
                        np.percentile(ext[P : P + i], 100.0 * spec.percentile)
                    )
                y1 = y[i - 1] if i >= 1 else 0.0
                if y1 * y1 < threshold:
                    zt = y1
                else:
                    y2v = y[i - 2] if i >= 2 else 0.0
                    y3v = y[i - 3] if i >= 3 else 0.0
                    zt = (y1 + y2v + y3v) / 3.0
            wt = _logistic_scalar(g * zt)

        ht = (1.0 - wt) * h1_t + wt * h2_t
        yt = math.sqrt(ht) * eps[i] if ht > 0.0 else math.nan
        z[i] = zt
        w[i] = wt
        h1[i] = h1_t
        h2[i] = h2_t
        h[i] = ht
        y[i] = yt
        ext[P + i] = yt * yt
        h1_prev = h1_t
        h2_prev = h2_t

    s = slice(burn_in, total)
    return SimResult(y=y[s], h=h[s], h1=h1[s], h2=h2[s], w=w[s], z=z[s])


def simulate(config: SimConfig) -> SimResult:
    """Simulate per config; deterministic given config.seed."""
    rng = np.random.default_rng(config.seed)
    return simulate_path(config.params, config.spec, config.n, config.burn_in,
                         rng, config.k_max)
