"""Monte Carlo studies: estimation bias/RMSE and score-test size/power.

Seeding uses common random numbers: replication r draws its innovations
from child_seed(master_seed, r) in every cell of a study, so the cells
for different sample lengths or transition slopes see the same shocks.
Per-cell marginal distributions are untouched while cross-cell
comparisons (trends over n or gamma) are variance-reduced; the sample
lengths even nest, since the generator emits normals sequentially and a
shorter run is a prefix of a longer one.

Replications can run on a bounded worker pool; aggregation collects
results in replication order either way, so output is independent of
worker count.
"""

from __future__ import annotations

import dataclasses
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .estimate import fit
from .model import ModelParams, TransitionSpec
from .scoretest import chi2_1_pvalue, score_test
from .simulate import child_seed, simulate_path

__all__ = ["ExperimentConfig", "EstimationStudyResult", "SizePowerStudyResult",
           "study_series", "run_estimation_study", "run_size_power_study"]

_TABLES = ("estimation", "size-power")
# every study filters and fits with the lagged-return transition; the
# asymmetry and variance readings are exercised elsewhere
_STUDY_SPEC = TransitionSpec.lagged_return()


@dataclass(frozen=True)
class ExperimentConfig:
    """Settings for one study run; every number in the output is a pure
    function of this object."""

    table: str
    n_values: tuple[int, ...]
    replications: int
    theta: ModelParams
    gamma_grid: tuple[float, ...] = ()
    levels: tuple[float, ...] = (0.05, 0.10)
    master_seed: int = 0
    k_max: int = 1000
    burn_in: int = 500
    fix_b2: float | None = 0.0
    multistart: int = 3
    workers: int = 1

    def __post_init__(self):
        if self.table not in _TABLES:
            raise ValueError(f"table must be one of {_TABLES}, got "
                             f"{self.table!r}")
        object.__setattr__(self, "n_values", tuple(int(n) for n in self.n_values))
        object.__setattr__(self, "gamma_grid",
                           tuple(float(g) for g in self.gamma_grid))
        object.__setattr__(self, "levels", tuple(float(v) for v in self.levels))
        if not self.n_values:
            raise ValueError("n_values must be non-empty")
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        if not all(0.0 < v < 1.0 for v in self.levels):
            raise ValueError("levels must lie strictly inside (0, 1)")
        if self.table == "estimation" and self.gamma_grid:
            raise ValueError("gamma_grid applies to the size-power table only")
        if self.table == "size-power" and not self.gamma_grid:
            raise ValueError("size-power table needs a gamma_grid")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")

    def _meta_lines(self) -> list[str]:
        return [
            f"# table={self.table}",
            f"# theta={','.join(f'{v:.10g}' for v in self.theta.as_array())}",
            f"# n_values={','.join(map(str, self.n_values))}"
            + (f" gamma_grid={','.join(f'{g:g}' for g in self.gamma_grid)}"
               if self.gamma_grid else ""),
            f"# replications={self.replications} master_seed={self.master_seed}"
            f" k_max={self.k_max} burn_in={self.burn_in}"
            f" fix_b2={'free' if self.fix_b2 is None else f'{self.fix_b2:g}'}"
            f" multistart={self.multistart}",
        ]


def study_series(theta: ModelParams, n: int, burn_in: int, master_seed: int,
                 rep: int, k_max: int) -> np.ndarray:
    """The returns replication `rep` sees in a cell of length n."""
    rng = np.random.default_rng(child_seed(master_seed, rep))
    return simulate_path(theta, _STUDY_SPEC, n, burn_in, rng, k_max=k_max).y


def _map_reps(worker, args_list, workers: int):
    if workers == 1:
        return [worker(a) for a in args_list]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(worker, args_list, chunksize=8))


# ---------------------------------------------------------------- estimation

_ESTIMATION_PARAMS = ("a0", "a1", "a2", "b0", "b1", "b2", "d", "gamma")


def _estimation_rep(args):
    config, n, rep = args
    y = study_series(config.theta, n, config.burn_in, config.master_seed,
                     rep, config.k_max)
    try:
        fr = fit(y, _STUDY_SPEC, "full", k_max=config.k_max,
                 fix_b2=config.fix_b2, multistart=config.multistart)
    except (ValueError, RuntimeError, np.linalg.LinAlgError):
        return None
    return fr.params.as_array()


@dataclass
class EstimationStudyResult:
    config: ExperimentConfig
    param_names: tuple[str, ...]
    estimates: dict[int, np.ndarray]    # n -> (valid reps, 8) estimate rows
    failures: dict[int, int]

    def bias(self, n: int) -> np.ndarray:
        return np.mean(self.estimates[n] - self.config.theta.as_array(), axis=0)

    def rmse(self, n: int) -> np.ndarray:
        err = self.estimates[n] - self.config.theta.as_array()
        return np.sqrt(np.mean(err ** 2, axis=0))

    def free_parameters(self) -> list[int]:
        """Indices of parameters the fits actually estimated."""
        idx = list(range(len(self.param_names)))
        if self.config.fix_b2 is not None:
            idx.remove(self.param_names.index("b2"))
        return idx

    def to_csv(self) -> str:
        out = io.StringIO()
        for line in self.config._meta_lines():
            out.write(line + "\n")
        out.write("# failures " + " ".join(
            f"n{n}={self.failures[n]}" for n in self.config.n_values) + "\n")
        cols = ["param"]
        for n in self.config.n_values:
            cols += [f"bias_n{n}", f"rmse_n{n}"]
        out.write(",".join(cols) + "\n")
        biases = {n: self.bias(n) for n in self.config.n_values}
        rmses = {n: self.rmse(n) for n in self.config.n_values}
        for i in self.free_parameters():
            cells = [self.param_names[i]]
            for n in self.config.n_values:
                cells += [f"{biases[n][i]:.6f}", f"{rmses[n][i]:.6f}"]
            out.write(",".join(cells) + "\n")
        return out.getvalue()


def run_estimation_study(config: ExperimentConfig) -> EstimationStudyResult:
    """Bias and RMSE of the full-model MLE across sample lengths.

    Every replication is fit; fits that raise are counted per cell and
    excluded from the averages.
    """
    if config.table != "estimation":
        raise ValueError("config.table must be 'estimation'")
    estimates: dict[int, np.ndarray] = {}
    failures: dict[int, int] = {}
    for n in config.n_values:
        args = [(config, n, rep) for rep in range(config.replications)]
        rows = _map_reps(_estimation_rep, args, config.workers)
        good = [r for r in rows if r is not None]
        failures[n] = len(rows) - len(good)
        if not good:
            raise RuntimeError(f"every fit failed in the n={n} cell")
        estimates[n] = np.vstack(good)
    return EstimationStudyResult(config=config,
                                 param_names=_ESTIMATION_PARAMS,
                                 estimates=estimates, failures=failures)


# ---------------------------------------------------------------- size-power

def _sizepower_rep(args):
    config, gamma, n, rep = args
    theta = dataclasses.replace(config.theta, gamma=gamma)
    y = study_series(theta, n, config.burn_in, config.master_seed, rep,
                     config.k_max)
    try:
        res = score_test(y, _STUDY_SPEC, k_max=config.k_max,
                         fix_b2=config.fix_b2, multistart=config.multistart)
    except (ValueError, RuntimeError, np.linalg.LinAlgError):
        return np.nan
    return res.psi_s   # NaN when degenerate


@dataclass
class SizePowerStudyResult:
    config: ExperimentConfig
    psi: dict[tuple[float, int], np.ndarray]   # (gamma, n) -> statistic per rep

    def valid(self, gamma: float, n: int) -> np.ndarray:
        stats = self.psi[(gamma, n)]
        return stats[np.isfinite(stats)]

    def failures(self, gamma: float, n: int) -> int:
        stats = self.psi[(gamma, n)]
        return int(np.sum(~np.isfinite(stats)))

    def rejection_rate(self, gamma: float, n: int, level: float) -> float:
        stats = self.valid(gamma, n)
        if stats.size == 0:
            return np.nan
        return float(np.mean(chi2_1_pvalue(stats) < level))

    def to_csv(self) -> str:
        out = io.StringIO()
        for line in self.config._meta_lines():
            out.write(line + "\n")
        cols = ["gamma"]
        for n in self.config.n_values:
            cols += [f"rate_n{n}_l{lvl:g}" for lvl in self.config.levels]
            cols += [f"failures_n{n}"]
        out.write(",".join(cols) + "\n")
        for g in self.config.gamma_grid:
            cells = [f"{g:g}"]
            for n in self.config.n_values:
                cells += [f"{self.rejection_rate(g, n, lvl):.4f}"
                          for lvl in self.config.levels]
                cells += [str(self.failures(g, n))]
            out.write(",".join(cells) + "\n")
        return out.getvalue()


def run_size_power_study(config: ExperimentConfig) -> SizePowerStudyResult:
    """Empirical rejection rates of the transition score test.

    Each replication simulates at the grid's gamma, fits the constant
    weight null, and evaluates the statistic; degenerate or failed
    evaluations are NaN and sit out of the rate denominators.
    """
    if config.table != "size-power":
        raise ValueError("config.table must be 'size-power'")
    psi: dict[tuple[float, int], np.ndarray] = {}
    for g in config.gamma_grid:
        for n in config.n_values:
            args = [(config, g, n, rep) for rep in range(config.replications)]
            vals = _map_reps(_sizepower_rep, args, config.workers)
            psi[(g, n)] = np.asarray(vals, dtype=float)
    return SizePowerStudyResult(config=config, psi=psi)
