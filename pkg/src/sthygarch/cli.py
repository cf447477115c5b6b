"""Command-line interface.

Every subcommand is deterministic given its flags: seeds drive all
randomness, machine-readable outputs carry their configuration in `#`
comment headers, and nothing time- or host-dependent is emitted.  Exit
codes: 0 success (for `stability`, certified stable), 1 not certified
stable, 2 any error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .data import load_returns
from .estimate import fit
from .evaluate import backtest, descriptive_stats
from .experiments import (ExperimentConfig, run_estimation_study,
                          run_size_power_study)
from .model import ModelParams, TransitionSpec
from .scoretest import score_test
from .simulate import SimConfig, simulate
from .stability import check_stability

_DEFAULT_THETA = dict(a0=0.35, a1=0.30, a2=0.40, b0=0.10, b1=0.20, b2=0.0,
                      d=0.60, gamma=1.5)
_SPEC_CHOICES = ("lagged-return", "lagged-variance", "asym-avg", "fixed-w")


def _g(x) -> str:
    return f"{float(x):.10g}"


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _make_spec(args) -> TransitionSpec:
    kind = args.spec
    if kind == "lagged-return":
        return TransitionSpec.lagged_return(args.lag)
    if kind == "lagged-variance":
        return TransitionSpec.lagged_variance(args.lag)
    if kind == "asym-avg":
        return TransitionSpec.asym_average()
    return TransitionSpec.fixed_weight(args.w)


def _make_theta(args) -> ModelParams:
    return ModelParams(**{k: getattr(args, k) for k in _DEFAULT_THETA})


def _load_series(args) -> np.ndarray:
    column = args.column
    if column is not None and column.isdigit():
        column = int(column)
    return load_returns(args.data, column=column, prices=args.prices)


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(","))


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(","))


def _spec_meta(args) -> str:
    extra = ""
    if args.spec in ("lagged-return", "lagged-variance"):
        extra = f" lag={args.lag}"
    elif args.spec == "fixed-w":
        extra = f" w={_g(args.w)}"
    return f"spec={args.spec}{extra}"


def _name_value_block(meta: str, pairs) -> str:
    lines = [meta, "name,value"]
    for name, value in pairs:
        lines.append(f"{name},{value}")
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------- subcommands

def _cmd_simulate(args) -> int:
    theta = _make_theta(args)
    sim = simulate(SimConfig(params=theta, spec=_make_spec(args), n=args.n,
                             burn_in=args.burn, seed=args.seed,
                             k_max=args.kmax))
    lines = [
        f"# command=simulate n={args.n} burn={args.burn} seed={args.seed} "
        f"kmax={args.kmax} {_spec_meta(args)}",
        "# theta=" + ",".join(_g(v) for v in theta.as_array()),
        "t,y,h,w",
    ]
    for t in range(args.n):
        lines.append(f"{t + 1},{_g(sim.y[t])},{_g(sim.h[t])},"
                     f"{_g(sim.w[t])}")
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_fit(args) -> int:
    y = _load_series(args)
    spec = _make_spec(args)
    fr = fit(y, spec, args.kind, k_max=args.kmax, fix_b2=args.fix_b2,
             multistart=args.multistart)
    meta = (f"# command=fit data={args.data} kind={args.kind} "
            f"{_spec_meta(args)} kmax={args.kmax} "
            f"fix_b2={'free' if args.fix_b2 is None else _g(args.fix_b2)} "
            f"multistart={args.multistart}")
    names = ("a0", "a1", "a2", "b0", "b1", "b2", "d", "gamma")
    est = fr.params.as_array()
    if args.format == "csv":
        pairs = [(n, _g(v)) for n, v in zip(names, est)]
        if fr.w is not None:
            pairs.append(("w", _g(fr.w)))
        if fr.threshold is not None:
            pairs.append(("threshold", _g(fr.threshold)))
        pairs += [("loglik", _g(fr.loglik)),
                  ("loglik_per_obs", _g(fr.loglik_per_obs)),
                  ("grad_norm", _g(fr.grad_norm)),
                  ("n_obs", str(fr.n_obs)),
                  ("n_iter", str(fr.n_iter)),
                  ("converged", str(int(fr.converged)))]
        _emit(_name_value_block(meta, pairs), args.out)
        return 0
    lines = [f"fit: kind={args.kind} {_spec_meta(args)} n={fr.n_obs} "
             f"kmax={args.kmax}",
             f"converged: {'yes' if fr.converged else 'NO'} "
             f"(grad {fr.grad_norm:.3e}, {fr.n_iter} iterations)",
             f"loglik: {fr.loglik:.6f}  (per obs {fr.loglik_per_obs:.6f})"]
    for n, v in zip(names, est):
        lines.append(f"  {n:<6}= {v: .8f}")
    if fr.w is not None:
        lines.append(f"  {'w':<6}= {fr.w: .8f}")
    if fr.threshold is not None:
        lines.append(f"  threshold = {fr.threshold:.8f}")
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_score_test(args) -> int:
    y = _load_series(args)
    spec = _make_spec(args)
    res = score_test(y, spec, k_max=args.kmax, fix_b2=args.fix_b2,
                     multistart=args.multistart)
    meta = (f"# command=score-test data={args.data} {_spec_meta(args)} "
            f"kmax={args.kmax} "
            f"fix_b2={'free' if args.fix_b2 is None else _g(args.fix_b2)} "
            f"multistart={args.multistart}")
    if args.format == "csv":
        pairs = [("psi_s", _g(res.psi_s) if np.isfinite(res.psi_s) else ""),
                 ("p_value", "" if res.p_value is None else _g(res.p_value)),
                 ("S", _g(res.S)), ("kappa", _g(res.kappa)),
                 ("Q", _g(res.Q)), ("schur", _g(res.schur)),
                 ("cond_J", _g(res.cond_J)),
                 ("degenerate", str(int(res.degenerate))),
                 ("n_obs", str(res.n_obs))]
        _emit(_name_value_block(meta, pairs), args.out)
        return 0
    lines = [f"score test for a moving transition weight: "
             f"{_spec_meta(args)} n={res.n_obs}"]
    if res.degenerate:
        lines.append(f"degenerate information (cond(J) = {res.cond_J:.3e}, "
                     f"schur = {res.schur:.3e}); no statistic")
    else:
        lines.append(f"psi_s = {res.psi_s:.6f}")
        lines.append(f"p_value = {res.p_value:.6f}")
        verdict = ("reject constant weight at the 5% level"
                   if res.p_value < 0.05 else
                   "no evidence against a constant weight at the 5% level")
        lines.append(verdict)
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_stability(args) -> int:
    theta = _make_theta(args)
    rep = check_stability(theta, k_max=args.tail_kmax)
    if args.format == "csv":
        pairs = [("rho", _g(rep.rho)), ("stable", str(int(rep.stable))),
                 ("tail_sum", _g(rep.tail_sum))]
        for i in range(4):
            for j in range(4):
                pairs.append((f"c{i}{j}", _g(rep.C[i, j])))
        for i in range(4):
            pairs.append((f"bound{i}", "" if rep.bound is None
                          else _g(rep.bound[i])))
        meta = ("# command=stability theta="
                + ",".join(_g(v) for v in theta.as_array())
                + f" tail_kmax={args.tail_kmax}")
        _emit(_name_value_block(meta, pairs), args.out)
    else:
        lines = [f"spectral radius rho = {rep.rho:.10f}",
                 f"tail_sum = {_g(rep.tail_sum)}",
                 "certified stable" if rep.stable else
                 "not certified stable (rho >= 1; the envelope is one-sided)"]
        if rep.bound is not None:
            lines.append("limit bound: "
                         + ", ".join(_g(v) for v in rep.bound))
        _emit("\n".join(lines) + "\n", args.out)
    return 0 if rep.stable else 1


def _cmd_backtest(args) -> int:
    y = _load_series(args)
    specs, kinds = [], []
    for token in args.models.split(","):
        kind, _, spec_name = token.partition(":")
        if not spec_name or kind not in ("full", "null", "hygarch") \
                or spec_name not in _SPEC_CHOICES:
            raise ValueError(f"bad model token {token!r}; expected "
                             "kind:spec like full:lagged-return")
        kinds.append(kind)
        specs.append({"lagged-return": TransitionSpec.lagged_return,
                      "lagged-variance": TransitionSpec.lagged_variance,
                      "asym-avg": TransitionSpec.asym_average,
                      "fixed-w": TransitionSpec.fixed_weight}[spec_name]())
    reports = backtest(y, args.split, specs, kinds, k_max=args.kmax,
                       fix_b2=args.fix_b2, multistart=args.multistart)
    meta = (f"# command=backtest data={args.data} split={args.split} "
            f"kmax={args.kmax} models={args.models} "
            f"fix_b2={'free' if args.fix_b2 is None else _g(args.fix_b2)} "
            f"multistart={args.multistart}")
    if args.format == "csv":
        lines = [meta, "model,rmse_in,rmse_out,llv_in,llv_out,converged,error"]
        for r in reports:
            if r.failed:
                err = r.error.replace(",", ";").replace("\n", " ")
                lines.append(f"{r.label},,,,,,{err}")
            else:
                lines.append(f"{r.label},{_g(r.rmse_in)},{_g(r.rmse_out)},"
                             f"{_g(r.llv_in)},{_g(r.llv_out)},"
                             f"{int(r.converged)},")
        _emit("\n".join(lines) + "\n", args.out)
    else:
        lines = [f"backtest: {reports[0].n_in} in-sample / "
                 f"{reports[0].n_out} out-of-sample",
                 f"{'model':<26}{'rmse_in':>10}{'rmse_out':>10}"
                 f"{'llv_in':>12}{'llv_out':>12}"]
        for r in reports:
            if r.failed:
                lines.append(f"{r.label:<26}failed: {r.error}")
            else:
                mark = "" if r.converged else "  [not converged]"
                lines.append(f"{r.label:<26}{r.rmse_in:>10.4f}"
                             f"{r.rmse_out:>10.4f}{r.llv_in:>12.2f}"
                             f"{r.llv_out:>12.2f}{mark}")
        _emit("\n".join(lines) + "\n", args.out)
    if args.forecasts:
        sq = y ** 2
        for r in reports:
            if r.failed:
                continue
            rows = [f"# model={r.label} split={args.split}",
                    "t,y_squared,forecast,abs_error"]
            for t in range(y.size):
                f = r.forecasts[t]
                rows.append(f"{t + 1},{_g(sq[t])},{_g(f)},"
                            f"{_g(abs(f - sq[t]))}")
            name = f"{args.forecasts}{r.label.replace(':', '-')}.csv"
            Path(name).write_text("\n".join(rows) + "\n")
    return 0


def _cmd_study(args) -> int:
    common = dict(n_values=_ints(args.n_values), replications=args.reps,
                  theta=_make_theta(args), levels=_floats(args.levels),
                  master_seed=args.seed, k_max=args.kmax, burn_in=args.burn,
                  fix_b2=args.fix_b2, multistart=args.multistart,
                  workers=args.workers)
    if args.which == "table1":
        result = run_estimation_study(
            ExperimentConfig(table="estimation", **common))
    else:
        result = run_size_power_study(
            ExperimentConfig(table="size-power",
                             gamma_grid=_floats(args.gammas), **common))
    _emit(result.to_csv(), args.out)
    return 0


def _cmd_stats(args) -> int:
    y = _load_series(args)
    st = descriptive_stats(y, excess=args.excess)
    pairs = [("n", str(y.size)), ("mean", _g(st.mean)), ("std", _g(st.std)),
             ("min", _g(st.min)), ("max", _g(st.max)),
             ("skewness", _g(st.skewness)),
             ("kurtosis", _g(st.kurtosis))]
    if args.format == "csv":
        meta = (f"# command=stats data={args.data} "
                f"kurtosis={'excess' if args.excess else 'raw'}")
        _emit(_name_value_block(meta, pairs), args.out)
    else:
        label = "excess kurtosis" if args.excess else "kurtosis (raw)"
        pairs[-1] = (label, pairs[-1][1])
        width = max(len(n) for n, _ in pairs)
        _emit("".join(f"{n:<{width + 2}}{v}\n" for n, v in pairs), args.out)
    return 0


# ------------------------------------------------------------------ parser

def _add_output_flags(p, formats=True):
    p.add_argument("--out", help="write output to this path instead of stdout")
    if formats:
        p.add_argument("--format", choices=("text", "csv"), default="text")


def _add_data_flags(p):
    p.add_argument("--data", required=True, help="CSV file with a header row")
    p.add_argument("--column", help="column name (or position if digits)")
    p.add_argument("--prices", action="store_true",
                   help="treat the column as price levels and take "
                        "100*diff(log)")


def _add_spec_flags(p):
    p.add_argument("--spec", choices=_SPEC_CHOICES, default="lagged-return",
                   help="transition variable driving the weight")
    p.add_argument("--lag", type=int, default=1)
    p.add_argument("--w", type=float, default=0.5,
                   help="constant weight for spec=fixed-w")


def _add_theta_flags(p):
    for name, default in _DEFAULT_THETA.items():
        p.add_argument(f"--{name}", type=float, default=default)


def _add_fit_flags(p):
    p.add_argument("--fix-b2", type=float, default=None, dest="fix_b2",
                   help="pin b2 at this value instead of estimating it")
    p.add_argument("--multistart", type=int, default=5)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sthygarch",
        description="Smooth-transition long-memory volatility toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate returns from the model")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--burn", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--kmax", type=int, default=1000)
    _add_spec_flags(p)
    _add_theta_flags(p)
    _add_output_flags(p, formats=False)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("fit", help="maximum-likelihood fit")
    _add_data_flags(p)
    _add_spec_flags(p)
    p.add_argument("--kind", choices=("full", "null", "hygarch"),
                   default="full")
    p.add_argument("--kmax", type=int, default=1000)
    _add_fit_flags(p)
    _add_output_flags(p)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("score-test",
                       help="test a constant weight against a moving one")
    _add_data_flags(p)
    _add_spec_flags(p)
    p.add_argument("--kmax", type=int, default=1000)
    _add_fit_flags(p)
    _add_output_flags(p)
    p.set_defaults(func=_cmd_score_test)

    p = sub.add_parser("stability",
                       help="companion-matrix radius and limit bound")
    _add_theta_flags(p)
    p.add_argument("--tail-kmax", type=int, default=100_000,
                   dest="tail_kmax")
    _add_output_flags(p)
    p.set_defaults(func=_cmd_stability)

    p = sub.add_parser("backtest",
                       help="fit on a prefix, forecast the rest, compare")
    _add_data_flags(p)
    p.add_argument("--split", type=int, required=True,
                   help="in-sample length")
    p.add_argument("--models", default="full:lagged-return,hygarch:fixed-w",
                   help="comma list of kind:spec tokens")
    p.add_argument("--kmax", type=int, default=1000)
    _add_fit_flags(p)
    p.add_argument("--forecasts", metavar="PREFIX",
                   help="also write per-step forecast CSVs under this prefix")
    _add_output_flags(p)
    p.set_defaults(func=_cmd_backtest)

    p = sub.add_parser("study", help="Monte Carlo study tables")
    p.add_argument("which", choices=("table1", "table2"),
                   help="table1: estimation bias/RMSE; table2: test "
                        "size/power")
    p.add_argument("--reps", type=int, default=200)
    p.add_argument("--n-values", default="500,1000,2000", dest="n_values")
    p.add_argument("--gammas", default="0,0.4,2,7")
    p.add_argument("--levels", default="0.05,0.1")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--kmax", type=int, default=1000)
    p.add_argument("--burn", type=int, default=500)
    p.add_argument("--fix-b2", type=float, default=0.0, dest="fix_b2")
    p.add_argument("--multistart", type=int, default=3)
    p.add_argument("--workers", type=int, default=1)
    _add_theta_flags(p)
    _add_output_flags(p, formats=False)
    p.set_defaults(func=_cmd_study)

    p = sub.add_parser("stats", help="sample moments of a series")
    _add_data_flags(p)
    p.add_argument("--excess", action="store_true",
                   help="report kurtosis minus 3")
    _add_output_flags(p)
    p.set_defaults(func=_cmd_stats)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError, RuntimeError,
            np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
