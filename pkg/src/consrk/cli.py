"""Command-line front end.

Subcommands: ``converge``, ``drift``, ``orbit``, ``verify-tableau``.  Step
sizes accept either plain floats or ``T/<n>`` for a fraction of the problem
period.  Each run writes the text table and, unless ``--no-plot`` is given, a
PNG figure next to it.

Exit codes: 0 complete/pass, 1 usage error, 2 numerical failure,
3 certification failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import harness, plots
from .errors import ConfigError, ConsrkError
from .harness import ExperimentConfig
from .problems import parse_problem


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _parse_h_token(token: str, period: float) -> float:
    token = token.strip()
    if token.upper().startswith("T/"):
        return period / float(token[2:])
    return float(token)


def _parse_h_list(text: str, problem_id: str) -> tuple[float, ...]:
    period = None
    if "T/" in text.upper():
        period = parse_problem(problem_id).period
        if period is None:
            raise ConfigError(f"problem {problem_id} has no period; give absolute h values")
    try:
        return tuple(_parse_h_token(tok, period) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise ConfigError(f"could not parse h list {text!r}") from None


def _parse_k_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise ConfigError(f"could not parse k list {text!r}") from None


def _add_run_flags(sub, single_h: bool):
    sub.add_argument("--problem", required=True, help="euler | kepler:e=<val> | kdv:d=<val>")
    sub.add_argument("--tableau", default=None, help="gauss:<s> | dirk3")
    sub.add_argument("--pair", default=None, help="prk-gauss2 | prk-dirk3")
    sub.add_argument("--predictor", default="euler",
                     help="euler | extrapolation | hermite | cerk | exact | perturbed")
    sub.add_argument("--mode", choices=("semi", "explicit"), default="semi")
    sub.add_argument("--k", default="1", help="comma-separated iteration counts")
    sub.add_argument("--h-list", required=True,
                     help="comma-separated step sizes; accepts T/<n>" +
                          (" (single value)" if single_h else ""))
    sub.add_argument("--periods", type=float, default=1.0)
    sub.add_argument("--out", required=True)
    sub.add_argument("--subsample", type=int, default=64)
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--no-base", action="store_true", help="skip the reference column")
    sub.add_argument("--no-plot", action="store_true", help="skip the PNG figure")


def _config_from(args, single_h: bool) -> ExperimentConfig:
    hs = _parse_h_list(args.h_list, args.problem)
    if single_h and len(hs) != 1:
        raise ConfigError("this subcommand takes a single h value")
    return ExperimentConfig(
        problem=args.problem,
        tableau=args.tableau,
        pair=args.pair,
        predictor=args.predictor,
        mode=args.mode,
        k_list=_parse_k_list(args.k),
        h_list=hs,
        periods=args.periods,
        out=args.out,
        subsample=args.subsample,
        seed=args.seed,
        include_base=not args.no_base,
    )


def _figure_path(out: str) -> Path:
    return Path(out).with_suffix(".png")


def _cmd_converge(args) -> int:
    cfg = _config_from(args, single_h=False)
    table = harness.convergence_study(cfg)
    harness.write_convergence(table, cfg.out)
    if not args.no_plot:
        plots.convergence_figure(table, _figure_path(cfg.out))
    print(f"wrote {cfg.out}; slopes: " +
          " ".join(f"{lab}={table.slopes[lab]:.3f}" for lab in table.column_labels()))
    return 0


def _cmd_drift(args) -> int:
    cfg = _config_from(args, single_h=True)
    series = harness.drift_study(cfg)
    harness.write_drift(series, cfg.out)
    if not args.no_plot:
        plots.drift_figure(series, _figure_path(cfg.out))
    peak = max(float(np.max(v)) for v in series.columns.values())
    print(f"wrote {cfg.out}; worst drift {peak:.3e}")
    return 0


def _cmd_orbit(args) -> int:
    cfg = _config_from(args, single_h=True)
    series = harness.orbit_dump(cfg)
    harness.write_orbit(series, cfg.out)
    if not args.no_plot:
        problem = parse_problem(cfg.problem)
        dense = np.stack([problem.exact_solution(t)[:2]
                          for t in np.linspace(0.0, problem.period, 257)])
        plots.orbit_figure(series, _figure_path(cfg.out), exact=dense)
    print(f"wrote {cfg.out}; {len(series.positions)} rows from t = {series.t_start:.6g}")
    return 0


def _cmd_verify(args) -> int:
    report = harness.certify(args.pair, args.order, args.tol)
    print(report.as_text())
    return 0 if report.passed else 3


def main(argv=None) -> int:
    parser = _Parser(prog="consrk",
                     description="conservative linearly implicit Runge-Kutta experiments")
    subs = parser.add_subparsers(dest="command", required=True)

    _add_run_flags(subs.add_parser("converge", help="error-vs-h table"), single_h=False)
    _add_run_flags(subs.add_parser("drift", help="invariant drift time series"), single_h=True)
    _add_run_flags(subs.add_parser("orbit", help="final-period positions"), single_h=True)

    verify = subs.add_parser("verify-tableau", help="order-condition certification")
    verify.add_argument("--pair", required=True)
    verify.add_argument("--order", type=int, required=True)
    verify.add_argument("--tol", type=float, default=1e-12)

    args = parser.parse_args(argv)
    handlers = {
        "converge": _cmd_converge,
        "drift": _cmd_drift,
        "orbit": _cmd_orbit,
        "verify-tableau": _cmd_verify,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as err:
        print(f"consrk: usage error: {err}", file=sys.stderr)
        return 1
    except ConsrkError as err:
        print(f"consrk: numerical failure: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
