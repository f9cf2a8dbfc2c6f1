"""Experiment drivers: convergence tables, invariant drift, long-run orbits.

Outputs are whitespace-separated text tables with a ``#`` header carrying the
full configuration, one column per iteration count plus a fully converged
reference column, and ``inf`` marking diverged cells.  Identical
configurations produce byte-identical files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict

import numpy as np

from .errors import ConfigError, ConsrkError, Unsupported
from .integrator import IntegrationResult, IterationConfig, IterativeScheme, PRKScheme, integrate
from .predictors import make_predictor
from .problems import parse_problem
from .tableau import get_pair, get_tableau
from .trees import OrderReport, verify_order

#: errors at or below this level sit in the roundoff floor and are excluded
#: from slope fits
SLOPE_FLOOR = 1e-13

#: number of (smallest) step sizes entering a slope fit
SLOPE_POINTS = 4

_MODES = {"semi": "semi_implicit", "explicit": "explicit_update"}


@dataclass
class ExperimentConfig:
    """Everything one experiment needs, serialisable into the output header."""

    problem: str
    tableau: str | None = None
    pair: str | None = None
    predictor: str = "euler"
    mode: str = "semi"
    k_list: tuple[int, ...] = (1,)
    h_list: tuple[float, ...] = ()
    periods: float = 1.0
    out: str | None = None
    subsample: int = 64
    seed: int = 0
    include_base: bool = True

    def __post_init__(self):
        if self.tableau is None and self.pair is None:
            raise ConfigError("set a tableau or a pair")
        if self.mode not in _MODES:
            raise ConfigError(f"mode must be one of {tuple(_MODES)}, got {self.mode!r}")
        hs = tuple(float(h) for h in self.h_list)
        if not hs:
            raise ConfigError("h list must be non-empty")
        if any(b >= a for a, b in zip(hs, hs[1:])):
            raise ConfigError("h list must be strictly decreasing")
        ks = tuple(int(k) for k in self.k_list)
        if any(k < 1 or k > 12 for k in ks):
            raise ConfigError("iteration counts must lie in 1..12")
        if self.subsample < 1:
            raise ConfigError("subsample must be at least 1")
        self.h_list = hs
        self.k_list = ks

    def header(self) -> str:
        return "# consrk cfg " + json.dumps(asdict(self), sort_keys=True)


def _build(cfg: ExperimentConfig):
    problem = parse_problem(cfg.problem)
    if cfg.pair is not None:
        return problem, None
    return problem, get_tableau(cfg.tableau)


def _scheme_for_k(cfg, tableau, k, rng):
    return IterativeScheme(
        tableau,
        make_predictor(cfg.predictor, rng=rng),
        IterationConfig(mode=_MODES[cfg.mode], k=k),
    )


def _base_scheme(tableau):
    # the fully converged stage iteration IS the underlying implicit method
    return IterativeScheme(tableau, "euler", IterationConfig(mode="semi_implicit",
                                                             residual_tol=1e-14, max_k=200))


def _steps_for(cfg, problem, h) -> int:
    if problem.period is None:
        raise ConfigError(f"problem {problem.name} has no period")
    n = int(round(cfg.periods * problem.period / h))
    return max(n, 1)


def fit_slope(hs, errors) -> float:
    """Least-squares slope of log(error) vs log(h) over the asymptotic window.

    The window keeps the SLOPE_POINTS smallest step sizes whose error is
    finite and above the roundoff floor; fewer than two usable points give nan.
    """
    hs = np.asarray(hs, dtype=float)
    errors = np.asarray(errors, dtype=float)
    usable = np.isfinite(errors) & (errors > SLOPE_FLOOR)
    if usable.sum() < 2:
        return float("nan")
    idx = np.nonzero(usable)[0]
    idx = idx[np.argsort(hs[idx])][:SLOPE_POINTS]
    return float(np.polyfit(np.log(hs[idx]), np.log(errors[idx]), 1)[0])


@dataclass
class ConvergenceTable:
    cfg: ExperimentConfig
    h: np.ndarray
    errors: dict                      # column label -> error array over h
    slopes: dict = field(default_factory=dict)

    def column_labels(self):
        return list(self.errors)


def _relative_end_error(problem, result: IntegrationResult) -> float:
    reference = problem.exact_solution(result.times[-1])
    return float(np.linalg.norm(result.states[-1] - reference) / np.linalg.norm(reference))


def convergence_study(cfg: ExperimentConfig) -> ConvergenceTable:
    """Relative end-point errors against the exact solution, per h and k.

    Cells where the run diverges or the solver fails are recorded as inf.
    A slope is fitted per column over the asymptotic window.
    """
    problem, tableau = _build(cfg)
    if not problem.has_exact:
        raise Unsupported(f"problem {problem.name} has no exact solution")
    rng = np.random.default_rng(cfg.seed)
    columns: dict[str, list[float]] = {}

    if cfg.pair is not None:
        schemes = [("prk", PRKScheme(get_pair(cfg.pair)))]
    else:
        schemes = [(f"k={k}", _scheme_for_k(cfg, tableau, k, rng)) for k in cfg.k_list]
        if cfg.include_base:
            schemes.append(("base", _base_scheme(tableau)))

    for label, scheme in schemes:
        errs = []
        for h in cfg.h_list:
            n = _steps_for(cfg, problem, h)
            try:
                result = integrate(problem, scheme, problem.default_y0, h, n)
                errs.append(_relative_end_error(problem, result))
            except ConsrkError:
                errs.append(float("inf"))
        columns[label] = errs

    table = ConvergenceTable(cfg=cfg, h=np.asarray(cfg.h_list), errors=columns)
    table.slopes = {label: fit_slope(table.h, errs) for label, errs in columns.items()}
    return table


@dataclass
class DriftSeries:
    cfg: ExperimentConfig
    times: np.ndarray
    columns: dict                     # column label -> relative drift array


def _drift_observers(problem):
    obs = {"V": problem.invariant}
    obs.update(problem.secondary_observables)
    return obs


def drift_study(cfg: ExperimentConfig) -> DriftSeries:
    """Relative drift of the invariant and secondary observables over a run.

    Uses the first (single) entry of the h list; one column group per k,
    subsampled every ``cfg.subsample`` steps.
    """
    problem, tableau = _build(cfg)
    rng = np.random.default_rng(cfg.seed)
    h = cfg.h_list[0]
    n = _steps_for(cfg, problem, h)
    observers = _drift_observers(problem)

    schemes = [(f"k={k}", _scheme_for_k(cfg, tableau, k, rng)) for k in cfg.k_list]
    if cfg.include_base:
        schemes.append(("base", _base_scheme(tableau)))

    keep = np.arange(0, n + 1, cfg.subsample)
    columns = {}
    times = None
    for label, scheme in schemes:
        result = integrate(problem, scheme, problem.default_y0, h, n, observers=observers)
        times = result.times[keep]
        for name, series in result.observables.items():
            ref = series[0]
            scale = abs(ref) if abs(ref) > 0 else 1.0
            columns[f"{label}:{name}"] = np.abs(series[keep] - ref) / scale
    return DriftSeries(cfg=cfg, times=times, columns=columns)


@dataclass
class OrbitSeries:
    cfg: ExperimentConfig
    t_start: float
    positions: np.ndarray             # (steps_per_period, 2)


def orbit_dump(cfg: ExperimentConfig) -> OrbitSeries:
    """Positions (y1, y2) over the final period of a long two-body run."""
    problem, tableau = _build(cfg)
    if not cfg.problem.startswith("kepler"):
        raise ConfigError("orbit dumps are defined for the two-body problem")
    rng = np.random.default_rng(cfg.seed)
    h = cfg.h_list[0]
    per_period = int(round(problem.period / h))
    n = int(round(cfg.periods)) * per_period
    scheme = _scheme_for_k(cfg, tableau, cfg.k_list[0], rng)
    result = integrate(problem, scheme, problem.default_y0, h, n)
    window = result.states[n - per_period:n, :2]
    return OrbitSeries(cfg=cfg, t_start=float(result.times[n - per_period]),
                       positions=window)


def certify(pair_id: str, order: int, tol: float) -> OrderReport:
    """Run the order conditions of a named pair; delegation to verify_order."""
    return verify_order(get_pair(pair_id), order, tol)


def _fmt(x: float) -> str:
    return f"{x:.16e}"


def write_convergence(table: ConvergenceTable, path) -> None:
    labels = table.column_labels()
    lines = [table.cfg.header(), "# columns: h " + " ".join(labels)]
    for i, h in enumerate(table.h):
        row = [_fmt(h)] + [_fmt(table.errors[lab][i]) for lab in labels]
        lines.append(" ".join(row))
    lines.append("# slope: " + " ".join(f"{lab}={table.slopes[lab]:.4f}" for lab in labels))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_drift(series: DriftSeries, path) -> None:
    labels = list(series.columns)
    lines = [series.cfg.header(), "# columns: t " + " ".join(labels)]
    for i, t in enumerate(series.times):
        row = [_fmt(t)] + [_fmt(series.columns[lab][i]) for lab in labels]
        lines.append(" ".join(row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_orbit(series: OrbitSeries, path) -> None:
    lines = [series.cfg.header(),
             f"# final period starting at t = {_fmt(series.t_start)}",
             "# columns: y1 y2"]
    for y1, y2 in series.positions:
        lines.append(f"{_fmt(y1)} {_fmt(y2)}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
