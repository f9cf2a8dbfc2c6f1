"""The conservative one-step scheme and its iterative implementations.

One step with a canonical tableau (A, b, c) and stage predictions Yhat reads

    Y_i  = y0 + h sum_j a_ij S(Yhat_j) Q Y_j        (one linear solve)
    y1   = y0 + h sum_i b_i S(Yhat_i) Q Y_i

and conserves V(y) = <y, Q y>/2 exactly for ANY predictions, because the step
is a canonical Runge-Kutta step for the frozen-coefficient linear system.
Iterating the solve with S refrozen at the newest stages (semi-implicit
update) converges linearly to the underlying implicit method; replacing all
but the last solve with explicit re-evaluations (explicit update) trades
accuracy per iteration for cost while keeping conservation, since the output
line is always paired with the stages of one final solve.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ConsrkError, Diverged, NoConvergence, SingularMatrix
from .predictors import PredictorState, euler_predictor, make_predictor
from .tableau import ButcherTableau, PartitionedTableau, is_canonical

#: a stage norm beyond this multiple of 1 + |y0| aborts the step
DIVERGENCE_FACTOR = 1e8


@dataclass
class IterationConfig:
    """Stopping rule for the iterative procedures.

    Exactly one of ``k`` (fixed iteration count, the primary mode) and
    ``residual_tol`` (iterate displacement threshold) must be set.  The final
    update is always a semi-implicit solve.
    """

    mode: str = "semi_implicit"
    k: int | None = None
    residual_tol: float | None = None
    max_k: int = 50
    record_iterates: bool = False

    def __post_init__(self):
        if self.mode not in ("semi_implicit", "explicit_update"):
            raise ConfigError(f"unknown iteration mode {self.mode!r}")
        if (self.k is None) == (self.residual_tol is None):
            raise ConfigError("set exactly one of k and residual_tol")
        if self.k is not None and self.k < 1:
            raise ConfigError("k must be at least 1")
        if self.residual_tol is not None and self.residual_tol <= 0:
            raise ConfigError("residual_tol must be positive")


@dataclass
class StepRecord:
    """Everything one step produced."""

    y1: np.ndarray
    stages: np.ndarray
    invariant_before: float
    invariant_after: float
    n_iterations: int = 1
    iterate_history: list | None = None


def _check_stages(stages, limit):
    # abs-max guard; a NaN fails the comparison and trips the raise as well
    peak = np.abs(stages).max()
    if not peak < limit:
        raise Diverged(f"stage entries reached {peak:.3e} (limit {limit:.3e})")


def _stage_limit(y0) -> float:
    return DIVERGENCE_FACTOR * (1.0 + float(np.linalg.norm(y0)))


_EYE_CACHE: dict = {}


def _eye(n):
    if n not in _EYE_CACHE:
        _EYE_CACHE[n] = np.eye(n)
    return _EYE_CACHE[n]


def _solve_frozen(problem, y0, h, a, sq):
    """Stages of one semi-implicit solve with the flow matrices sq frozen.

    Same system as linalg.assemble_stage_system + lu_solve, on a leaner path;
    an exactly singular factorisation maps to SingularMatrix.
    """
    s, d = a.shape[0], y0.size
    blocks = (h * a)[:, :, None, None] * sq[None, :, :, :]
    matrix = _eye(s * d) - blocks.transpose(0, 2, 1, 3).reshape(s * d, s * d)
    rhs = np.empty(s * d)
    rhs.reshape(s, d)[:] = y0
    try:
        return np.linalg.solve(matrix, rhs).reshape(s, d)
    except np.linalg.LinAlgError as err:
        raise SingularMatrix(f"stage system is singular ({err}); reduce the step size") from None


def _output_line(problem, y0, h, b, sq, stages):
    return y0 + h * np.einsum("j,jab,jb->a", b, sq, stages)


def _freeze(problem, states):
    return problem.sq_batch(np.asarray(states, dtype=float))


def _record(problem, y0, h, b, sq, stages, n_iterations=1, history=None) -> StepRecord:
    y1 = _output_line(problem, y0, h, b, sq, stages)
    return StepRecord(
        y1=y1,
        stages=stages,
        invariant_before=problem.invariant(y0),
        invariant_after=problem.invariant(y1),
        n_iterations=n_iterations,
        iterate_history=history,
    )


def _warn_if_not_canonical(tableau):
    if not is_canonical(tableau):
        warnings.warn(
            f"tableau {tableau.name or '?'} is not canonical; the step will run "
            "but conservation of the invariant is forfeit",
            stacklevel=3,
        )


def conservative_step(problem, tableau: ButcherTableau, y0, h, yhat) -> StepRecord:
    """One linearly implicit step with S frozen at the given predictions."""
    _warn_if_not_canonical(tableau)
    y0 = np.asarray(y0, dtype=float)
    yhat = np.asarray(yhat, dtype=float)
    if yhat.shape != (tableau.s, y0.size):
        raise ConfigError(f"need {tableau.s} predicted stages of dimension {y0.size}")
    sq = _freeze(problem, yhat)
    stages = _solve_frozen(problem, y0, h, tableau.A, sq)
    _check_stages(stages, _stage_limit(y0))
    return _record(problem, y0, h, tableau.b, sq, stages)


def _iterate(problem, tableau, y0, h, y0_stages, cfg: IterationConfig) -> StepRecord:
    y0 = np.asarray(y0, dtype=float)
    current = np.asarray(y0_stages, dtype=float)
    if current.shape != (tableau.s, y0.size):
        raise ConfigError(f"need {tableau.s} starting stages of dimension {y0.size}")
    history = [current.copy()] if cfg.record_iterates else None
    explicit = cfg.mode == "explicit_update"
    a = tableau.A
    limit = _stage_limit(y0)
    fixed_k = cfg.k is not None
    sq = None
    iteration = 0
    while True:
        iteration += 1
        final = fixed_k and iteration == cfg.k
        sq = _freeze(problem, current)
        if explicit and not final:
            flows = np.matmul(sq, current[:, :, None])[:, :, 0]
            new = y0[None, :] + h * (a @ flows)
        else:
            new = _solve_frozen(problem, y0, h, a, sq)
        _check_stages(new, limit)
        if history is not None:
            history.append(new.copy())
        if fixed_k:
            current = new
            if final:
                break
        else:
            displacement = float(np.linalg.norm(new - current, axis=1).max())
            current = new
            if displacement <= cfg.residual_tol:
                break
            if iteration >= cfg.max_k:
                raise NoConvergence(
                    f"stage displacement {displacement:.3e} above {cfg.residual_tol:g} "
                    f"after {cfg.max_k} iterations (step size too large?)"
                )
    if explicit and not fixed_k:
        # residual rule fired during the explicit phase; restore conservation
        # with the concluding solve before the output line
        sq = _freeze(problem, current)
        current = _solve_frozen(problem, y0, h, a, sq)
        _check_stages(current, limit)
        if history is not None:
            history.append(current.copy())
        iteration += 1
    # the output pairs the solved stages with the matrices frozen one iterate back
    return _record(problem, y0, h, tableau.b, sq, current,
                   n_iterations=iteration, history=history)


def semi_implicit_iterate(problem, tableau, y0, h, y0_stages, cfg) -> StepRecord:
    """Repeated linear solves with S refrozen at the newest stages."""
    if cfg.mode != "semi_implicit":
        raise ConfigError("config mode must be semi_implicit")
    _warn_if_not_canonical(tableau)
    return _iterate(problem, tableau, y0, h, y0_stages, cfg)


def explicit_iterate(problem, tableau, y0, h, y0_stages, cfg) -> StepRecord:
    """Explicit stage updates followed by one conservation-restoring solve."""
    if cfg.mode != "explicit_update":
        raise ConfigError("config mode must be explicit_update")
    _warn_if_not_canonical(tableau)
    return _iterate(problem, tableau, y0, h, y0_stages, cfg)


def base_rk_reference(problem, tableau, y0, h, tol: float = 1e-14) -> StepRecord:
    """The underlying implicit method, as the semi-implicit fixed point.

    Iterates until the stage displacement drops below tol, so the result
    carries the accuracy of the linear solver rather than of any predictor.
    """
    if tol <= 0:
        raise ConfigError("tol must be positive")
    _warn_if_not_canonical(tableau)
    start = euler_predictor(problem, np.asarray(y0, dtype=float), h, tableau.c)
    cfg = IterationConfig(mode="semi_implicit", residual_tol=tol, max_k=200)
    return _iterate(problem, tableau, y0, h, start, cfg)


def prk_step(problem, pair: PartitionedTableau, y0, h) -> StepRecord:
    """One step of the partitioned pair: explicit predictor stages, one solve."""
    y0 = np.asarray(y0, dtype=float)
    s = pair.s
    ahat = pair.Ahat
    predictor_stages = np.empty((s, y0.size))
    flows = np.empty((s, y0.size))
    for i in range(s):
        predictor_stages[i] = y0 + h * (ahat[i, :i] @ flows[:i]) if i else y0
        flows[i] = problem.rhs(predictor_stages[i])
    limit = _stage_limit(y0)
    _check_stages(predictor_stages, limit)
    sq = _freeze(problem, predictor_stages)
    stages = _solve_frozen(problem, y0, h, pair.main.A, sq)
    _check_stages(stages, limit)
    return _record(problem, y0, h, pair.main.b, sq, stages)


class IterativeScheme:
    """A base tableau, a predictor, and an iteration rule."""

    def __init__(self, tableau: ButcherTableau, predictor, cfg: IterationConfig, rng=None):
        self.tableau = tableau
        self.predictor = make_predictor(predictor, rng=rng)
        self.cfg = cfg

    def describe(self) -> str:
        stop = f"k={self.cfg.k}" if self.cfg.k is not None else f"tol={self.cfg.residual_tol:g}"
        return f"{self.tableau.name}+{self.predictor.name}+{self.cfg.mode}({stop})"


class PRKScheme:
    """A partitioned explicit/implicit pair."""

    def __init__(self, pair: PartitionedTableau):
        self.pair = pair

    def describe(self) -> str:
        return self.pair.name


@dataclass
class IntegrationResult:
    times: np.ndarray
    states: np.ndarray
    observables: dict = field(default_factory=dict)


def integrate(problem, scheme, y0, h, n_steps, observers=None, t0: float = 0.0,
              record_iterates: bool = False) -> IntegrationResult:
    """Repeated stepping with predictor-state threading and per-step observers.

    ``observers`` maps names to scalar functions of the state, sampled at every
    step including the initial one.  Step failures are re-raised with the step
    index attached.
    """
    if n_steps < 1:
        raise ConfigError("n_steps must be at least 1")
    if h <= 0:
        raise ConfigError("h must be positive")
    y = np.asarray(y0, dtype=float).copy()
    observers = observers or {}
    times = t0 + h * np.arange(n_steps + 1)
    states = np.empty((n_steps + 1, y.size))
    states[0] = y
    series = {name: np.empty(n_steps + 1) for name in observers}
    for name, fn in observers.items():
        series[name][0] = fn(y)

    prk = isinstance(scheme, PRKScheme)
    state = None
    last_rhs = None
    if not prk:
        _warn_if_not_canonical(scheme.tableau)
        tableau, predictor, cfg = scheme.tableau, scheme.predictor, scheme.cfg
        if record_iterates and not cfg.record_iterates:
            cfg = IterationConfig(mode=cfg.mode, k=cfg.k, residual_tol=cfg.residual_tol,
                                  max_k=cfg.max_k, record_iterates=True)
        if predictor.needs_endpoint_rhs:
            last_rhs = problem.rhs(y)

    for n in range(n_steps):
        t = t0 + n * h
        try:
            if prk:
                rec = prk_step(problem, scheme.pair, y, h)
            else:
                yhat = predictor.predict(problem, state, y, t, h, tableau.c)
                rec = _iterate(problem, tableau, y, h, yhat, cfg)
                if predictor.needs_history:
                    new_rhs = problem.rhs(rec.y1) if predictor.needs_endpoint_rhs else None
                    state = PredictorState(
                        y_start=y, y_end=rec.y1, stages=rec.stages,
                        abscissae=tableau.c, h=h, f_start=last_rhs, f_end=new_rhs,
                    )
                    last_rhs = new_rhs
        except ConsrkError as err:
            raise type(err)(f"step {n + 1} of {n_steps} (t = {t:.6g}): {err}") from err
        y = rec.y1
        states[n + 1] = y
        for name, fn in observers.items():
            series[name][n + 1] = fn(y)
    return IntegrationResult(times=times, states=states, observables=series)
