"""Stage predictors: cheap approximations of the solution at the stage times.

Each predictor returns the matrix of predicted states at the abscissae c of
the current step and carries a declared local order q, meaning the prediction
error is O(h^q).  History-based predictors consume the previous step through
a PredictorState value threaded by the integration loop.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, FirstStep, Unsupported

PREDICTOR_NAMES = ("euler", "extrapolation", "hermite", "cerk", "exact", "perturbed")


@dataclass(frozen=True)
class PredictorState:
    """What the previous step leaves behind for history-based predictors."""

    y_start: np.ndarray
    y_end: np.ndarray
    stages: np.ndarray          # final stage values of the previous step
    abscissae: np.ndarray       # their positions in [0, 1] relative to that step
    h: float
    f_start: np.ndarray | None = None
    f_end: np.ndarray | None = None


def euler_predictor(problem, y0, h, c) -> np.ndarray:
    """One explicit Euler ray per stage: y0 + c_i h f(y0).  Local order 2."""
    f0 = problem.rhs(np.asarray(y0, dtype=float))
    return np.asarray(y0, dtype=float)[None, :] + np.outer(np.asarray(c) * h, f0)


def extrapolation_predictor(state: PredictorState | None, h, c) -> np.ndarray:
    """Lagrange extrapolation through the previous stages and the current start.

    Nodes are the previous abscissae shifted to [-1, 0] plus the node 0 for
    the step start; with s previous stages this interpolates s+1 points and
    has local order s + 1.  Requires a constant step size.
    """
    if state is None:
        raise FirstStep("extrapolation needs a previous step")
    if abs(state.h - h) > 1e-12 * max(abs(h), abs(state.h)):
        raise ConfigError("extrapolation assumes a constant step size")
    nodes = np.concatenate([state.abscissae - 1.0, [0.0]])
    values = np.vstack([state.stages, state.y_end])
    targets = np.asarray(c, dtype=float)
    out = np.zeros((targets.size, values.shape[1]))
    for j, xj in enumerate(nodes):
        weight = np.ones_like(targets)
        for l, xl in enumerate(nodes):
            if l != j:
                weight = weight * (targets - xl) / (xj - xl)
        out += weight[:, None] * values[j][None, :]
    return out


def hermite_predictor(state: PredictorState | None, h, c) -> np.ndarray:
    """Cubic two-point Hermite through the previous and current step start.

    Built on the unit interval between the old and new start states with
    slopes h f at both ends, then evaluated beyond its right end at the
    abscissae.  Local order 4.
    """
    if state is None:
        raise FirstStep("hermite needs a previous step")
    if state.f_start is None or state.f_end is None:
        raise ConfigError("hermite needs endpoint derivative evaluations in the state")
    sigma = np.asarray(c, dtype=float) + 1.0  # position on [0, 2] from the old start
    h00 = (1.0 + 2.0 * sigma) * (1.0 - sigma) ** 2
    h10 = sigma * (1.0 - sigma) ** 2
    h01 = sigma ** 2 * (3.0 - 2.0 * sigma)
    h11 = sigma ** 2 * (sigma - 1.0)
    return (
        h00[:, None] * state.y_start[None, :]
        + h01[:, None] * state.y_end[None, :]
        + h10[:, None] * (h * state.f_start)[None, :]
        + h11[:, None] * (h * state.f_end)[None, :]
    )


# 6-stage fifth-order explicit base method (Cash-Karp coefficients)
_CK_C = np.array([0.0, 0.2, 0.3, 0.6, 1.0, 0.875])
_CK_A = np.zeros((6, 6))
_CK_A[1, 0] = 1.0 / 5.0
_CK_A[2, :2] = [3.0 / 40.0, 9.0 / 40.0]
_CK_A[3, :3] = [3.0 / 10.0, -9.0 / 10.0, 6.0 / 5.0]
_CK_A[4, :4] = [-11.0 / 54.0, 5.0 / 2.0, -70.0 / 27.0, 35.0 / 27.0]
_CK_A[5, :5] = [1631.0 / 55296.0, 175.0 / 512.0, 575.0 / 13824.0,
                44275.0 / 110592.0, 253.0 / 4096.0]
_CK_B = np.array([37.0 / 378.0, 0.0, 250.0 / 621.0, 125.0 / 594.0, 0.0, 512.0 / 1771.0])


def _vrow(theta, n):
    return np.array([theta ** j for j in range(n)])


def _drow(theta, n):
    return np.array([0.0] + [j * theta ** (j - 1) for j in range(1, n)])


# interpolation systems for the bootstrapped dense output; the quartic stage
# must avoid theta = 1/2 (the Birkhoff problem is singular there)
_TH_QUARTIC = 0.25
_TH_QUINTIC = (1.0 / 3.0, 2.0 / 3.0)
_M4_INV = np.linalg.inv(np.array([
    _vrow(0.0, 5), _drow(0.0, 5), _vrow(1.0, 5), _drow(1.0, 5), _drow(_TH_QUARTIC, 5),
]))
_M5_INV = np.linalg.inv(np.array([
    _vrow(0.0, 6), _drow(0.0, 6), _vrow(1.0, 6), _drow(1.0, 6),
    _drow(_TH_QUINTIC[0], 6), _drow(_TH_QUINTIC[1], 6),
]))


def _cerk_dense(f, y0, h, thetas):
    """One explicit step plus a dense output of uniform local order 6.

    A fifth-order step supplies the endpoint; the interpolant is then boosted
    twice: a quartic using one extra derivative at an interior point whose
    state comes from the cubic Hermite, and a quintic using two more extra
    derivatives at states read off the quartic.  Derivative data enters
    scaled by h, so state errors of O(h^5) at the extra nodes keep the final
    interpolant at O(h^6).
    """
    stages = np.empty((6, y0.size))
    stages[0] = f(0.0, y0)
    for i in range(1, 6):
        stages[i] = f(_CK_C[i] * h, y0 + h * (_CK_A[i, :i] @ stages[:i]))
    y1 = y0 + h * (_CK_B @ stages)
    f0, f1 = stages[0], f(h, y1)

    t = _TH_QUARTIC
    hermite_state = (
        (1.0 - 3.0 * t * t + 2.0 * t ** 3) * y0
        + (3.0 * t * t - 2.0 * t ** 3) * y1
        + h * ((t - 2.0 * t * t + t ** 3) * f0 + (t ** 3 - t * t) * f1)
    )
    quartic = _M4_INV @ np.stack([y0, h * f0, y1, h * f1, h * f(t * h, hermite_state)])

    ta, tb = _TH_QUINTIC
    quintic = _M5_INV @ np.stack([
        y0, h * f0, y1, h * f1,
        h * f(ta * h, _vrow(ta, 5) @ quartic),
        h * f(tb * h, _vrow(tb, 5) @ quartic),
    ])
    return np.stack([_vrow(theta, 6) @ quintic for theta in np.asarray(thetas, dtype=float)])


def cerk_predictor(problem, y0, h, c) -> np.ndarray:
    """Continuous explicit Runge-Kutta predictions, local order 6.

    On stiff problems the step is taken in the dispersion-absorbing variable
    (the problem supplies the transform) and mapped back at each abscissa,
    which keeps the explicit substeps stable at step sizes where the raw
    right-hand side blows up.
    """
    y0 = np.asarray(y0, dtype=float)
    if problem.stiffness_hint == "stiff":
        preds = _cerk_dense(problem.transformed_rhs, y0, h, c)
        return np.stack([
            problem.from_transformed(ci * h, row) for ci, row in zip(np.asarray(c), preds)
        ])
    return _cerk_dense(lambda _t, y: problem.rhs(y), y0, h, c)


def exact_predictor(problem, y0, t_offset, h, c) -> np.ndarray:
    """Exact states at the stage times; a test instrument, not a scheme."""
    if not problem.has_exact:
        raise Unsupported(f"problem {problem.name} has no exact solution")
    return np.stack([problem.exact_solution(t_offset + ci * h) for ci in np.asarray(c)])


def perturbed_predictor(problem, y0, h, c, rng, amplitude=0.5) -> np.ndarray:
    """Euler predictions plus O(1) noise; exercises conservation under bad input."""
    base = euler_predictor(problem, y0, h, c)
    return base + amplitude * rng.standard_normal(base.shape)


def declared_q(name: str, s: int) -> float:
    """Local order of the named predictor with an s-stage base method."""
    table = {
        "euler": 2,
        "extrapolation": s + 1,
        "hermite": 4,
        "cerk": 6,
        "exact": np.inf,
        "perturbed": 0,
    }
    if name not in table:
        raise ConfigError(f"unknown predictor {name!r}")
    return table[name]


class Predictor:
    """Dispatcher used by the integration loop.

    History-based predictors fall back to the continuous explicit method on
    the first step, which does not lower the achievable order.
    """

    def __init__(self, name: str, rng=None, amplitude: float = 0.5):
        if name not in PREDICTOR_NAMES:
            raise ConfigError(f"unknown predictor {name!r}, expected one of {PREDICTOR_NAMES}")
        self.name = name
        self.amplitude = amplitude
        self.rng = rng if rng is not None else np.random.default_rng(0)

    @property
    def needs_history(self) -> bool:
        return self.name in ("extrapolation", "hermite")

    @property
    def needs_endpoint_rhs(self) -> bool:
        return self.name == "hermite"

    def predict(self, problem, state, y0, t_offset, h, c) -> np.ndarray:
        if self.name == "euler":
            return euler_predictor(problem, y0, h, c)
        if self.name == "extrapolation":
            if state is None:
                return cerk_predictor(problem, y0, h, c)
            return extrapolation_predictor(state, h, c)
        if self.name == "hermite":
            if state is None:
                return cerk_predictor(problem, y0, h, c)
            return hermite_predictor(state, h, c)
        if self.name == "cerk":
            return cerk_predictor(problem, y0, h, c)
        if self.name == "exact":
            return exact_predictor(problem, y0, t_offset, h, c)
        return perturbed_predictor(problem, y0, h, c, self.rng, self.amplitude)


def make_predictor(name, rng=None) -> Predictor:
    if isinstance(name, Predictor):
        return name
    return Predictor(name, rng=rng)
