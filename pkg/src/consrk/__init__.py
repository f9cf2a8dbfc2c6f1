"""Linearly implicit conservative Runge-Kutta schemes for quadratic invariants."""

from .errors import (
    ConfigError,
    ConsrkError,
    Diverged,
    DomainError,
    FirstStep,
    NoConvergence,
    SingularMatrix,
    Unsupported,
)
from .tableau import (
    ButcherTableau,
    PartitionedTableau,
    canonical_residual,
    dirk3_weights,
    dirk_canonical,
    gauss,
    get_pair,
    get_tableau,
    is_canonical,
    prk_dirk3,
    prk_gauss2,
)
from .trees import (
    BiColouredTree,
    black,
    density,
    elementary_weight,
    enumerate_tpy,
    is_admissible,
    verify_order,
    white,
)
from .special import elliptic_k, jacobi_elliptic, solve_kepler_equation
from .problems import (
    KdVSpectralProblem,
    KeplerProblem,
    QuadraticODE,
    RigidBodyProblem,
    kdv_paper,
    kepler_paper,
    parse_problem,
    rigidbody_paper,
)
from .predictors import (
    Predictor,
    PredictorState,
    cerk_predictor,
    declared_q,
    euler_predictor,
    exact_predictor,
    extrapolation_predictor,
    hermite_predictor,
    make_predictor,
    perturbed_predictor,
)
from .integrator import (
    IntegrationResult,
    IterationConfig,
    IterativeScheme,
    PRKScheme,
    StepRecord,
    base_rk_reference,
    conservative_step,
    explicit_iterate,
    integrate,
    prk_step,
    semi_implicit_iterate,
)
from .harness import (
    ExperimentConfig,
    certify,
    convergence_study,
    drift_study,
    fit_slope,
    orbit_dump,
)

__version__ = "0.1.0"
