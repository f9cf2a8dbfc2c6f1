"""Butcher tableaux of canonical Runge-Kutta methods and explicit/implicit pairs.

A method (A, b, c) is *canonical* when

    b_i a_ij + b_j a_ji = b_i b_j    for all i, j,

which makes it preserve every quadratic invariant of the flow.  This module
constructs the two canonical families used throughout the package (Gauss
collocation of any stage count, and the diagonally implicit family built from
a weight vector b), plus the two explicit/implicit partitioned pairs whose
predictor tableau is strictly lower triangular.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

#: tolerance for structural identities; construction error in double is O(1e-15)
STRUCT_TOL = 1e-13

#: substep fraction of the 3-stage third-order diagonally implicit method
DIRK3_ALPHA = (2.0 + 2.0 ** (-1.0 / 3.0) + 2.0 ** (1.0 / 3.0)) / 3.0


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ButcherTableau:
    """Stage coefficients (A, b, c) of an s-stage Runge-Kutta method."""

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    declared_order: int = 1
    name: str = ""

    def __post_init__(self):
        A = _readonly(self.A)
        b = _readonly(self.b)
        c = _readonly(self.c)
        s = b.size
        if A.shape != (s, s) or c.shape != (s,):
            raise ConfigError(f"tableau dimensions disagree: A {A.shape}, b {b.shape}, c {c.shape}")
        if not (np.isfinite(A).all() and np.isfinite(b).all() and np.isfinite(c).all()):
            raise ConfigError("tableau entries must be finite")
        if np.max(np.abs(A.sum(axis=1) - c)) > STRUCT_TOL:
            raise ConfigError("row sums of A do not match c")
        if self.declared_order < 1:
            raise ConfigError("declared_order must be a positive integer")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    @property
    def s(self) -> int:
        return self.b.size

    @property
    def is_lower_triangular(self) -> bool:
        """True when all entries strictly above the diagonal vanish exactly."""
        return not np.triu(self.A, 1).any()


@dataclass(frozen=True)
class PartitionedTableau:
    """A canonical main tableau paired with a strictly lower triangular predictor tableau.

    The predictor stages are computed explicitly (Ahat_ij = 0 for j >= i,
    exactly), after which the main stages require a single linear solve.
    """

    main: ButcherTableau
    Ahat: np.ndarray
    chat: np.ndarray
    declared_order: int = 1
    name: str = ""

    def __post_init__(self):
        Ahat = _readonly(self.Ahat)
        chat = _readonly(self.chat)
        s = self.main.s
        if Ahat.shape != (s, s) or chat.shape != (s,):
            raise ConfigError("predictor tableau dimensions disagree with the main tableau")
        if np.triu(Ahat, 0).any():
            raise ConfigError("predictor tableau must be strictly lower triangular (exact zeros)")
        if not is_canonical(self.main, STRUCT_TOL):
            raise ConfigError("main tableau violates the canonical condition")
        if np.max(np.abs(Ahat.sum(axis=1) - chat)) > STRUCT_TOL:
            raise ConfigError("row sums of Ahat do not match chat")
        object.__setattr__(self, "Ahat", Ahat)
        object.__setattr__(self, "chat", chat)

    @property
    def s(self) -> int:
        return self.main.s


def canonical_residual(t: ButcherTableau) -> float:
    """Largest entry of |b_i a_ij + b_j a_ji - b_i b_j|."""
    ba = t.b[:, None] * t.A
    return float(np.max(np.abs(ba + ba.T - np.outer(t.b, t.b))))


def is_canonical(t: ButcherTableau, tol: float = STRUCT_TOL) -> bool:
    """Whether (A, b) satisfies the quadratic-invariant-preserving condition."""
    if tol <= 0:
        raise ConfigError("tol must be positive")
    return canonical_residual(t) <= tol


def _shifted_legendre_roots(s: int) -> np.ndarray:
    """Roots of the s-th shifted Legendre polynomial on (0, 1), ascending.

    Newton iteration on the three-term recurrence with Chebyshev initial
    guesses; the roots are simple and well separated, so a handful of
    iterations reaches machine precision.
    """
    x = np.cos(np.pi * (4.0 * np.arange(1, s + 1) - 1.0) / (4.0 * s + 2.0))
    for _ in range(64):
        p_prev, p = np.zeros_like(x), np.ones_like(x)
        for n in range(1, s + 1):
            p_prev, p = p, ((2 * n - 1) * x * p - (n - 1) * p_prev) / n
        dp = s * (x * p - p_prev) / (x * x - 1.0)
        dx = p / dp
        x = x - dx
        if np.max(np.abs(dx)) < 1e-15:
            break
    return np.sort((1.0 + x) / 2.0)


def gauss(s: int) -> ButcherTableau:
    """The s-stage Gauss collocation method, order 2s.

    The abscissae are the shifted Legendre roots; A and b are fixed by the
    collocation conditions

        sum_j a_ij c_j^(k-1) = c_i^k / k,    sum_i b_i c_i^(k-1) = 1/k

    for k = 1..s, solved as Vandermonde systems in the node powers.
    """
    if s < 1:
        raise ConfigError("stage count must be at least 1")
    c = _shifted_legendre_roots(s)
    powers = np.vander(c, s, increasing=True).T  # powers[k-1, j] = c_j^(k-1)
    k = np.arange(1, s + 1)
    b = np.linalg.solve(powers, 1.0 / k)
    A = np.linalg.solve(powers, c[None, :] ** k[:, None] / k[:, None]).T
    return ButcherTableau(A=A, b=b, c=c, declared_order=2 * s, name=f"gauss:{s}")


#: weight vectors whose diagonally implicit method has a published order
_KNOWN_DIRK_FAMILIES = (
    (np.array([1.0]), 2),                      # implicit midpoint rule
    (np.array([0.5, 0.5]), 2),                 # two midpoint half-steps
    (np.array([DIRK3_ALPHA, DIRK3_ALPHA, 1.0 - 2.0 * DIRK3_ALPHA]), 3),
)


def dirk3_weights() -> np.ndarray:
    """Weights of the 3-stage third-order diagonally implicit method."""
    return np.array([DIRK3_ALPHA, DIRK3_ALPHA, 1.0 - 2.0 * DIRK3_ALPHA])


def dirk_canonical(b) -> ButcherTableau:
    """Diagonally implicit canonical method built from a weight vector b.

    a_ij = b_j for j < i, a_ii = b_i / 2, zero above the diagonal, and
    c_i = b_1 + ... + b_(i-1) + b_i / 2.  Equivalent to composing implicit
    midpoint substeps of sizes b_i h, hence canonical for any b.  The declared
    order is taken from the known families above when b matches one; otherwise
    only consistency (order 1) is guaranteed.
    """
    b = np.asarray(b, dtype=float)
    if b.ndim != 1 or b.size < 1 or not np.isfinite(b).all():
        raise ConfigError("b must be a finite vector")
    if abs(b.sum() - 1.0) > STRUCT_TOL:
        raise ConfigError(f"weights must sum to 1 (got {b.sum()!r}): inconsistent quadrature")
    s = b.size
    A = np.tril(np.tile(b, (s, 1)), -1) + np.diag(b / 2.0)
    c = np.cumsum(b) - b / 2.0
    order = 1
    for known, known_order in _KNOWN_DIRK_FAMILIES:
        if known.size == s and np.allclose(b, known, rtol=0.0, atol=1e-12):
            order = known_order
            break
    return ButcherTableau(A=A, b=b, c=c, declared_order=order, name=f"dirk:{s}")


def prk_gauss2() -> PartitionedTableau:
    """The 5-stage explicit/implicit pair built on the order-4 Gauss method.

    Three padding stages precede the two Gauss stages of the main tableau;
    the predictor tableau is strictly lower triangular so its stages are
    explicit.  The pair has order 4.
    """
    r = np.sqrt(3.0) / 6.0
    A = np.zeros((5, 5))
    A[3, 3:] = [0.25, 0.25 - r]
    A[4, 3:] = [0.25 + r, 0.25]
    b = np.array([0.0, 0.0, 0.0, 0.5, 0.5])
    c = np.array([0.0, 0.0, 0.0, 0.5 - r, 0.5 + r])
    main = ButcherTableau(A=A, b=b, c=c, declared_order=4, name="gauss:2+pad")

    Ahat = np.zeros((5, 5))
    Ahat[1, 0] = 0.25
    Ahat[2, 1] = 0.5
    Ahat[3, 0] = 1.0 / 6.0
    Ahat[3, 2] = 1.0 / 3.0 - r
    Ahat[4, 0] = 1.0 / 6.0
    Ahat[4, 2] = 1.0 / 3.0 + r
    chat = np.array([0.0, 0.25, 0.5, 0.5 - r, 0.5 + r])
    return PartitionedTableau(main=main, Ahat=Ahat, chat=chat, declared_order=4, name="prk-gauss2")


def prk_dirk3_constraint_residual(gamma1: float, gamma2: float, gamma3: float) -> float:
    """Residual of the third-order coupling condition of the DIRK-based pair."""
    a = DIRK3_ALPHA
    return a * a * gamma1 + a * (1.0 - 2.0 * a) * gamma2 + 3.0 * a * (1.0 - 2.0 * a) * gamma3 - 1.0 / 3.0


def prk_dirk3(gamma1: float | None = None, gamma2: float = 0.0, gamma3: float = 0.0) -> PartitionedTableau:
    """The 4-stage pair built on the third-order diagonally implicit method.

    The free parameters (gamma1, gamma2, gamma3) must satisfy the coupling
    condition whose residual is given by :func:`prk_dirk3_constraint_residual`;
    the default choice is gamma1 = 1/(3 alpha^2), gamma2 = gamma3 = 0.
    """
    a = DIRK3_ALPHA
    if gamma1 is None:
        gamma1 = 1.0 / (3.0 * a * a)
    res = prk_dirk3_constraint_residual(gamma1, gamma2, gamma3)
    if abs(res) > 1e-12:
        raise ConfigError(
            f"gamma parameters violate the order-3 coupling condition (residual {res:.3e})"
        )
    A = np.array([
        [0.0, 0.0, 0.0, 0.0],
        [0.0, a / 2.0, 0.0, 0.0],
        [0.0, a, a / 2.0, 0.0],
        [0.0, a, a, 0.5 - a],
    ])
    b = np.array([0.0, a, a, 1.0 - 2.0 * a])
    c = np.array([0.0, a / 2.0, 1.5 * a, 0.5 + a])
    main = ButcherTableau(A=A, b=b, c=c, declared_order=3, name="dirk:3+pad")

    Ahat = np.array([
        [0.0, 0.0, 0.0, 0.0],
        [a / 2.0, 0.0, 0.0, 0.0],
        [1.5 * a - gamma1, gamma1, 0.0, 0.0],
        [0.5 + a - gamma2 - gamma3, gamma2, gamma3, 0.0],
    ])
    chat = c.copy()
    return PartitionedTableau(main=main, Ahat=Ahat, chat=chat, declared_order=3, name="prk-dirk3")


def get_tableau(tag: str) -> ButcherTableau:
    """Look up a tableau by CLI identifier, e.g. ``gauss:3`` or ``dirk3``."""
    if tag.startswith("gauss:"):
        try:
            s = int(tag.split(":", 1)[1])
        except ValueError:
            raise ConfigError(f"bad stage count in tableau id {tag!r}") from None
        return gauss(s)
    if tag == "dirk3":
        return dirk_canonical(dirk3_weights())
    raise ConfigError(f"unknown tableau id {tag!r} (try gauss:<s> or dirk3)")


def get_pair(tag: str) -> PartitionedTableau:
    """Look up a partitioned pair by CLI identifier."""
    if tag == "prk-gauss2":
        return prk_gauss2()
    if tag == "prk-dirk3":
        return prk_dirk3()
    raise ConfigError(f"unknown pair id {tag!r} (try prk-gauss2 or prk-dirk3)")
