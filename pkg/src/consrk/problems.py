"""Benchmark systems of the form  dy/dt = S(y) grad V(y)  with quadratic V.

Every problem exposes a skew matrix function S, a constant symmetric matrix Q
with grad V(y) = Q y, the invariant V(y) = <y, Q y> / 2, and (where available)
an exact solution used as the error reference.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError, ConsrkError, DomainError, Unsupported
from .special import elliptic_k, jacobi_elliptic, solve_kepler_equation

#: largest tolerated imaginary residue when forcing spectral results real
IMAG_RESIDUE_TOL = 1e-12


class QuadraticODE:
    """Capability contract shared by all problems.

    Subclasses set ``dim``, ``Q``, ``default_y0`` and implement ``S_matrix``;
    the remaining operations derive from those.  Problems are immutable after
    construction and all evaluation methods are pure.
    """

    name = "quadratic-ode"
    stiffness_hint = "nonstiff"
    period: float | None = None
    has_exact = False

    def __init__(self, dim: int, q_matrix: np.ndarray, default_y0: np.ndarray):
        self.dim = dim
        self.Q = np.asarray(q_matrix, dtype=float)
        self.Q.setflags(write=False)
        self.default_y0 = np.asarray(default_y0, dtype=float)
        self.default_y0.setflags(write=False)
        self.secondary_observables: dict[str, callable] = {}

    def S_matrix(self, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def Q_apply(self, y: np.ndarray) -> np.ndarray:
        """Gradient of the invariant, Q y."""
        return self.Q @ y

    def invariant(self, y: np.ndarray) -> float:
        return 0.5 * float(y @ self.Q_apply(y))

    def sq_matrix(self, y: np.ndarray) -> np.ndarray:
        """The product S(y) Q driving the flow; subclasses may shortcut it."""
        return self.S_matrix(y) @ self.Q

    def sq_batch(self, states: np.ndarray) -> np.ndarray:
        """S(y) Q for a batch of states, shape (n, d, d); hot path of the stepper."""
        out = np.empty((states.shape[0], self.dim, self.dim))
        for i, y in enumerate(states):
            out[i] = self.sq_matrix(y)
        return out

    def rhs(self, y: np.ndarray) -> np.ndarray:
        return self.sq_matrix(y) @ y

    def exact_solution(self, t: float) -> np.ndarray:
        raise Unsupported(f"problem {self.name} has no exact solution")


class RigidBodyProblem(QuadraticODE):
    """Free rigid body rotation in angular-momentum form.

        S(y) = [[0, a y3, -b y2], [-a y3, 0, y1], [b y2, -y1, 0]],
        V(y) = (y1^2 + y2^2 + y3^2) / 2.

    A second quadratic invariant  I(y) = (y1^2 + b y2^2 + a y3^2) / 2  is
    registered as an observable; it is preserved by the flow but not by every
    scheme.
    """

    name = "euler"

    def __init__(self, alpha: float, beta: float, y0=(0.0, 1.0, 1.0)):
        super().__init__(3, np.eye(3), np.asarray(y0, dtype=float))
        self.alpha = float(alpha)
        self.beta = float(beta)
        self.secondary_observables = {"I": self.secondary_invariant}
        self._exact_m = None
        self._exact_amp = None

    def S_matrix(self, y):
        a, b = self.alpha, self.beta
        return np.array([
            [0.0, a * y[2], -b * y[1]],
            [-a * y[2], 0.0, y[0]],
            [b * y[1], -y[0], 0.0],
        ])

    # Q is the identity
    sq_matrix = S_matrix

    def sq_batch(self, states):
        out = np.zeros((states.shape[0], 3, 3))
        out[:, 0, 1] = self.alpha * states[:, 2]
        out[:, 1, 0] = -out[:, 0, 1]
        out[:, 0, 2] = -self.beta * states[:, 1]
        out[:, 2, 0] = -out[:, 0, 2]
        out[:, 1, 2] = states[:, 0]
        out[:, 2, 1] = -out[:, 1, 2]
        return out

    def rhs(self, y):
        a, b = self.alpha, self.beta
        return np.array([
            (a - b) * y[1] * y[2],
            (1.0 - a) * y[0] * y[2],
            (b - 1.0) * y[0] * y[1],
        ])

    def invariant(self, y) -> float:
        return 0.5 * float(y @ y)

    def secondary_invariant(self, y) -> float:
        return 0.5 * float(y[0] ** 2 + self.beta * y[1] ** 2 + self.alpha * y[2] ** 2)

    def exact_solution(self, t):
        if self._exact_m is None:
            raise Unsupported("exact solution is only defined for the reference parameters")
        sn, cn, dn = jacobi_elliptic(t, self._exact_m)
        return np.array([self._exact_amp * sn, cn, dn])


def rigidbody_paper() -> RigidBodyProblem:
    """The reference rigid body: alpha = 1 + 1/sqrt(1.51), beta = 1 - 0.51/sqrt(1.51).

    With y0 = (0, 1, 1) the solution is (sqrt(1.51) sn(t), cn(t), dn(t)) at
    parameter m = 0.51, periodic with period 4 K(0.51).  The amplitude and
    parameter follow from matching the component equations:
    alpha - beta = sqrt(1.51), alpha - 1 = 1/sqrt(1.51), 1 - beta = 0.51/sqrt(1.51).
    """
    root = np.sqrt(1.51)
    problem = RigidBodyProblem(alpha=1.0 + 1.0 / root, beta=1.0 - 0.51 / root)
    problem._exact_m = 0.51
    problem._exact_amp = root
    problem.period = 4.0 * elliptic_k(0.51)
    problem.has_exact = True
    return problem


class KeplerProblem(QuadraticODE):
    """Planar two-body motion with state (x, y, vx, vy).

    The conserved quadratic form is the angular momentum V(y) = y1 y4 - y2 y3.
    S is defined away from the collision set y1 = y2 = 0 and is only locally
    Lipschitz near it.
    """

    name = "kepler"
    has_exact = True
    period = 2.0 * np.pi

    #: symmetric matrix with <y, Q y>/2 = y1 y4 - y2 y3
    _Q = np.array([
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, -1.0, 0.0],
        [0.0, -1.0, 0.0, 0.0],
        [1.0, 0.0, 0.0, 0.0],
    ])

    def __init__(self, e: float):
        if not 0.0 <= e < 1.0:
            raise DomainError(f"eccentricity must lie in [0, 1), got {e!r}")
        self.e = float(e)
        y0 = np.array([1.0 - e, 0.0, 0.0, np.sqrt((1.0 + e) / (1.0 - e))])
        super().__init__(4, self._Q, y0)
        self.name = f"kepler:e={e:g}"

    def _inv_r3(self, y) -> float:
        r2 = y[0] * y[0] + y[1] * y[1]
        if r2 < 1e-12:
            raise DomainError(f"state too close to collision: y1^2 + y2^2 = {r2:.3e}")
        return r2 ** -1.5

    def S_matrix(self, y):
        w = self._inv_r3(y)
        return np.array([
            [0.0, -1.0, 0.0, 0.0],
            [1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, -w],
            [0.0, 0.0, w, 0.0],
        ])

    def sq_matrix(self, y):
        w = self._inv_r3(y)
        return np.array([
            [0.0, 0.0, 1.0, 0.0],
            [0.0, 0.0, 0.0, 1.0],
            [-w, 0.0, 0.0, 0.0],
            [0.0, -w, 0.0, 0.0],
        ])

    def sq_batch(self, states):
        r2 = states[:, 0] ** 2 + states[:, 1] ** 2
        if r2.min() < 1e-12:
            raise DomainError(f"state too close to collision: y1^2 + y2^2 = {r2.min():.3e}")
        w = r2 ** -1.5
        out = np.zeros((states.shape[0], 4, 4))
        out[:, 0, 2] = 1.0
        out[:, 1, 3] = 1.0
        out[:, 2, 0] = -w
        out[:, 3, 1] = -w
        return out

    def rhs(self, y):
        w = self._inv_r3(y)
        return np.array([y[2], y[3], -w * y[0], -w * y[1]])

    def exact_solution(self, t):
        # mean motion 1; reduce the mean anomaly so Newton stays fast at large t
        mean = float(np.fmod(t, 2.0 * np.pi))
        ecc_anom = solve_kepler_equation(mean, self.e)
        e = self.e
        root = np.sqrt(1.0 - e * e)
        sin_e, cos_e = np.sin(ecc_anom), np.cos(ecc_anom)
        rate = 1.0 / (1.0 - e * cos_e)
        return np.array([cos_e - e, root * sin_e, -sin_e * rate, root * cos_e * rate])


def kepler_paper(e: float) -> KeplerProblem:
    """Two-body problem started at perihelion: y0 = (1-e, 0, 0, sqrt((1+e)/(1-e)))."""
    return KeplerProblem(e)


class KdVSpectralProblem(QuadraticODE):
    """Norm-preserving Fourier-spectral semi-discretisation of KdV.

        u_t + 6 u u_x + u_xxx = 0   on a periodic domain of length L,

    discretised on d equispaced points with the spectral derivative dx.  The
    skew operator applied to the gradient Q y (Q = dx_spacing I) reproduces

        S(v) w = (-2 (v * dx w + dx(v * w)) - dx^3 w) / dx_spacing,

    so that S(y) grad V(y) = -6 y * dx y - dx^3 y up to the skew splitting of
    the convection term.  The reference solution is a travelling wave built
    from the squared Jacobi cn function, whose spatial period 2 K(m) / kappa
    fixes the domain length.
    """

    name = "kdv"
    stiffness_hint = "stiff"
    has_exact = True

    def __init__(self, d: int, k: float, kappa: float = 1.0, u0: float = 0.0, x0: float = 0.0):
        if d < 2 or d & (d - 1):
            raise ConfigError(f"grid size must be a power of two for the FFT, got {d}")
        self.k = float(k)
        self.kappa = float(kappa)
        self.u0 = float(u0)
        self.x0 = float(x0)
        self.m = self.k ** 2
        self.L = 2.0 * elliptic_k(self.m) / self.kappa  # period of cn^2 is 2 K
        dx_spacing = self.L / d
        super().__init__(d, dx_spacing * np.eye(d), np.empty(d))
        self.dx_spacing = dx_spacing
        self.grid = dx_spacing * np.arange(d)
        self.wave_speed = 6.0 * self.u0 + 4.0 * (2.0 * self.k ** 2 - 1.0) * self.kappa ** 2
        self.period = abs(self.L / (self.wave_speed * self.kappa))
        self.name = f"kdv:d={d}"

        wavenumbers = 2.0 * np.pi * np.fft.fftfreq(d, d=dx_spacing)
        ik = 1j * wavenumbers
        ik[d // 2] = 0.0  # odd derivatives kill the unpaired mode
        self._ik1 = ik
        self._ik3 = ik ** 3
        self._diff1 = self._operator_matrix(self._ik1)
        self._diff3 = self._operator_matrix(self._ik3)
        self.default_y0 = self.exact_solution(0.0)
        self.default_y0.setflags(write=False)

    def _operator_matrix(self, mult):
        cols = np.fft.ifft(mult[:, None] * np.fft.fft(np.eye(self.dim), axis=0), axis=0)
        return np.ascontiguousarray(cols.real)

    def _force_real(self, z: np.ndarray) -> np.ndarray:
        residue = float(np.max(np.abs(z.imag)))
        scale = max(1.0, float(np.max(np.abs(z.real))))
        if residue > IMAG_RESIDUE_TOL * scale:
            raise ConsrkError(f"spectral result lost real symmetry (residue {residue:.3e})")
        return np.ascontiguousarray(z.real)

    def spectral_diff(self, y: np.ndarray, order: int) -> np.ndarray:
        """Spectral derivative of order 1 or 3 on the periodic grid."""
        if order == 1:
            mult = self._ik1
        elif order == 3:
            mult = self._ik3
        else:
            raise ConfigError(f"derivative order must be 1 or 3, got {order}")
        return self._force_real(np.fft.ifft(mult * np.fft.fft(y)))

    def expA_apply(self, t: float, y: np.ndarray) -> np.ndarray:
        """Propagate by the dispersive part: multiply mode j by exp(-t (i kappa_j)^3).

        The multipliers are unimodular, so the map is an isometry.
        """
        return self._force_real(np.fft.ifft(np.exp(-t * self._ik3) * np.fft.fft(y)))

    def S_matrix(self, v):
        return self.sq_matrix(v) / self.dx_spacing

    def sq_matrix(self, v):
        # diag(v) D1 and D1 diag(v) as broadcasts; the 1/dx in S cancels Q = dx I
        return -2.0 * (v[:, None] * self._diff1 + self._diff1 * v[None, :]) - self._diff3

    def sq_batch(self, states):
        d1 = self._diff1[None, :, :]
        return -2.0 * (states[:, :, None] * d1 + d1 * states[:, None, :]) - self._diff3[None, :, :]

    def nonlinear_rhs(self, y: np.ndarray) -> np.ndarray:
        """Convection part of the flow, -2 (y * dx y + dx(y^2))."""
        return -2.0 * (y * self.spectral_diff(y, 1) + self.spectral_diff(y * y, 1))

    def transformed_rhs(self, t: float, w: np.ndarray) -> np.ndarray:
        """Right-hand side in the dispersion-absorbing variable w = exp(-tA) y."""
        y = self.expA_apply(t, w)
        return self.expA_apply(-t, self.nonlinear_rhs(y))

    def from_transformed(self, t: float, w: np.ndarray) -> np.ndarray:
        """Map the transformed variable back to the physical one."""
        return self.expA_apply(t, w)

    def exact_solution(self, t):
        phase = self.kappa * (self.grid - self.x0 - self.wave_speed * t)
        cn = np.array([jacobi_elliptic(p, self.m)[1] for p in phase])
        return self.u0 + 2.0 * self.k ** 2 * self.kappa ** 2 * cn ** 2


def kdv_paper(d: int) -> KdVSpectralProblem:
    """The reference travelling-wave setup: k = sqrt(0.1), u0 = 0, kappa = 1, x0 = 0."""
    return KdVSpectralProblem(d=d, k=np.sqrt(0.1), kappa=1.0, u0=0.0, x0=0.0)


def parse_problem(tag: str) -> QuadraticODE:
    """Build a problem from a CLI identifier: euler, kepler:e=<val>, kdv:d=<val>."""
    if tag == "euler":
        return rigidbody_paper()
    if tag.startswith("kepler:"):
        body = tag.split(":", 1)[1]
        if not body.startswith("e="):
            raise ConfigError(f"bad Kepler id {tag!r}, expected kepler:e=<val>")
        try:
            return kepler_paper(float(body[2:]))
        except ValueError:
            raise ConfigError(f"bad eccentricity in {tag!r}") from None
    if tag.startswith("kdv:"):
        body = tag.split(":", 1)[1]
        if not body.startswith("d="):
            raise ConfigError(f"bad KdV id {tag!r}, expected kdv:d=<val>")
        try:
            return kdv_paper(int(body[2:]))
        except ValueError:
            raise ConfigError(f"bad grid size in {tag!r}") from None
    raise ConfigError(f"unknown problem id {tag!r}")
