"""Special functions backing the exact reference solutions.

Everything takes the elliptic PARAMETER m (not the modulus k); call sites
working with a modulus pass m = k**2.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError, NoConvergence


def elliptic_k(m: float) -> float:
    """Complete elliptic integral of the first kind, parameter convention.

    Computed by the arithmetic-geometric mean, which converges quadratically
    to machine precision.
    """
    if not 0.0 <= m < 1.0:
        raise DomainError(f"parameter m must lie in [0, 1), got {m!r}")
    a, b = 1.0, float(np.sqrt(1.0 - m))
    while abs(a - b) > 1e-16 * a:
        a, b = 0.5 * (a + b), float(np.sqrt(a * b))
    return float(np.pi / (2.0 * a))


def jacobi_elliptic(u: float, m: float) -> tuple[float, float, float]:
    """Jacobi functions (sn, cn, dn) by the descending Landen transformation.

    The argument is reduced modulo the full period 4K(m) first, so large
    arguments do not lose precision in the phase.
    """
    if not 0.0 <= m < 1.0:
        raise DomainError(f"parameter m must lie in [0, 1), got {m!r}")
    if m < 4e-16:
        return float(np.sin(u)), float(np.cos(u)), 1.0
    period = 4.0 * elliptic_k(m)
    u = float(u) - period * np.round(u / period)

    emc = 1.0 - m
    a, dn = 1.0, 1.0
    scales, roots = [], []
    for _ in range(16):
        emc = np.sqrt(emc)
        scales.append(a)
        roots.append(emc)
        c = 0.5 * (a + emc)
        if abs(a - emc) <= 1e-9 * a:
            break
        emc = emc * a
        a = c
    u = c * u
    sn, cn = float(np.sin(u)), float(np.cos(u))
    if sn != 0.0:
        a = cn / sn
        c = c * a
        for b, e in zip(reversed(scales), reversed(roots)):
            a = c * a
            c = c * dn
            dn = (e + a) / (b + a)
            a = c / b
        a = 1.0 / np.sqrt(c * c + 1.0)
        sn = -a if sn < 0.0 else a
        cn = c * sn
    return float(sn), float(cn), float(dn)


def solve_kepler_equation(mean: float, e: float, tol: float = 1e-14) -> float:
    """Eccentric anomaly E with E - e sin(E) = mean, by Newton iteration.

    For e < 1 the iteration from E = mean converges quickly; failure to do so
    within 64 iterations signals a defect, not a hard problem.
    """
    if not 0.0 <= e < 1.0:
        raise DomainError(f"eccentricity must lie in [0, 1), got {e!r}")
    if tol <= 0.0:
        raise DomainError("tol must be positive")
    ecc = float(e)
    big_e = float(mean)
    for _ in range(64):
        f = big_e - ecc * np.sin(big_e) - mean
        if abs(f) <= tol:
            return float(big_e)
        big_e -= f / (1.0 - ecc * np.cos(big_e))
    raise NoConvergence(f"Kepler solver stalled at residual {f:.3e} (mean={mean!r}, e={e!r})")
