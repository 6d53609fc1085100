"""Jacobi elliptic functions and complete elliptic integrals, built from scratch.

Everything here works with a real argument ``u`` and a real modulus
``k`` in ``[0, 1]``.  The complete integral K(k) comes from the
arithmetic-geometric mean, and ``sn``, ``cn``, ``dn`` come from the
descending Landen / AGM amplitude recursion (DLMF 22.20(ii)).  The two
degenerate moduli are served by their closed forms: trigonometric at
``k = 0`` and hyperbolic at ``k = 1``, where the AGM scheme loses meaning.

All functions are pure and safe for concurrent use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from .errors import DomainError

# AGM stops once successive means agree to this relative tolerance; the
# iteration converges quadratically, so the hard cap is never binding in
# practice.
_AGM_RTOL = 1e-15
_AGM_MAX_ITER = 64


@dataclass(frozen=True)
class EllipticTriple:
    """Values (sn, cn, dn) at one argument; the modulus is carried by the caller."""

    sn: float
    cn: float
    dn: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.sn, self.cn, self.dn)


@dataclass(frozen=True)
class QuarterPeriods:
    """Complete elliptic integrals K(k) and K'(k) = K(k') with k^2 + k'^2 = 1."""

    K: float
    Kprime: float


def _check_modulus(k: float, allow_one: bool) -> float:
    k = float(k)
    if not math.isfinite(k) or k < 0.0:
        raise DomainError(f"modulus must be finite and non-negative, got {k!r}")
    if allow_one:
        if k > 1.0:
            raise DomainError(f"modulus must lie in [0, 1], got {k!r}")
    elif k >= 1.0:
        raise DomainError(
            f"complete elliptic integral diverges as k -> 1; need k < 1, got {k!r}"
        )
    return k


def _agm(a: float, b: float) -> float:
    for _ in range(_AGM_MAX_ITER):
        if abs(a - b) <= _AGM_RTOL * a:
            break
        a, b = 0.5 * (a + b), math.sqrt(a * b)
    return 0.5 * (a + b)


def complete_elliptic(k: float) -> QuarterPeriods:
    """Complete elliptic integrals of the first kind for modulus k in [0, 1).

    K(k) is computed as pi / (2 * agm(1, k')) which converges to machine
    precision in a handful of iterations.  Kprime is K evaluated at the
    complementary modulus; it is infinite at k = 0.
    """
    k = _check_modulus(k, allow_one=False)
    kp = math.sqrt((1.0 - k) * (1.0 + k))
    big_k = math.pi / (2.0 * _agm(1.0, kp))
    kprime = math.inf if k == 0.0 else math.pi / (2.0 * _agm(1.0, k))
    return QuarterPeriods(K=big_k, Kprime=kprime)


@lru_cache(maxsize=256)
def _amplitude_tables(k: float) -> tuple[tuple[float, ...], tuple[float, ...], float]:
    """AGM scale tables (a_n, c_n) and the quarter period K for one modulus.

    Cached per modulus so repeated evaluations (ODE right-hand sides,
    long trajectories) pay only for the backward amplitude recursion.
    """
    kp = math.sqrt((1.0 - k) * (1.0 + k))
    a_list = [1.0]
    c_list = [k]
    a, b = 1.0, kp
    for _ in range(_AGM_MAX_ITER):
        a_next = 0.5 * (a + b)
        c_next = 0.5 * (a - b)
        b_next = math.sqrt(a * b)
        a_list.append(a_next)
        c_list.append(c_next)
        a, b = a_next, b_next
        if abs(c_next) <= _AGM_RTOL * a_next:
            break
    big_k = math.pi / (2.0 * a_list[-1])
    return tuple(a_list), tuple(c_list), big_k


def quarter_period(k: float) -> float:
    """K(k) via the cached AGM tables (k in [0, 1))."""
    k = _check_modulus(k, allow_one=False)
    if k == 0.0:
        return 0.5 * math.pi
    return _amplitude_tables(k)[2]


def jacobi(u: float, k: float) -> EllipticTriple:
    """Evaluate sn(u, k), cn(u, k), dn(u, k) for real u and k in [0, 1].

    The argument is reduced modulo the real period 4K before the Landen
    descent so that long arguments do not degrade the amplitude
    recursion.  dn is recovered from dn^2 = 1 - k^2 sn^2, whose positive
    branch is the correct one for real argument and k in [0, 1].
    """
    u = float(u)
    if not math.isfinite(u):
        raise DomainError(f"argument must be finite, got {u!r}")
    k = _check_modulus(k, allow_one=True)

    if k == 0.0:
        return EllipticTriple(sn=math.sin(u), cn=math.cos(u), dn=1.0)
    if k == 1.0:
        # Pulse limit: the AGM scheme degenerates, the closed forms are exact.
        sech = 1.0 / math.cosh(u)
        return EllipticTriple(sn=math.tanh(u), cn=sech, dn=sech)

    a_list, c_list, big_k = _amplitude_tables(k)
    u = math.remainder(u, 4.0 * big_k)

    n_top = len(a_list) - 1
    phi = math.ldexp(a_list[n_top] * u, n_top)
    for n in range(n_top, 0, -1):
        s = c_list[n] / a_list[n] * math.sin(phi)
        # Guard rounding excursions outside [-1, 1]; c_n < a_n guarantees
        # the exact value is interior.
        s = max(-1.0, min(1.0, s))
        phi = 0.5 * (phi + math.asin(s))

    sn = math.sin(phi)
    cn = math.cos(phi)
    dn = math.sqrt((1.0 - k * sn) * (1.0 + k * sn))
    return EllipticTriple(sn=sn, cn=cn, dn=dn)


def jacobi_identity_residuals(t: EllipticTriple, k: float) -> tuple[float, float]:
    """Absolute residuals of sn^2 + cn^2 = 1 and dn^2 + k^2 sn^2 = 1."""
    r1 = abs(t.sn * t.sn + t.cn * t.cn - 1.0)
    r2 = abs(t.dn * t.dn + (k * t.sn) * (k * t.sn) - 1.0)
    return (r1, r2)
