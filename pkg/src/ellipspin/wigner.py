"""Euler-angle extraction and rotation matrices for arbitrary spin.

The two-level propagator is an SU(2) element, so it defines Euler angles
(phi, theta, psi) and through them the full (2J+1)-dimensional rotation
matrix for any spin J.  Squared matrix entries give the transition
probabilities between angular-momentum projections, with the spin-1/2
flip probability equal to sin^2(theta/2).

Matrix entries follow the phase convention of the two-level propagator:
the element for projections (m, m') carries i^(m'-m) e^(i(m phi + m' psi))
on top of the real reduced rotation function, which makes the theta
rotation an x-axis rotation, D(0, theta, 0) = exp(+i theta J_x).  Basis
states are ordered by descending projection, m = +J first, matching the
(no-flip, flip) layout of the two-level amplitudes.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .spin_dynamics import Propagator

MAX_J = 25.0

# log n! for n up to 4*MAX_J + 1; fixed table so sums are reproducible.
_LOG_FACT = [0.0]
for _n in range(1, int(4 * MAX_J) + 2):
    _LOG_FACT.append(_LOG_FACT[-1] + math.log(_n))


@dataclass(frozen=True)
class EulerAngles:
    phi: float
    theta: float
    psi: float


@dataclass(frozen=True)
class SpinJMatrix:
    """Rotation matrix for spin j, indexed by descending projection."""

    j: float
    entries: np.ndarray

    def projection_index(self, m: float) -> int:
        idx = round(self.j - m)
        if not math.isclose(self.j - m, idx, abs_tol=1e-12) or not 0 <= idx <= round(2 * self.j):
            raise DomainError(f"projection {m!r} invalid for j = {self.j!r}")
        return int(idx)

    def entry(self, m: float, m_prime: float) -> complex:
        return complex(self.entries[self.projection_index(m), self.projection_index(m_prime)])


def _check_j(j: float) -> float:
    j = float(j)
    two_j = 2.0 * j
    if not math.isfinite(j) or j < 0.0 or abs(two_j - round(two_j)) > 1e-12:
        raise DomainError(f"j must be a non-negative half-integer, got {j!r}")
    if j > MAX_J:
        raise DomainError(f"j = {j!r} exceeds the supported maximum {MAX_J}")
    return j


def _check_projection(j: float, m: float, name: str) -> float:
    m = float(m)
    if abs((j - m) - round(j - m)) > 1e-9 or m < -j - 1e-12 or m > j + 1e-12:
        raise DomainError(f"{name} = {m!r} is not a valid projection for j = {j!r}")
    return m


def euler_angles(u: Propagator) -> EulerAngles:
    """Euler angles of a unitary two-level propagator.

    theta = 2 atan2(|u21|, |u11|); the phase sums and differences come
    from arg(u11) and arg(u21 / i).  When theta is 0 (or pi) only the sum
    (or difference) of phi and psi is defined; the free combination is
    set to zero by convention.
    """
    defect = u.unitarity_defect()
    if defect > 1e-9:
        raise DomainError(f"propagator is not unitary (defect {defect!r})")
    mag_flip = abs(u.u21)
    mag_stay = abs(u.u11)
    theta = 2.0 * math.atan2(mag_flip, mag_stay)
    phi_plus_psi = 2.0 * cmath.phase(u.u11) if mag_stay > 1e-15 else 0.0
    phi_minus_psi = -2.0 * cmath.phase(u.u21 / 1j) if mag_flip > 1e-15 else 0.0
    return EulerAngles(
        phi=0.5 * (phi_plus_psi + phi_minus_psi),
        theta=theta,
        psi=0.5 * (phi_plus_psi - phi_minus_psi),
    )


def _reduced_entry_sum(j: float, m: float, mp: float, sin_half: float, cos_half: float) -> float:
    """Alternating sum of sin/cos powers over the free summation index."""
    nu_min = max(0, round(m - mp))
    nu_max = min(round(j + m), round(j - mp))
    total = 0.0
    for nu in range(nu_min, nu_max + 1):
        e_sin = 2 * nu - round(m - mp)
        e_cos = round(2 * j) - 2 * nu + round(m - mp)
        log_den = (
            _LOG_FACT[nu]
            + _LOG_FACT[nu - round(m - mp)]
            + _LOG_FACT[round(j + m) - nu]
            + _LOG_FACT[round(j - mp) - nu]
        )
        if (e_sin and sin_half == 0.0) or (e_cos and cos_half == 0.0):
            continue
        mag = math.exp(-log_den)
        if e_sin:
            mag *= sin_half ** e_sin
        if e_cos:
            mag *= cos_half ** e_cos
        total += -mag if nu % 2 else mag
    return total


def wigner_d(j: float, angles: EulerAngles) -> SpinJMatrix:
    """Full rotation matrix for spin j at the given Euler angles.

    Factorials enter through a fixed log-factorial table (reproducible up
    to j = 25); the summation order over the internal index is fixed
    ascending.
    """
    j = _check_j(j)
    dim = round(2 * j) + 1
    ms = [j - i for i in range(dim)]
    sin_half = math.sin(0.5 * angles.theta)
    cos_half = math.cos(0.5 * angles.theta)
    out = np.zeros((dim, dim), dtype=complex)
    for a, m in enumerate(ms):
        for b, mp in enumerate(ms):
            log_norm = 0.5 * (
                _LOG_FACT[round(j + m)]
                + _LOG_FACT[round(j - m)]
                + _LOG_FACT[round(j + mp)]
                + _LOG_FACT[round(j - mp)]
            )
            reduced = _reduced_entry_sum(j, m, mp, sin_half, cos_half)
            phase = (1j) ** round(mp - m) * cmath.exp(1j * (m * angles.phi + mp * angles.psi))
            out[a, b] = phase * math.exp(log_norm) * reduced
    return SpinJMatrix(j=j, entries=out)


def transition_probability_j(j: float, m: float, m_prime: float, theta: float) -> float:
    """Probability of the m -> m' transition for spin j at rotation angle theta.

    Evaluates the factorial prefactor times the squared alternating
    tan-power sum with its cos^(4J)(theta/2) weight.  The cos^(2J) half
    of the weight is distributed into the sum term by term (an exact
    regrouping), so every power that appears is non-negative and the
    expression stays finite on the whole closed interval [0, pi].
    """
    j = _check_j(j)
    m = _check_projection(j, m, "m")
    m_prime = _check_projection(j, m_prime, "m_prime")

    half = 0.5 * theta
    sin_half = math.sin(half)
    cos_half = math.cos(half)
    nu_min = max(0, round(m - m_prime))
    nu_max = min(round(j + m), round(j - m_prime))
    if nu_max < nu_min:
        return 0.0

    log_norm = (
        _LOG_FACT[round(j + m)]
        + _LOG_FACT[round(j - m)]
        + _LOG_FACT[round(j + m_prime)]
        + _LOG_FACT[round(j - m_prime)]
    )

    total = 0.0
    for nu in range(nu_min, nu_max + 1):
        e_sin = 2 * nu - round(m - m_prime)
        e_cos = round(2 * j) - e_sin
        if (e_sin and sin_half == 0.0) or (e_cos and cos_half == 0.0):
            continue
        log_den = (
            _LOG_FACT[nu]
            + _LOG_FACT[nu - round(m - m_prime)]
            + _LOG_FACT[round(j + m) - nu]
            + _LOG_FACT[round(j - m_prime) - nu]
        )
        term = math.exp(-log_den)
        if e_sin:
            term *= sin_half ** e_sin
        if e_cos:
            term *= cos_half ** e_cos
        total += -term if nu % 2 else term
    return math.exp(log_norm) * total * total
