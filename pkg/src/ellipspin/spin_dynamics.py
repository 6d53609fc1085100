"""Two-level spin dynamics in an elliptically modulated magnetic field.

The driving field has components (h0 cn(wt,k), h0 sn(wt,k), H0 dn(wt,k)).
In the dimensionless time tau = w t the problem is fixed by three numbers:
the transverse amplitude h/w, the longitudinal amplitude H/w (equivalently
the detuning D/w = H/w - 1/2), and the elliptic modulus k.

Two frames are used.  The lab frame carries the full oscillating
Hamiltonian; a unimodular gauge factor f(tau) = sqrt(cn - i sn) removes
the transverse phase winding and leaves the rotating-frame system with
smooth real coefficients, which is the one integrated by default (the lab
system is retained for cross-validation).  At zero detuning the rotating
system has constant coefficients and the dynamics is solvable in closed
form for every modulus; those closed forms are exposed here and serve as
oracles for the numerical path.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from . import _dopri
from .elliptic import jacobi
from .errors import DomainError

# CODATA 2018: Bohr magneton [J/T] and reduced Planck constant [J s].
BOHR_MAGNETON = 9.2740100783e-24
HBAR = 1.054571817e-34

DEFAULT_TOL = 1e-10


class Frame(enum.Enum):
    LAB = "lab"
    ROTATING = "rotating"


class FrameMap(enum.Enum):
    LAB_TO_ROT = "lab_to_rot"
    ROT_TO_LAB = "rot_to_lab"


@dataclass(frozen=True)
class SimParams:
    """Dimensionless problem parameters.

    Attributes
    ----------
    h_over_omega : transverse amplitude h/w.
    H_over_omega : longitudinal amplitude H/w.
    k : elliptic modulus in [0, 1].
    """

    h_over_omega: float
    H_over_omega: float
    k: float

    def __post_init__(self):
        for name in ("h_over_omega", "H_over_omega", "k"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise DomainError(f"{name} must be finite, got {v!r}")
        if not 0.0 <= self.k <= 1.0:
            raise DomainError(f"modulus k must lie in [0, 1], got {self.k!r}")

    @classmethod
    def from_detuning(cls, h_over_omega: float, delta_over_omega: float, k: float) -> "SimParams":
        return cls(h_over_omega=h_over_omega, H_over_omega=delta_over_omega + 0.5, k=k)

    @property
    def delta_over_omega(self) -> float:
        """Detuning D/w = H/w - 1/2; zero at the fundamental resonance."""
        return self.H_over_omega - 0.5

    @property
    def rabi_over_omega(self) -> float:
        """Flopping rate sqrt((h/w)^2 + (D/w)^2)."""
        return math.hypot(self.h_over_omega, self.delta_over_omega)


@dataclass(frozen=True)
class SpinState:
    """Two complex amplitudes with unit norm."""

    psi1: complex
    psi2: complex

    @property
    def norm_sq(self) -> float:
        return abs(self.psi1) ** 2 + abs(self.psi2) ** 2

    def require_normalized(self, tol: float = 1e-10) -> "SpinState":
        if abs(self.norm_sq - 1.0) > tol:
            raise DomainError(f"state norm^2 = {self.norm_sq!r} is not 1 within {tol!r}")
        return self


SPIN_UP = SpinState(1.0 + 0.0j, 0.0j)


@dataclass(frozen=True)
class TrajectorySample:
    tau: float
    lab_state: SpinState
    rot_state: SpinState
    p_flip: float
    polarization: tuple[float, float, float]


@dataclass(frozen=True)
class Trajectory:
    """Ordered samples of one integration, stored as parallel arrays."""

    taus: np.ndarray          # (n,)
    lab: np.ndarray           # (n, 2) complex
    rot: np.ndarray           # (n, 2) complex
    p_flip: np.ndarray        # (n,)
    polarization: np.ndarray  # (n, 3)

    def __len__(self) -> int:
        return len(self.taus)

    def __iter__(self) -> Iterator[TrajectorySample]:
        for i in range(len(self.taus)):
            yield TrajectorySample(
                tau=float(self.taus[i]),
                lab_state=SpinState(complex(self.lab[i, 0]), complex(self.lab[i, 1])),
                rot_state=SpinState(complex(self.rot[i, 0]), complex(self.rot[i, 1])),
                p_flip=float(self.p_flip[i]),
                polarization=tuple(self.polarization[i]),
            )

    @property
    def norm_drift(self) -> np.ndarray:
        """|norm^2 - 1| per sample; an accuracy diagnostic, never corrected."""
        n = np.abs(self.rot[:, 0]) ** 2 + np.abs(self.rot[:, 1]) ** 2
        return np.abs(n - 1.0)


@dataclass(frozen=True)
class Propagator:
    """Lab-frame time-evolution matrix; unitary with unit determinant."""

    u11: complex
    u12: complex
    u21: complex
    u22: complex

    def as_matrix(self) -> np.ndarray:
        return np.array([[self.u11, self.u12], [self.u21, self.u22]], dtype=complex)

    def unitarity_defect(self) -> float:
        u = self.as_matrix()
        return float(np.max(np.abs(u.conj().T @ u - np.eye(2))))

    def apply(self, state: SpinState) -> SpinState:
        return SpinState(
            self.u11 * state.psi1 + self.u12 * state.psi2,
            self.u21 * state.psi1 + self.u22 * state.psi2,
        )


def derive_parameters(
    g: float, h0_tesla: float, H0_tesla: float, omega: float, k: float = 0.0
) -> SimParams:
    """Dimensionless parameters from laboratory quantities.

    Uses H = g mu_B H0 / (2 hbar) and h = g mu_B h0 / (2 hbar) with the
    CODATA 2018 constants declared at module level.  ``omega`` is the
    drive frequency in rad/s and must be positive.
    """
    if not (omega > 0.0 and math.isfinite(omega)):
        raise DomainError(f"omega must be positive and finite, got {omega!r}")
    scale = g * BOHR_MAGNETON / (2.0 * HBAR * omega)
    return SimParams(h_over_omega=scale * h0_tesla, H_over_omega=scale * H0_tesla, k=k)


def hamiltonian(tau: float, params: SimParams, frame: Frame) -> np.ndarray:
    """2x2 Hermitian Hamiltonian in units of the drive frequency."""
    trip = jacobi(tau, params.k)
    a = params.h_over_omega
    if frame is Frame.LAB:
        diag = params.H_over_omega * trip.dn
        off = a * (trip.cn - 1j * trip.sn)
        return np.array([[diag, off], [off.conjugate(), -diag]], dtype=complex)
    diag = params.delta_over_omega * trip.dn
    return np.array([[diag, a], [a, -diag]], dtype=complex)


def gauge_factor(tau: float, k: float) -> complex:
    """Unimodular factor f = sqrt(cn - i sn) in its explicit half-angle form.

    The half-angle form fixes the square-root branch: f = sqrt((1+cn)/2)
    - i sign(sn) sqrt((1-cn)/2), with sign(0) taken as +1.  At isolated
    points where cn = -1 the value jumps between +i and -i; the jump is a
    pure gauge phase and cancels in every probability.
    """
    trip = jacobi(tau, k)
    # 1 -+ cn loses precision where cn is near +-1; the identity
    # 1 -+ cn = sn^2 / (1 +- cn) evaluates the same radicals stably.
    if trip.cn >= 0.0:
        re = math.sqrt(0.5 * (1.0 + trip.cn))
        im = math.sqrt(0.5 * trip.sn * trip.sn / (1.0 + trip.cn))
    else:
        re = math.sqrt(0.5 * trip.sn * trip.sn / (1.0 - trip.cn))
        im = math.sqrt(0.5 * (1.0 - trip.cn))
    sign = -1.0 if trip.sn < 0.0 else 1.0
    return complex(re, -sign * im)


def map_frame(state: SpinState, tau: float, k: float, direction: FrameMap) -> SpinState:
    """Apply diag(f, f*) (rot -> lab) or its inverse (lab -> rot)."""
    f = gauge_factor(tau, k)
    if direction is FrameMap.ROT_TO_LAB:
        return SpinState(f * state.psi1, f.conjugate() * state.psi2)
    # |f| = 1, so the inverse of diag(f, f*) is diag(f*, f).
    return SpinState(f.conjugate() * state.psi1, f * state.psi2)


def rotating_rhs(
    tau: float, params: SimParams, psi1: complex, psi2: complex
) -> tuple[complex, complex]:
    """Right-hand side of the rotating-frame Schrodinger system."""
    d = params.delta_over_omega * jacobi(tau, params.k).dn
    a = params.h_over_omega
    return (-1j * (d * psi1 + a * psi2), -1j * (a * psi1 - d * psi2))


def lab_rhs(
    tau: float, params: SimParams, psi1: complex, psi2: complex
) -> tuple[complex, complex]:
    """Right-hand side of the lab-frame Schrodinger system."""
    trip = jacobi(tau, params.k)
    d = params.H_over_omega * trip.dn
    off = params.h_over_omega * (trip.cn - 1j * trip.sn)
    return (
        -1j * (d * psi1 + off * psi2),
        -1j * (off.conjugate() * psi1 - d * psi2),
    )


def _coefficient_scale(params: SimParams) -> float:
    # Bounds the rotating-frame matrix norm plus the dn' modulation term;
    # feeds the cubic-Hermite step cap.
    d = abs(params.delta_over_omega)
    return abs(params.h_over_omega) + d * (1.0 + params.k ** 2) + 1.0


def _step_cap(params: SimParams, tol: float) -> float:
    return _dopri.hermite_step_cap(tol, _coefficient_scale(params))


def _bind_rotating(params: SimParams) -> _dopri.RHS:
    a = params.h_over_omega
    d0 = params.delta_over_omega
    k = params.k
    if d0 == 0.0:
        # dn drops out entirely at resonance; keep the closure elliptic-free.
        def rhs(tau: float, p1: complex, p2: complex) -> tuple[complex, complex]:
            return (-1j * a * p2, -1j * a * p1)

        return rhs

    def rhs(tau: float, p1: complex, p2: complex) -> tuple[complex, complex]:
        d = d0 * jacobi(tau, k).dn
        return (-1j * (d * p1 + a * p2), -1j * (a * p1 - d * p2))

    return rhs


def _validate_grid(tau_grid: Sequence[float]) -> np.ndarray:
    taus = np.asarray(tau_grid, dtype=float)
    if taus.ndim != 1 or len(taus) == 0:
        raise DomainError("tau grid must be a non-empty 1-d sequence")
    if taus[0] != 0.0:
        raise DomainError(f"tau grid must start at 0, got {taus[0]!r}")
    if len(taus) > 1 and not np.all(np.diff(taus) > 0.0):
        raise DomainError("tau grid must be strictly increasing")
    return taus


def _polarization_components(psi1: complex, psi2: complex) -> tuple[float, float, float]:
    cross = psi1.conjugate() * psi2
    return (
        2.0 * cross.real,
        2.0 * cross.imag,
        abs(psi1) ** 2 - abs(psi2) ** 2,
    )


def evolve(
    initial: SpinState,
    params: SimParams,
    tau_grid: Sequence[float],
    tol: float = DEFAULT_TOL,
) -> Trajectory:
    """Integrate the rotating-frame system and sample it on ``tau_grid``.

    The grid must start at 0 and increase strictly; ``tol`` is used as
    both the absolute and relative local tolerance of the embedded 5(4)
    pair.  Lab-frame amplitudes are recovered through the gauge factor,
    the flip probability is |psi2|^2, and the polarization vector is the
    Pauli expectation in the lab frame.  Norms are never renormalized.
    """
    if not tol > 0.0:
        raise DomainError(f"tol must be positive, got {tol!r}")
    initial.require_normalized()
    taus = _validate_grid(tau_grid)

    states = _dopri.integrate(
        _bind_rotating(params),
        (initial.psi1, initial.psi2),
        taus,
        tol,
        _step_cap(params, tol),
    )

    n = len(taus)
    rot = np.empty((n, 2), dtype=complex)
    lab = np.empty((n, 2), dtype=complex)
    p_flip = np.empty(n)
    pol = np.empty((n, 3))
    for i, (p1, p2) in enumerate(states):
        rot[i, 0], rot[i, 1] = p1, p2
        f = gauge_factor(taus[i], params.k)
        l1, l2 = f * p1, f.conjugate() * p2
        lab[i, 0], lab[i, 1] = l1, l2
        p_flip[i] = abs(p2) ** 2
        pol[i] = _polarization_components(l1, l2)
    return Trajectory(taus=taus, lab=lab, rot=rot, p_flip=p_flip, polarization=pol)


def evolve_lab_frame(
    initial: SpinState,
    params: SimParams,
    tau_grid: Sequence[float],
    tol: float = DEFAULT_TOL,
) -> np.ndarray:
    """Integrate the lab-frame system directly (cross-validation path).

    Returns the (n, 2) complex amplitude array on the grid.  The default
    simulation path is `evolve`; this one exists so the gauge
    transformation can be checked against an independent integration.
    """
    if not tol > 0.0:
        raise DomainError(f"tol must be positive, got {tol!r}")
    initial.require_normalized()
    taus = _validate_grid(tau_grid)

    def rhs(tau: float, p1: complex, p2: complex) -> tuple[complex, complex]:
        return lab_rhs(tau, params, p1, p2)

    states = _dopri.integrate(
        rhs, (initial.psi1, initial.psi2), taus, tol, _step_cap(params, tol)
    )
    return np.array(states, dtype=complex)


def propagator(tau: float, params: SimParams, tol: float = DEFAULT_TOL) -> Propagator:
    """Lab-frame propagator built by evolving the two basis states."""
    if not tol > 0.0:
        raise DomainError(f"tol must be positive, got {tol!r}")
    if tau < 0.0:
        raise DomainError(f"tau must be non-negative, got {tau!r}")
    rhs = _bind_rotating(params)
    cap = _step_cap(params, tol)
    a1, a2 = _dopri.integrate_to(rhs, (1.0 + 0j, 0.0j), tau, tol, cap)
    b1, b2 = _dopri.integrate_to(rhs, (0.0j, 1.0 + 0j), tau, tol, cap)
    f = gauge_factor(tau, params.k)
    fc = f.conjugate()
    return Propagator(u11=f * a1, u12=f * b1, u21=fc * a2, u22=fc * b2)


def rabi_probability(tau: float, params: SimParams) -> float:
    """Closed-form flip probability for the circular drive (k = 0)."""
    if params.k != 0.0:
        raise DomainError(f"closed Rabi form requires k = 0, got k = {params.k!r}")
    a = params.h_over_omega
    r = params.rabi_over_omega
    if r == 0.0:
        return 0.0
    return (a / r) ** 2 * math.sin(r * tau) ** 2


def resonance_solution(tau: float, params: SimParams) -> SpinState:
    """Exact lab-frame state at zero detuning, valid for every modulus."""
    if abs(params.delta_over_omega) > 1e-14:
        raise DomainError(
            f"resonance solution requires zero detuning, got {params.delta_over_omega!r}"
        )
    f = gauge_factor(tau, params.k)
    phase = params.h_over_omega * tau
    return SpinState(f * math.cos(phase), -1j * f.conjugate() * math.sin(phase))


def probability_from_fundamental_pair(
    tau: float,
    params: SimParams,
    ic_a: SpinState,
    ic_b: SpinState,
    tol: float = DEFAULT_TOL,
) -> float:
    """Flip probability assembled from any two independent solutions.

    The psi2 components of two rotating-frame solutions with initial
    conditions ``ic_a`` and ``ic_b`` form a fundamental system of the
    second-order flip-amplitude equation.  The probability for the
    spin-up Cauchy problem follows from them and their initial Wronskian
    alone, which makes this an independent cross-check of `evolve`.
    """
    rhs = _bind_rotating(params)
    cap = _step_cap(params, tol)
    fa0, fb0 = ic_a.psi2, ic_b.psi2
    da0 = rotating_rhs(0.0, params, ic_a.psi1, ic_a.psi2)[1]
    db0 = rotating_rhs(0.0, params, ic_b.psi1, ic_b.psi2)[1]
    wronskian0 = fa0 * db0 - fb0 * da0
    if abs(wronskian0) < 1e-13:
        raise DomainError("initial conditions do not span a fundamental system")
    _, fa = _dopri.integrate_to(rhs, (ic_a.psi1, ic_a.psi2), tau, tol, cap)
    _, fb = _dopri.integrate_to(rhs, (ic_b.psi1, ic_b.psi2), tau, tol, cap)
    a = params.h_over_omega
    return a * a * abs(fa * fb0 - fb * fa0) ** 2 / abs(wronskian0) ** 2
