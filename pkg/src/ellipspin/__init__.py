"""Spin-1/2 (and spin-J) dynamics in an elliptically modulated magnetic field.

The driving field (h0 cn, h0 sn, H0 dn) interpolates between a circular
drive (k = 0) and exponential pulses (k = 1) through the elliptic modulus
k.  The package integrates the two-level Schrodinger dynamics, verifies
the exact modulus-independent resonance result, reduces the off-resonance
problem to a four-point Fuchsian equation whose continued solutions give
an independent flip probability, and lifts the propagator to arbitrary
spin through Euler angles and rotation matrices.
"""

from .elliptic import (
    EllipticTriple,
    QuarterPeriods,
    complete_elliptic,
    jacobi,
    jacobi_identity_residuals,
    quarter_period,
)
from .errors import (
    DomainError,
    EllipspinError,
    IntegrationError,
    LogarithmicCaseError,
    PathError,
    StepError,
)
from .heun import (
    SELECTIONS,
    AlgebraicCoefficients,
    Continuation,
    ExponentSet,
    HeunData,
    LocalSeries,
    algebraic_coefficients,
    continue_along_path,
    flip_probability_heun,
    heun_coordinate,
    heun_coordinate_derivative,
    heun_parameters,
    indicial_exponents,
    local_series,
    w_factor,
    z_of_tau,
)
from .observables import (
    InvariantResiduals,
    Polarization,
    bloch_residual,
    four_vector_residuals,
    lame_residual,
    polarization,
    resonance_polarization,
)
from .spin_dynamics import (
    Frame,
    FrameMap,
    Propagator,
    SimParams,
    SpinState,
    Trajectory,
    derive_parameters,
    evolve,
    gauge_factor,
    hamiltonian,
    map_frame,
    propagator,
    rabi_probability,
    resonance_solution,
)
from .wigner import EulerAngles, SpinJMatrix, euler_angles, transition_probability_j, wigner_d

__version__ = "0.1.0"

__all__ = [
    "AlgebraicCoefficients",
    "Continuation",
    "DomainError",
    "EllipspinError",
    "EllipticTriple",
    "EulerAngles",
    "ExponentSet",
    "Frame",
    "FrameMap",
    "HeunData",
    "IntegrationError",
    "InvariantResiduals",
    "LocalSeries",
    "LogarithmicCaseError",
    "PathError",
    "Polarization",
    "Propagator",
    "QuarterPeriods",
    "SELECTIONS",
    "SimParams",
    "SpinJMatrix",
    "SpinState",
    "StepError",
    "Trajectory",
    "algebraic_coefficients",
    "bloch_residual",
    "complete_elliptic",
    "continue_along_path",
    "derive_parameters",
    "euler_angles",
    "evolve",
    "flip_probability_heun",
    "four_vector_residuals",
    "gauge_factor",
    "hamiltonian",
    "heun_coordinate",
    "heun_coordinate_derivative",
    "heun_parameters",
    "indicial_exponents",
    "jacobi",
    "jacobi_identity_residuals",
    "lame_residual",
    "local_series",
    "map_frame",
    "polarization",
    "propagator",
    "quarter_period",
    "rabi_probability",
    "resonance_polarization",
    "resonance_solution",
    "transition_probability_j",
    "w_factor",
    "wigner_d",
    "z_of_tau",
]
