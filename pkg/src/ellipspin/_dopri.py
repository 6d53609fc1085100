"""Embedded Dormand-Prince 5(4) integrator for a two-component complex state.

The state is carried as a plain pair of Python complex numbers: the
systems integrated here are always 2x1, and scalar arithmetic beats any
array machinery at this size.  Absolute and relative tolerance are both
set to the same ``tol``.  Dense output onto requested sample times uses
cubic Hermite interpolation inside each accepted step; the step size is
capped so the interpolation error stays at the level of ``tol`` (the
Hermite error bound is h^4 |y''''| / 384).

No renormalization of any kind is applied to the state: norm drift is a
diagnostic the callers measure, not something to hide.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

from .errors import IntegrationError

# Dormand-Prince 5(4) tableau (the ode45 pair), FSAL.
_C2, _C3, _C4, _C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
_A21 = 1 / 5
_A31, _A32 = 3 / 40, 9 / 40
_A41, _A42, _A43 = 44 / 45, -56 / 15, 32 / 9
_A51, _A52, _A53, _A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
_A61, _A62, _A63, _A64, _A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
_B1, _B3, _B4, _B5, _B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71 / 57600,
    -71 / 16695,
    71 / 1920,
    -17253 / 339200,
    22 / 525,
    -1 / 40,
)

RHS = Callable[[float, complex, complex], tuple[complex, complex]]


def hermite_step_cap(tol: float, coeff_scale: float) -> float:
    """Largest step for which cubic Hermite dense output stays near ``tol``.

    ``coeff_scale`` bounds the magnitude of the system matrix (and hence,
    raised to the fourth power, the fourth derivative of the solution).
    """
    return (384.0 * tol) ** 0.25 / (1.0 + coeff_scale)


def integrate(
    rhs: RHS,
    y0: tuple[complex, complex],
    sample_taus: Sequence[float],
    tol: float,
    h_max: float,
) -> list[tuple[complex, complex]]:
    """Integrate from sample_taus[0] and return the state at every sample time.

    ``sample_taus`` must be non-decreasing.  Raises IntegrationError on
    step-size underflow, carrying the last time reached.
    """
    t = float(sample_taus[0])
    t_end = float(sample_taus[-1])
    y1, y2 = complex(y0[0]), complex(y0[1])
    f1a, f2a = rhs(t, y1, y2)

    out: list[tuple[complex, complex]] = []
    gi = 0
    while gi < len(sample_taus) and sample_taus[gi] <= t:
        out.append((y1, y2))
        gi += 1
    if gi >= len(sample_taus):
        return out

    h = min(h_max, max(1e-6, tol ** 0.2 / (1.0 + abs(f1a) + abs(f2a))), t_end - t)
    while t < t_end:
        final_step = h >= t_end - t
        if final_step:
            h = t_end - t
        if h < 1e-14 * max(1.0, abs(t)):
            raise IntegrationError("step size underflow", last_good_tau=t)

        k1_1, k1_2 = f1a, f2a
        tb = t + _C2 * h
        k2_1, k2_2 = rhs(tb, y1 + h * _A21 * k1_1, y2 + h * _A21 * k1_2)
        tb = t + _C3 * h
        k3_1, k3_2 = rhs(
            tb,
            y1 + h * (_A31 * k1_1 + _A32 * k2_1),
            y2 + h * (_A31 * k1_2 + _A32 * k2_2),
        )
        tb = t + _C4 * h
        k4_1, k4_2 = rhs(
            tb,
            y1 + h * (_A41 * k1_1 + _A42 * k2_1 + _A43 * k3_1),
            y2 + h * (_A41 * k1_2 + _A42 * k2_2 + _A43 * k3_2),
        )
        tb = t + _C5 * h
        k5_1, k5_2 = rhs(
            tb,
            y1 + h * (_A51 * k1_1 + _A52 * k2_1 + _A53 * k3_1 + _A54 * k4_1),
            y2 + h * (_A51 * k1_2 + _A52 * k2_2 + _A53 * k3_2 + _A54 * k4_2),
        )
        tb = t + h
        k6_1, k6_2 = rhs(
            tb,
            y1 + h * (_A61 * k1_1 + _A62 * k2_1 + _A63 * k3_1 + _A64 * k4_1 + _A65 * k5_1),
            y2 + h * (_A61 * k1_2 + _A62 * k2_2 + _A63 * k3_2 + _A64 * k4_2 + _A65 * k5_2),
        )
        y1n = y1 + h * (_B1 * k1_1 + _B3 * k3_1 + _B4 * k4_1 + _B5 * k5_1 + _B6 * k6_1)
        y2n = y2 + h * (_B1 * k1_2 + _B3 * k3_2 + _B4 * k4_2 + _B5 * k5_2 + _B6 * k6_2)
        k7_1, k7_2 = rhs(tb, y1n, y2n)

        e1 = h * (
            _E1 * k1_1 + _E3 * k3_1 + _E4 * k4_1 + _E5 * k5_1 + _E6 * k6_1 + _E7 * k7_1
        )
        e2 = h * (
            _E1 * k1_2 + _E3 * k3_2 + _E4 * k4_2 + _E5 * k5_2 + _E6 * k6_2 + _E7 * k7_2
        )
        s1 = tol + tol * max(abs(y1), abs(y1n))
        s2 = tol + tol * max(abs(y2), abs(y2n))
        err = math.sqrt(0.5 * ((abs(e1) / s1) ** 2 + (abs(e2) / s2) ** 2))

        if err <= 1.0:
            # Emit dense output for sample times inside (t, t + h].  The
            # final step lands on t_end exactly (t + h can fall an ulp
            # short and would leave an unsteppable sliver behind).
            t_new = t_end if final_step else t + h
            while gi < len(sample_taus) and sample_taus[gi] <= t_new:
                ts = sample_taus[gi]
                if ts == t_new:
                    out.append((y1n, y2n))
                else:
                    th = (ts - t) / h
                    h00 = (1.0 + 2.0 * th) * (1.0 - th) ** 2
                    h10 = th * (1.0 - th) ** 2
                    h01 = th * th * (3.0 - 2.0 * th)
                    h11 = th * th * (th - 1.0)
                    out.append(
                        (
                            h00 * y1 + h10 * h * k1_1 + h01 * y1n + h11 * h * k7_1,
                            h00 * y2 + h10 * h * k1_2 + h01 * y2n + h11 * h * k7_2,
                        )
                    )
                gi += 1
            t = t_new
            y1, y2 = y1n, y2n
            f1a, f2a = k7_1, k7_2
            if gi >= len(sample_taus):
                break

        if err == 0.0:
            factor = 5.0
        else:
            factor = min(5.0, max(0.2, 0.9 * err ** -0.2))
        h = min(h * factor, h_max)

    return out


def integrate_to(
    rhs: RHS, y0: tuple[complex, complex], tau: float, tol: float, h_max: float
) -> tuple[complex, complex]:
    """State at a single end time ``tau >= 0`` starting from tau = 0."""
    if tau == 0.0:
        return (complex(y0[0]), complex(y0[1]))
    return integrate(rhs, y0, (0.0, float(tau)), tol, h_max)[-1]
