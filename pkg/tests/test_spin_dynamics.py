"""Tests for the two-level dynamics: frames, integration, closed forms."""

import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import ellipspin.spin_dynamics as sd
from ellipspin import (
    DomainError,
    Frame,
    FrameMap,
    IntegrationError,
    SimParams,
    SpinState,
    derive_parameters,
    evolve,
    gauge_factor,
    hamiltonian,
    jacobi,
    map_frame,
    propagator,
    quarter_period,
    rabi_probability,
    resonance_solution,
)

# Hand value for g = 2, h0 = 1 mT, omega = 1e9 rad/s using the published
# CODATA-2018 ratio mu_B / hbar = 8.7941000595e10 1/(s T):
# h/omega = (g/2) * (mu_B/hbar) * h0 / omega.
HAND_H_OVER_OMEGA = 8.7941000595e10 * 1e-3 / 1e9


def spin_up() -> SpinState:
    return SpinState(1.0 + 0j, 0.0j)


class TestDeriveParameters:
    def test_zero_transverse_amplitude(self):
        p = derive_parameters(2.0, 0.0, 1e-3, 1e9)
        assert p.h_over_omega == 0.0

    def test_resonance_condition(self):
        # Choose H0 so the longitudinal rate is half the drive frequency.
        omega = 1e9
        h0_res = sd.HBAR * omega / (2.0 * sd.BOHR_MAGNETON)
        p = derive_parameters(2.0, 1e-4, h0_res, omega)
        assert p.delta_over_omega == pytest.approx(0.0, abs=1e-15)

    def test_hand_computed_value(self):
        p = derive_parameters(2.0, 1e-3, 5e-3, 1e9)
        assert p.h_over_omega == pytest.approx(HAND_H_OVER_OMEGA, rel=1e-9)
        assert p.H_over_omega == pytest.approx(5.0 * HAND_H_OVER_OMEGA, rel=1e-9)

    @pytest.mark.parametrize("omega", [0.0, -1.0, math.nan])
    def test_rejects_bad_omega(self, omega):
        with pytest.raises(DomainError):
            derive_parameters(2.0, 1e-3, 1e-3, omega)


class TestSimParams:
    def test_detuning_and_rabi(self):
        p = SimParams.from_detuning(0.3, 0.4, 0.0)
        assert p.H_over_omega == pytest.approx(0.9)
        assert p.delta_over_omega == pytest.approx(0.4)
        assert p.rabi_over_omega == pytest.approx(0.5)

    @pytest.mark.parametrize("k", [-0.1, 1.1, math.nan])
    def test_rejects_bad_modulus(self, k):
        with pytest.raises(DomainError):
            SimParams(0.1, 0.5, k)


class TestHamiltonian:
    def test_lab_at_origin(self):
        p = SimParams.from_detuning(0.25, 0.1, 0.6)
        m = hamiltonian(0.0, p, Frame.LAB)
        expected = np.array(
            [[p.H_over_omega, 0.25], [0.25, -p.H_over_omega]], dtype=complex
        )
        assert np.allclose(m, expected, atol=0.0)

    def test_rotating_constant_at_resonance(self):
        for k in (0.0, 0.5, 0.99):
            p = SimParams.from_detuning(0.3, 0.0, k)
            for tau in (0.0, 1.3, 4.0, 9.2):
                m = hamiltonian(tau, p, Frame.ROTATING)
                assert np.allclose(m, [[0.0, 0.3], [0.3, 0.0]], atol=0.0)

    def test_lab_circular_limit(self):
        p = SimParams.from_detuning(0.2, 0.1, 0.0)
        for tau in (0.3, 1.1, 2.8):
            m = hamiltonian(tau, p, Frame.LAB)
            assert m[0, 1] == pytest.approx(0.2 * cmath.exp(-1j * tau), abs=1e-15)
            assert m[0, 0] == pytest.approx(p.H_over_omega, abs=1e-15)

    def test_hermitian(self):
        p = SimParams.from_detuning(0.4, -0.2, 0.7)
        for frame in Frame:
            m = hamiltonian(1.7, p, frame)
            assert np.array_equal(m, m.conj().T)


class TestGaugeFactor:
    def test_at_origin(self):
        assert gauge_factor(0.0, 0.5) == 1.0

    def test_circular_quarter_turn(self):
        f = gauge_factor(0.5 * math.pi, 0.0)
        assert f == pytest.approx((1.0 - 1.0j) / math.sqrt(2.0), abs=1e-15)

    @given(
        tau=st.floats(min_value=-20.0, max_value=20.0),
        k=st.floats(min_value=0.0, max_value=0.99),
    )
    @settings(max_examples=200, deadline=None)
    def test_square_matches_elliptic_values(self, tau, k):
        f = gauge_factor(tau, k)
        trip = jacobi(tau, k)
        assert abs(abs(f) - 1.0) < 1e-12
        assert abs(f * f - complex(trip.cn, -trip.sn)) < 1e-12


class TestMapFrame:
    def test_identity_at_origin(self):
        s = SpinState(0.6 + 0.0j, 0.8j)
        out = map_frame(s, 0.0, 0.7, FrameMap.LAB_TO_ROT)
        assert out == s

    def test_round_trip(self):
        s = SpinState(0.6 + 0.0j, 0.8j)
        for tau in (0.4, 2.9, 7.7):
            back = map_frame(
                map_frame(s, tau, 0.5, FrameMap.LAB_TO_ROT), tau, 0.5, FrameMap.ROT_TO_LAB
            )
            assert abs(back.psi1 - s.psi1) < 1e-14
            assert abs(back.psi2 - s.psi2) < 1e-14

    def test_component_magnitudes_invariant(self):
        s = SpinState(math.sqrt(0.3) + 0j, complex(0.1, math.sqrt(0.69)))
        for tau in (0.9, 3.3):
            out = map_frame(s, tau, 0.8, FrameMap.ROT_TO_LAB)
            assert abs(abs(out.psi1) - abs(s.psi1)) < 1e-14
            assert abs(abs(out.psi2) - abs(s.psi2)) < 1e-14


class TestEvolve:
    def test_resonance_flip_probability(self):
        p = SimParams.from_detuning(0.25, 0.0, 0.7)
        taus = np.linspace(0.0, 20.0, 501)
        traj = evolve(spin_up(), p, taus)
        assert np.max(np.abs(traj.p_flip - np.sin(0.25 * taus) ** 2)) < 1e-8

    def test_rabi_flip_probability(self):
        p = SimParams.from_detuning(0.3, 0.4, 0.0)
        taus = np.linspace(0.0, 20.0, 501)
        traj = evolve(spin_up(), p, taus)
        expected = 0.36 * np.sin(0.5 * taus) ** 2
        assert np.max(np.abs(traj.p_flip - expected)) < 1e-8
        # Spot value at tau = pi.
        traj_pi = evolve(spin_up(), p, [0.0, math.pi])
        assert traj_pi.p_flip[-1] == pytest.approx(0.36, abs=1e-8)

    def test_initial_sample(self):
        p = SimParams.from_detuning(0.2, 0.1, 0.5)
        traj = evolve(spin_up(), p, [0.0, 1.0])
        assert traj.p_flip[0] == 0.0

    def test_norm_conservation(self):
        p = SimParams.from_detuning(0.8, -0.3, 0.9)
        traj = evolve(spin_up(), p, np.linspace(0.0, 30.0, 301), tol=1e-10)
        assert np.max(traj.norm_drift) < 10.0 * 1e-8

    def test_taus_strictly_increasing_required(self):
        p = SimParams.from_detuning(0.2, 0.0, 0.0)
        with pytest.raises(DomainError):
            evolve(spin_up(), p, [0.0, 1.0, 1.0])
        with pytest.raises(DomainError):
            evolve(spin_up(), p, [0.5, 1.0])

    def test_rejects_bad_tolerance_and_state(self):
        p = SimParams.from_detuning(0.2, 0.0, 0.0)
        with pytest.raises(DomainError):
            evolve(spin_up(), p, [0.0, 1.0], tol=0.0)
        with pytest.raises(DomainError):
            evolve(SpinState(1.0 + 0j, 1.0 + 0j), p, [0.0, 1.0])

    def test_frame_consistency(self):
        # Direct lab integration against the gauge-mapped rotating one,
        # inside the first branch window of the gauge factor.
        p = SimParams.from_detuning(0.35, 0.15, 0.6)
        window = 1.9 * quarter_period(p.k)
        taus = np.linspace(0.0, window, 101)
        traj = evolve(spin_up(), p, taus)
        lab = sd.evolve_lab_frame(spin_up(), p, taus)
        assert np.max(np.abs(lab - traj.lab)) < 1e-8

    def test_gauge_phase_jump_cancels_in_magnitudes(self):
        # Beyond the branch window the lab amplitudes may differ by an
        # overall sign; every measurable magnitude still agrees.
        p = SimParams.from_detuning(0.35, 0.15, 0.6)
        taus = np.linspace(0.0, 20.0, 201)
        traj = evolve(spin_up(), p, taus)
        lab = sd.evolve_lab_frame(spin_up(), p, taus)
        assert np.max(np.abs(np.abs(lab) - np.abs(traj.lab))) < 1e-8

    def test_resonance_modulus_independence(self):
        taus = np.linspace(0.0, 20.0, 401)
        base = evolve(spin_up(), SimParams.from_detuning(0.25, 0.0, 0.0), taus)
        for k in (0.3, 0.7, 0.99):
            traj = evolve(spin_up(), SimParams.from_detuning(0.25, 0.0, k), taus)
            assert np.max(np.abs(traj.p_flip - base.p_flip)) < 1e-8

    def test_trajectory_container_invariants(self):
        p = SimParams.from_detuning(0.6, 0.3, 0.85)
        tol = 1e-10
        traj = evolve(spin_up(), p, np.linspace(0.0, 25.0, 251), tol=tol)
        assert np.all(np.diff(traj.taus) > 0.0)
        assert np.all(traj.p_flip >= 0.0)
        assert np.all(traj.p_flip <= 1.0 + 10.0 * tol)
        samples = list(traj)
        assert len(samples) == len(traj)
        mid = samples[125]
        assert mid.tau == traj.taus[125]
        assert mid.p_flip == abs(mid.rot_state.psi2) ** 2
        assert abs(mid.lab_state.psi1) == pytest.approx(abs(mid.rot_state.psi1), abs=1e-14)


class TestPropagator:
    def test_identity_at_origin(self):
        p = SimParams.from_detuning(0.2, 0.1, 0.5)
        u = propagator(0.0, p)
        assert np.allclose(u.as_matrix(), np.eye(2), atol=0.0)

    def test_resonance_closed_form(self):
        p = SimParams.from_detuning(0.3, 0.0, 0.6)
        for tau in (0.7, 2.1, 5.6):
            u = propagator(tau, p)
            f = gauge_factor(tau, 0.6)
            c, s = math.cos(0.3 * tau), math.sin(0.3 * tau)
            expected = np.array(
                [[f * c, -1j * f * s], [-1j * f.conjugate() * s, f.conjugate() * c]]
            )
            assert np.max(np.abs(u.as_matrix() - expected)) < 1e-9

    def test_unitarity_and_determinant(self):
        rng = np.random.default_rng(3)
        for _ in range(6):
            p = SimParams.from_detuning(
                float(rng.uniform(0.1, 1.0)),
                float(rng.uniform(-0.5, 0.5)),
                float(rng.uniform(0.0, 0.95)),
            )
            tau = float(rng.uniform(0.1, 12.0))
            u = propagator(tau, p)
            assert u.unitarity_defect() < 1e-9
            det = u.u11 * u.u22 - u.u12 * u.u21
            assert abs(abs(det) - 1.0) < 1e-9

    def test_apply_matches_evolve(self):
        p = SimParams.from_detuning(0.4, 0.2, 0.8)
        initial = SpinState(complex(0.6, 0.1), complex(-0.2, 0.768114574786861))
        initial.require_normalized(1e-12)
        for tau in (0.9, 3.7):
            u = propagator(tau, p)
            direct = evolve(initial, p, [0.0, tau])
            applied = u.apply(initial)
            assert abs(applied.psi1 - direct.lab[-1, 0]) < 1e-8
            assert abs(applied.psi2 - direct.lab[-1, 1]) < 1e-8


class TestClosedForms:
    def test_rabi_probability_values(self):
        p = SimParams.from_detuning(0.3, 0.4, 0.0)
        assert rabi_probability(math.pi, p) == pytest.approx(0.36, abs=1e-15)
        res = SimParams.from_detuning(0.3, 0.0, 0.0)
        for tau in (0.5, 1.5):
            assert rabi_probability(tau, res) == pytest.approx(
                math.sin(0.3 * tau) ** 2, abs=1e-15
            )
        silent = SimParams.from_detuning(0.0, 0.4, 0.0)
        assert rabi_probability(2.2, silent) == 0.0

    def test_rabi_requires_circular_drive(self):
        with pytest.raises(DomainError):
            rabi_probability(1.0, SimParams.from_detuning(0.3, 0.4, 0.5))

    def test_resonance_solution_at_origin(self):
        p = SimParams.from_detuning(0.3, 0.0, 0.5)
        s = resonance_solution(0.0, p)
        assert s.psi1 == 1.0 and s.psi2 == 0.0

    def test_resonance_full_flip_any_modulus(self):
        for k in (0.0, 0.4, 0.9, 1.0):
            p = SimParams.from_detuning(0.25, 0.0, k)
            tau = 0.5 * math.pi / 0.25
            s = resonance_solution(tau, p)
            assert abs(s.psi2) ** 2 == pytest.approx(1.0, abs=1e-12)

    def test_resonance_requires_zero_detuning(self):
        with pytest.raises(DomainError):
            resonance_solution(1.0, SimParams.from_detuning(0.3, 0.01, 0.5))

    def test_resonance_solution_matches_ode(self):
        # 100 (tau, k) points, grouped per modulus into one integration.
        rng = np.random.default_rng(5)
        for k in (0.05, 0.3, 0.55, 0.8, 0.97):
            p = SimParams.from_detuning(0.3, 0.0, float(k))
            taus = np.concatenate([[0.0], np.sort(rng.uniform(0.1, 15.0, 20))])
            traj = evolve(spin_up(), p, taus)
            for i, tau in enumerate(taus):
                s = resonance_solution(float(tau), p)
                assert abs(s.psi1 - traj.lab[i, 0]) < 1e-8
                assert abs(s.psi2 - traj.lab[i, 1]) < 1e-8


class TestFundamentalSystem:
    def test_wronskian_constant(self):
        p = SimParams.from_detuning(0.45, -0.25, 0.75)
        taus = np.linspace(0.0, 15.0, 151)
        traj_a = evolve(spin_up(), p, taus)
        traj_b = evolve(SpinState(0.0j, 1.0 + 0j), p, taus)
        w = []
        for i, tau in enumerate(taus):
            fa, fb = complex(traj_a.rot[i, 1]), complex(traj_b.rot[i, 1])
            da = sd.rotating_rhs(float(tau), p, complex(traj_a.rot[i, 0]), fa)[1]
            db = sd.rotating_rhs(float(tau), p, complex(traj_b.rot[i, 0]), fb)[1]
            w.append(fa * db - fb * da)
        w = np.array(w)
        assert np.max(np.abs(w - w[0])) < 1e-8

    def test_probability_from_fundamental_pair(self):
        p = SimParams.from_detuning(0.3, 0.2, 0.5)
        ic_a = SpinState(math.sqrt(0.5) + 0j, math.sqrt(0.5) + 0j)
        ic_b = SpinState(math.sqrt(0.5) + 0j, -math.sqrt(0.5) + 0j)
        for tau in (0.8, 2.5, 6.0):
            direct = float(evolve(spin_up(), p, [0.0, tau]).p_flip[-1])
            assembled = sd.probability_from_fundamental_pair(tau, p, ic_a, ic_b)
            assert abs(direct - assembled) < 1e-8

    def test_degenerate_pair_rejected(self):
        p = SimParams.from_detuning(0.3, 0.2, 0.5)
        s = SpinState(math.sqrt(0.5) + 0j, math.sqrt(0.5) + 0j)
        with pytest.raises(DomainError):
            sd.probability_from_fundamental_pair(1.0, p, s, s)


class TestIntegratorFailure:
    def test_step_underflow_reports_last_good_tau(self):
        from ellipspin import _dopri

        # Finite-time blow-up at t = 1 forces the step size to collapse.
        def rhs(t, y1, y2):
            return (y1 / (1.0 - t), 0.0j)

        with pytest.raises(IntegrationError) as err:
            _dopri.integrate(rhs, (1.0 + 0j, 0.0j), (0.0, 1.0), 1e-10, 0.1)
        assert 0.0 < err.value.last_good_tau < 1.0
