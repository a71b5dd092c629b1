"""Combined mean/moment dynamics and the statistical cumulant checks."""

import numpy as np
import pytest

from oscqubit.envelope import TLSParams, state_from_bloch, DIABATIC
from oscqubit.fitting import fit_exponential
from oscqubit.moments import (
    ForcingSpec,
    bloch_from_moments,
    build_combined_generator,
    cumulant_cancellation_check,
    evolve_combined,
    fourth_order_check,
    moments_from_bloch,
    tetradic_dissipator,
)
from oscqubit.noise import OUParams, spectral_weight
from oscqubit.redfield import build_generator, integrate_redfield

TLS = TLSParams(delta=1.0, eps0=1.5)
NOISE = OUParams(0.5, 0.5)


def reference_dissipator(tls: TLSParams, noise: OUParams) -> np.ndarray:
    """Independent transcription of the moment-space dissipator.

    Entries written out by hand from the second-order average with
    intermediate-state spectral weights; basis order
    (p1*p1, p1*p2, p2*p1, p2*p2).
    """
    omega = tls.splitting
    a = tls.eps0 / (2.0 * omega)
    b = -tls.delta / (2.0 * omega)
    k0 = spectral_weight(noise, omega, 0)
    kp = spectral_weight(noise, omega, +1)
    km = spectral_weight(noise, omega, -1)
    ks = kp + km
    m = np.array(
        [
            [-b * b * ks, 2 * a * b * k0, 2 * a * b * k0, b * b * ks],
            [2 * a * b * kp, -(2 * b * b * km + 4 * a * a * k0), 2 * b * b * kp, -2 * a * b * kp],
            [2 * a * b * km, 2 * b * b * km, -(2 * b * b * kp + 4 * a * a * k0), -2 * a * b * km],
            [b * b * ks, -2 * a * b * k0, -2 * a * b * k0, -b * b * ks],
        ],
        dtype=complex,
    )
    return m


class TestForcingSpec:
    def test_validation(self):
        with pytest.raises(ValueError):
            ForcingSpec(amp1=-0.1)
        with pytest.raises(ValueError):
            ForcingSpec(tau_f=0.0)
        with pytest.raises(ValueError):
            ForcingSpec(cross=1.5)

    def test_amplitude_matrix_is_psd(self):
        spec = ForcingSpec(amp1=0.3, amp2=0.2, cross=-0.9)
        eigs = np.linalg.eigvalsh(spec.amplitude_matrix)
        assert np.all(eigs >= -1e-15)


class TestTetradicDissipator:
    def test_matches_independent_transcription(self):
        gen = build_generator(TLS, NOISE)
        np.testing.assert_allclose(
            tetradic_dissipator(gen), reference_dissipator(TLS, NOISE), atol=1e-14
        )

    def test_trace_preservation(self):
        gen = build_generator(TLS, NOISE)
        d4 = tetradic_dissipator(gen)
        # the action on the population sum vanishes for every input
        assert np.max(np.abs(d4[0] + d4[3])) < 1e-12

    def test_hermiticity_preserved(self):
        gen = build_generator(TLS, NOISE)
        d4 = tetradic_dissipator(gen)
        rng = np.random.default_rng(5)
        for _ in range(10):
            r = rng.uniform(-0.5, 0.5, size=3)
            v = moments_from_bloch(r)
            dv = d4 @ v
            assert dv[1] == pytest.approx(np.conj(dv[2]), abs=1e-14)
            assert abs(dv[0].imag) < 1e-14 and abs(dv[3].imag) < 1e-14

    def test_pure_detuning_noise_is_diagonal_dephasing(self):
        tls = TLSParams(delta=0.0, eps0=1.5)
        gen = build_generator(tls, NOISE)
        d4 = tetradic_dissipator(gen)
        off = d4 - np.diag(np.diag(d4))
        assert np.max(np.abs(off)) < 1e-15
        rate = NOISE.strength  # eps0^2 k0 / Omega^2 with Omega = eps0
        assert d4[1, 1] == pytest.approx(-rate, rel=1e-12)
        assert d4[2, 2] == pytest.approx(-rate, rel=1e-12)
        assert d4[0, 0] == pytest.approx(0.0, abs=1e-15)
        assert d4[3, 3] == pytest.approx(0.0, abs=1e-15)


class TestCombinedEvolution:
    def test_block_structure_with_zero_mean_forcing(self):
        cg = build_combined_generator(TLS, NOISE, ForcingSpec(amp1=0.2, cross=0.5))
        assert cg.mean_coupling_is_zero
        # moments seeded at zero stay at zero: the mean block cannot leak in
        psi0 = np.array([0.8, 0.6j])
        _, out = evolve_combined(cg, psi0, moments0=np.zeros(4, complex), dt=0.01, t_final=2.0)
        assert np.max(np.abs(out[:, 2:])) < 1e-12 or not np.allclose(cg.inhomogeneous[2:], 0)
        # and vice versa: zero mean state stays zero
        _, out2 = evolve_combined(
            build_combined_generator(TLS, NOISE), np.zeros(2, complex),
            moments0=moments_from_bloch(np.array([0.3, 0.0, 0.2])), dt=0.01, t_final=2.0,
        )
        assert np.max(np.abs(out2[:, :2])) < 1e-12

    def test_moment_block_matches_averaged_bloch_equations(self):
        # cross-module oracle: the moment-space dynamics must reproduce the
        # averaged component equations after the basis change
        gen = build_generator(TLS, NOISE)
        cg = build_combined_generator(TLS, NOISE)
        r0 = np.array([1.0, 0.0, 1.0]) / np.sqrt(2.0)
        psi0 = state_from_bloch(r0, frame=DIABATIC).psi
        times, out = evolve_combined(cg, psi0, dt=0.002, t_final=6.0, record_stride=5)
        r_mom, norm = bloch_from_moments(out[:, 2:])
        ref = integrate_redfield(gen, r0, 0.002, 6.0, picture="schrodinger", record_stride=5)
        assert np.max(np.abs(r_mom - ref.r)) < 1e-8
        np.testing.assert_allclose(norm, 1.0, atol=1e-10)

    def test_forcing_pumps_offsets_but_not_rates(self):
        # correlated forcing adds a constant inhomogeneity: trajectories
        # acquire pumped offsets, but relaxation exponents stay those of the
        # homogeneous system (the difference of two forced runs relaxes at
        # exactly the unforced coherence rate)
        forcing = ForcingSpec(amp1=0.25, amp2=0.25, tau_f=0.8, cross=0.8)
        cg_f = build_combined_generator(TLS, NOISE, forcing)
        cg_0 = build_combined_generator(TLS, NOISE)
        assert np.max(np.abs(cg_f.inhomogeneous[2:])) > 0
        psi_a = state_from_bloch(np.array([1.0, 0.0, 0.0]), frame=DIABATIC).psi
        psi_b = state_from_bloch(np.array([-1.0, 0.0, 0.0]), frame=DIABATIC).psi
        t_final, dt = 25.0, 0.005
        times, out_fa = evolve_combined(cg_f, psi_a, dt=dt, t_final=t_final, record_stride=20)
        _, out_fb = evolve_combined(cg_f, psi_b, dt=dt, t_final=t_final, record_stride=20)
        _, out_0 = evolve_combined(cg_0, psi_a, dt=dt, t_final=t_final, record_stride=20)
        # pumped offsets: forced coherences sit well above the decayed
        # unforced ones at late times
        assert abs(out_fa[-1, 3]) > 10.0 * abs(out_0[-1, 3])
        from oscqubit.redfield import relaxation_times

        t2 = relaxation_times(build_generator(TLS, NOISE)).t2_inv
        window = (0.5 / t2, 2.5 / t2)
        rate_free = fit_exponential(times, np.abs(out_0[:, 3]), window=window).rate
        rate_forced = fit_exponential(
            times, 0.5 * np.abs(out_fa[:, 3] - out_fb[:, 3]), window=window
        ).rate
        assert abs(rate_forced - rate_free) / rate_free < 0.03

    def test_block_triangular_with_nonzero_mean_force(self):
        # the mean block never feels the moments, even when a nonzero mean
        # force couples the moments to the means
        forcing = ForcingSpec(mean1=0.1 + 0.05j, mean2=-0.02j, amp1=0.1, tau_f=0.5)
        cg = build_combined_generator(TLS, NOISE, forcing)
        assert not cg.mean_coupling_is_zero
        psi0 = np.array([0.7, 0.3j])
        _, out_a = evolve_combined(cg, psi0, moments0=np.zeros(4, complex), dt=0.01, t_final=2.0)
        _, out_b = evolve_combined(
            cg, psi0, moments0=moments_from_bloch(np.array([0.2, -0.1, 0.3])),
            dt=0.01, t_final=2.0,
        )
        np.testing.assert_array_equal(out_a[:, :2], out_b[:, :2])
        # and the moments do feel the mean force
        assert np.max(np.abs(out_a[:, 2:] - out_b[:, 2:])) > 1e-3

    def test_pump_hermiticity(self):
        cg = build_combined_generator(TLS, NOISE, ForcingSpec(amp1=0.3, amp2=0.1, cross=0.4))
        pump = cg.inhomogeneous[2:]
        assert pump[0].imag == pytest.approx(0.0, abs=1e-15)
        assert pump[3].imag == pytest.approx(0.0, abs=1e-15)
        assert pump[1] == pytest.approx(np.conj(pump[2]), abs=1e-15)
        assert pump[0].real > 0 and pump[3].real > 0


class TestCumulantCancellation:
    def test_no_drive_cancels_identically(self):
        tls = TLSParams(delta=1.0, eps0=1.5, drive_amp=0.0)
        report = cumulant_cancellation_check(tls, NOISE, n_samples=2000, seed=1)
        assert report.passed
        assert report.max_abs == 0.0

    def test_zero_strength_trivial(self):
        tls = TLSParams(delta=1.0, eps0=1.5, drive_amp=0.5, drive_freq=1.0)
        report = cumulant_cancellation_check(tls, OUParams(0.0, 0.5), n_samples=2000, seed=1)
        assert report.passed
        assert report.max_abs < 1e-13  # both sides vanish up to summation roundoff

    def test_driven_case_statistically_zero(self):
        tls = TLSParams(delta=1.0, eps0=1.5, drive_amp=0.5, drive_freq=1.0)
        noise = OUParams(0.3, 0.5)
        report = cumulant_cancellation_check(tls, noise, n_samples=10_000, seed=2)
        assert report.passed, report.line()
        assert report.max_sigma < 3.0

    def test_white_noise_rejected(self):
        with pytest.raises(ValueError):
            cumulant_cancellation_check(TLS, OUParams(0.5, 0.0), n_samples=2000)


class TestFourthOrder:
    def test_gaussian_noise_passes(self):
        kurt, tup = fourth_order_check(NOISE, n_samples=10_000, seed=3)
        assert kurt.passed, kurt.line()
        assert tup.passed, tup.line()

    def test_non_gaussian_control_fails(self):
        _, tup = fourth_order_check(
            NOISE, n_samples=10_000, seed=3, non_gaussian_control=True
        )
        assert not tup.passed

    def test_white_noise_rejected(self):
        with pytest.raises(ValueError):
            fourth_order_check(OUParams(0.5, 0.0), n_samples=2000)
