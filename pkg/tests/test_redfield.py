"""Averaged relaxation: coefficients, closed-form rates, generators."""

import numpy as np
import pytest
from scipy.integrate import quad

from oscqubit.envelope import TLSParams, interaction_picture
from oscqubit.fitting import fit_exponential
from oscqubit.noise import OUParams
from oscqubit.redfield import (
    build_generator,
    compare_generators,
    dissipator_matrix,
    integrate_redfield,
    lindblad_generator,
    lindblad_matrix,
    relaxation_times,
)

FIG2 = TLSParams(delta=1.0, eps0=1.5)


def quad_weight(noise: OUParams, omega: float, alpha: int) -> complex:
    """Quadrature oracle for the one-sided spectral integral."""
    if noise.tau_c == 0.0:
        return complex(noise.strength)
    amp = noise.strength / noise.tau_c
    re = quad(lambda t: amp * np.exp(-t / noise.tau_c) * np.cos(alpha * omega * t), 0, 80)[0]
    im = quad(lambda t: amp * np.exp(-t / noise.tau_c) * np.sin(alpha * omega * t), 0, 80)[0]
    return re + 1j * im


class TestGeneratorCoefficients:
    def test_zero_detuning_kills_cross_terms(self):
        gen = build_generator(TLSParams(delta=1.0, eps0=0.0), OUParams(0.5, 0.0))
        assert gen.r00 == pytest.approx(0.5)
        assert gen.r0p == pytest.approx(0.0)
        assert gen.rp0 == pytest.approx(0.0)
        assert gen.rpp == pytest.approx(0.25)
        assert gen.rpm == pytest.approx(-0.25)

    def test_fig2_white_values(self):
        gen = build_generator(FIG2, OUParams(0.5, 0.0))
        assert gen.r00 == pytest.approx(0.15385, abs=1e-5)
        assert gen.r0p == pytest.approx(0.11538, abs=1e-5)
        assert gen.rp0 == pytest.approx(0.23077, abs=1e-5)
        assert gen.rpp == pytest.approx(0.42308, abs=1e-5)

    def test_zero_strength(self):
        gen = build_generator(FIG2, OUParams(0.0, 0.5))
        for value in (gen.r00, gen.r0p, gen.rp0, gen.rpp, gen.rpm):
            assert value == pytest.approx(0.0)

    def test_coefficients_from_quadrature_oracle(self):
        # rebuild every coefficient from independently integrated spectral
        # weights; the closed forms must match
        tls = FIG2
        noise = OUParams(0.5, 0.5)
        omega = tls.splitting
        k0 = quad_weight(noise, omega, 0)
        kp = quad_weight(noise, omega, +1)
        km = quad_weight(noise, omega, -1)
        w2 = omega * omega
        d, e = tls.delta, tls.eps0
        gen = build_generator(tls, noise)
        assert gen.r00 == pytest.approx((d * d * (kp + km) / (2 * w2)).real, rel=1e-8)
        assert gen.r0p == pytest.approx(d * e * k0 / (2 * w2), rel=1e-8)
        assert gen.rp0 == pytest.approx(d * e * kp / w2, rel=1e-8)
        assert gen.rpp == pytest.approx((2 * e * e * k0 + d * d * km) / (2 * w2), rel=1e-8)
        assert gen.rpm == pytest.approx(-d * d * kp / (2 * w2), rel=1e-8)

    def test_reality_structure(self):
        gen = build_generator(FIG2, OUParams(0.5, 0.5))
        assert gen.r00.imag == pytest.approx(0.0)
        white = build_generator(FIG2, OUParams(0.5, 0.0))
        for value in (white.r0p, white.rp0, white.rpp, white.rpm):
            assert value.imag == pytest.approx(0.0)

    def test_validity_flags(self):
        gen = build_generator(
            TLSParams(delta=1.0, eps0=1.5, drive_amp=3.0), OUParams(0.5, 0.5)
        )
        assert gen.perturbative_ok
        assert not gen.drive_ok

    def test_rejects_zero_splitting(self):
        with pytest.raises(ValueError):
            build_generator(TLSParams(delta=0.0, eps0=0.0), OUParams(0.5, 0.0))


class TestRelaxationTimes:
    def test_white_zero_detuning_anchor(self):
        rt = relaxation_times(build_generator(TLSParams(delta=1.0, eps0=0.0), OUParams(0.5, 0.0)))
        assert rt.t1_inv == pytest.approx(0.5)
        assert rt.t2_inv == pytest.approx(0.25)
        assert rt.tphi_inv == pytest.approx(0.0, abs=1e-15)

    def test_fig2_white_values(self):
        rt = relaxation_times(build_generator(FIG2, OUParams(0.5, 0.0)))
        assert rt.t1_inv == pytest.approx(0.147276, abs=2e-6)
        assert rt.t2_inv == pytest.approx(0.421826, abs=2e-6)
        assert rt.tphi_inv_leading == pytest.approx(0.346154, abs=2e-6)
        assert rt.tphi_inv == pytest.approx(rt.t2_inv - rt.t1_inv / 2)

    def test_rates_match_their_own_integration(self):
        # the closed forms are Laplace poles of the component system; fits
        # of the numerical integration are the ground truth for them
        for tau_c in (0.0, 0.5):
            gen = build_generator(FIG2, OUParams(0.5, tau_c))
            rt = relaxation_times(gen)
            pole = integrate_redfield(gen, np.array([0.0, 0.0, 1.0]), 0.005, 4.0 / rt.t1_inv)
            f1 = fit_exponential(pole.times, pole.r[:, 2], rate_guess=rt.t1_inv)
            assert abs(f1.rate - rt.t1_inv) / rt.t1_inv < 0.01
            eq = integrate_redfield(gen, np.array([1.0, 0.0, 0.0]), 0.005, 4.0 / rt.t2_inv)
            f2 = fit_exponential(
                eq.times, eq.r[:, 0] + 1j * eq.r[:, 1], envelope_mode=True, rate_guess=rt.t2_inv
            )
            assert abs(f2.rate - rt.t2_inv) / rt.t2_inv < 0.01

    def test_leading_order_dephasing_converges(self):
        ratios = []
        for strength in (0.2, 0.1, 0.05):
            rt = relaxation_times(build_generator(FIG2, OUParams(strength, 0.5)))
            ratios.append(rt.tphi_inv / rt.tphi_inv_leading)
        errs = [abs(r - 1.0) for r in ratios]
        assert errs[0] > errs[1] > errs[2]
        assert errs[2] < 0.02

    def test_dephasing_nonnegative_over_random_sweep(self):
        rng = np.random.default_rng(12)
        for _ in range(60):
            tls = TLSParams(delta=rng.uniform(0.1, 2.0), eps0=rng.uniform(-2.0, 2.0))
            noise = OUParams(rng.uniform(0.0, 0.5), rng.uniform(0.0, 1.0))
            if noise.perturbative_product > 0.5:
                continue
            rt = relaxation_times(build_generator(tls, noise))
            assert rt.t2_inv >= rt.t1_inv / 2 - 1e-12

    def test_dephasing_vanishes_at_zero_detuning(self):
        values = []
        for eps0 in (1.0, 0.3, 0.1, 0.0):
            rt = relaxation_times(build_generator(TLSParams(delta=1.0, eps0=eps0), OUParams(0.5, 0.3)))
            values.append(rt.tphi_inv)
        assert values == sorted(values, reverse=True)
        assert values[-1] == pytest.approx(0.0, abs=1e-14)


class TestIntegration:
    def test_zero_strength_is_frozen(self):
        gen = build_generator(FIG2, OUParams(0.0, 0.0))
        traj = integrate_redfield(gen, np.array([0.6, 0.0, 0.8]), 0.01, 5.0)
        assert np.max(np.abs(traj.r - traj.r[0][None, :])) < 1e-12

    def test_real_bloch_vector_preserved(self):
        # conjugate-pair structure of the coefficients keeps physical
        # vectors physical; magnitudes stay bounded by one
        gen = build_generator(FIG2, OUParams(0.5, 0.5))
        traj = integrate_redfield(gen, np.array([0.6, -0.3, 0.64]), 0.01, 30.0)
        assert np.all(np.isfinite(traj.r))
        assert traj.magnitude.max() <= 1.0 + 1e-9

    def test_secular_rates(self):
        gen = build_generator(FIG2, OUParams(0.5, 0.0))
        rt = relaxation_times(gen)
        sec = integrate_redfield(gen, np.array([0.0, 0.0, 1.0]), 0.005, 4.0 / gen.r00.real, secular=True)
        f = fit_exponential(sec.times, sec.r[:, 2], rate_guess=gen.r00.real)
        assert abs(f.rate - gen.r00.real) / gen.r00.real < 1e-3
        # the oscillating couplings shift the full rate only by the
        # second-order pole correction
        full = integrate_redfield(gen, np.array([0.0, 0.0, 1.0]), 0.005, 4.0 / rt.t1_inv)
        ff = fit_exponential(full.times, full.r[:, 2], rate_guess=rt.t1_inv)
        correction = abs(gen.r00.real - rt.t1_inv)
        assert abs(ff.rate - f.rate) < 2.0 * correction + 0.01 * gen.r00.real

    def test_secular_purity_monotone(self):
        gen = build_generator(FIG2, OUParams(0.5, 0.5))
        traj = integrate_redfield(gen, np.array([1.0, 0.0, 0.0]) , 0.01, 20.0, secular=True)
        mags = traj.magnitude
        assert np.all(np.diff(mags) <= 1e-12)

    def test_picture_equivalence(self):
        # lab-frame integration with the time-independent dissipator must
        # match the oscillating-coefficient interaction-picture system
        gen = build_generator(FIG2, OUParams(0.5, 0.5))
        r0 = np.array([1.0, 0.0, 1.0]) / np.sqrt(2.0)
        inter = integrate_redfield(gen, r0, 0.002, 6.0, picture="interaction")
        lab = integrate_redfield(gen, r0, 0.002, 6.0, picture="schrodinger")
        lab_rot = interaction_picture(lab, gen.splitting)
        assert np.max(np.abs(inter.r - lab_rot.r)) < 1e-8

    def test_initial_vector_validation(self):
        gen = build_generator(FIG2, OUParams(0.5, 0.0))
        with pytest.raises(ValueError):
            integrate_redfield(gen, np.array([2.0, 0.0, 0.0]), 0.01, 1.0)


class TestLindblad:
    def test_mixed_state_is_fixed_point(self):
        gen = build_generator(FIG2, OUParams(0.5, 0.5))
        mat = lindblad_matrix(gen)
        residual = mat @ np.array([1.0, 0.0, 0.0, 0.0])
        assert np.max(np.abs(residual)) < 1e-14

    def test_equal_up_and_down_rates(self):
        gen = build_generator(FIG2, OUParams(0.5, 0.5))
        apply = lindblad_generator(gen)
        ground = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex)
        excited = np.array([[0.0, 0.0], [0.0, 1.0]], dtype=complex)
        up = apply(ground)[1, 1].real
        down = apply(excited)[0, 0].real
        assert up == pytest.approx(down, abs=1e-14)
        assert up > 0

    def test_trace_preservation(self):
        gen = build_generator(FIG2, OUParams(0.5, 0.5))
        mat = lindblad_matrix(gen)
        assert np.max(np.abs(mat[0, :])) < 1e-14

    def test_zero_noise_generator_vanishes(self):
        gen = build_generator(FIG2, OUParams(0.0, 0.0))
        mat = lindblad_matrix(gen, include_hamiltonian=False)
        assert np.max(np.abs(mat)) < 1e-15

    def test_compare_generators_consistency(self):
        for tau_c in (0.0, 0.5):
            cmp = compare_generators(build_generator(FIG2, OUParams(0.5, tau_c)))
            assert cmp.consistent, cmp

    def test_pure_jump_channel_rate_relation(self):
        # at zero detuning the dephasing channel is off and the
        # longitudinal rate is twice the transverse jump contribution
        cmp = compare_generators(build_generator(TLSParams(delta=1.0, eps0=0.0), OUParams(0.5, 0.0)))
        assert cmp.lindblad_longitudinal == pytest.approx(2.0 * cmp.lindblad_transverse)

    def test_dissipator_matches_lindblad_diagonals_in_secular_limit(self):
        # the full (nonsecular) lab dissipator carries the same diagonal
        # decay rates as the secular generator
        gen = build_generator(FIG2, OUParams(0.5, 0.0))
        full = dissipator_matrix(gen)
        sec = lindblad_matrix(gen, include_hamiltonian=False)
        assert full[3, 3] == pytest.approx(sec[3, 3], abs=1e-12)
        assert 0.5 * (full[1, 1] + full[2, 2]) == pytest.approx(
            0.5 * (sec[1, 1] + sec[2, 2]), abs=1e-12
        )
