"""Envelope dynamics, frame changes, and Bloch bookkeeping."""

import numpy as np
import pytest

from oscqubit.envelope import (
    BARE,
    DIABATIC,
    EnvelopeState,
    TLSParams,
    bloch_from_state,
    integrate_bloch_deterministic,
    integrate_envelope,
    interaction_picture,
    mixing_angle,
    rotate_bloch_about_y,
    rotate_to_bare,
    rotate_to_diabatic,
    schrodinger_picture,
    state_from_bloch,
)
from oscqubit.noise import OUParams, sample_path


def random_pure_state(rng):
    psi = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    return psi / np.linalg.norm(psi)


class TestTLSParams:
    def test_splitting(self):
        assert TLSParams(delta=1.0, eps0=1.5).splitting == pytest.approx(np.sqrt(3.25))

    def test_validation(self):
        with pytest.raises(ValueError):
            TLSParams(delta=-1.0)
        with pytest.raises(ValueError):
            TLSParams(delta=1.0, gamma=-0.1)


class TestDiabaticRotation:
    def test_large_detuning_is_identity(self):
        p = TLSParams(delta=1.0, eps0=1e9)
        state = EnvelopeState(np.array([0.6, 0.8j]), frame=BARE)
        rotated = rotate_to_diabatic(state, p)
        np.testing.assert_allclose(rotated.psi, state.psi, atol=1e-9)

    def test_zero_detuning_equal_mixing(self):
        p = TLSParams(delta=1.0, eps0=0.0)
        assert mixing_angle(p) == pytest.approx(np.pi / 2)
        state = EnvelopeState(np.array([1.0, 0.0]), frame=BARE)
        rotated = rotate_to_diabatic(state, p)
        np.testing.assert_allclose(
            rotated.psi, np.array([1.0, -1.0]) / np.sqrt(2.0), atol=1e-15
        )

    def test_angle_and_orthogonality(self):
        p = TLSParams(delta=1.0, eps0=1.5)
        theta = mixing_angle(p)
        assert theta == pytest.approx(0.5880026035, abs=1e-9)
        half = theta / 2
        rot = np.array([[np.cos(half), np.sin(half)], [-np.sin(half), np.cos(half)]])
        np.testing.assert_allclose(rot @ rot.T, np.eye(2), atol=1e-14)
        # the rotation must diagonalize the static part
        h = 0.5 * np.array([[p.eps0, p.delta], [p.delta, -p.eps0]])
        diag = rot @ h @ rot.T
        np.testing.assert_allclose(
            diag, 0.5 * p.splitting * np.diag([1.0, -1.0]), atol=1e-14
        )

    def test_round_trip(self):
        p = TLSParams(delta=0.7, eps0=-1.2)
        rng = np.random.default_rng(0)
        for _ in range(10):
            state = EnvelopeState(random_pure_state(rng), frame=BARE)
            back = rotate_to_bare(rotate_to_diabatic(state, p), p)
            np.testing.assert_allclose(back.psi, state.psi, atol=1e-14)
            assert rotate_to_diabatic(state, p).norm == pytest.approx(state.norm)

    def test_frame_tags_enforced(self):
        p = TLSParams(delta=1.0)
        diabatic = EnvelopeState(np.array([1.0, 0.0]), frame=DIABATIC)
        with pytest.raises(ValueError):
            rotate_to_diabatic(diabatic, p)
        bare = EnvelopeState(np.array([1.0, 0.0]), frame=BARE)
        with pytest.raises(ValueError):
            rotate_to_bare(bare, p)


class TestBlochMap:
    def test_south_pole(self):
        r, norm = bloch_from_state(np.array([1.0, 0.0]))
        np.testing.assert_allclose(r, [0.0, 0.0, -1.0])
        assert norm == pytest.approx(1.0)

    def test_equator(self):
        r, _ = bloch_from_state(np.array([1.0, 1.0]) / np.sqrt(2.0))
        np.testing.assert_allclose(r, [1.0, 0.0, 0.0], atol=1e-15)

    def test_purity_identity(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            psi = 2.0 * random_pure_state(rng)  # arbitrary normalization
            r, norm = bloch_from_state(psi)
            assert np.linalg.norm(r) == pytest.approx(norm, abs=1e-14)

    def test_state_from_bloch_round_trip(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            psi = random_pure_state(rng)
            r, _ = bloch_from_state(psi)
            r2, _ = bloch_from_state(state_from_bloch(r).psi)
            np.testing.assert_allclose(r2, r, atol=1e-12)
        with pytest.raises(ValueError):
            state_from_bloch([0.2, 0.0, 0.0])

    def test_frame_covariance(self):
        # rotating the spinor and rotating the Bloch vector must commute
        p = TLSParams(delta=1.0, eps0=1.5)
        theta = mixing_angle(p)
        rng = np.random.default_rng(9)
        for _ in range(10):
            state = EnvelopeState(random_pure_state(rng), frame=BARE)
            r_before, _ = bloch_from_state(state)
            r_after, _ = bloch_from_state(rotate_to_diabatic(state, p))
            np.testing.assert_allclose(
                r_after, rotate_bloch_about_y(r_before, theta), atol=1e-12
            )


class TestEnvelopeIntegration:
    def test_free_precession(self):
        p = TLSParams(delta=1.0, eps0=1.5)
        omega = p.splitting
        for rz in (1.0, -1.0):
            s0 = state_from_bloch([0.0, 0.0, rz], frame=DIABATIC)
            _, traj = integrate_envelope(p, None, s0, 0.005, 2000)
            assert np.max(np.abs(traj.r - traj.r[0][None, :])) < 1e-12
        s0 = state_from_bloch([1.0, 0.0, 0.0], frame=DIABATIC)
        _, traj = integrate_envelope(p, None, s0, 0.002, 4000)
        # transverse coherence precesses as exp(-i Omega t)
        plus = 0.5 * (traj.r[:, 0] - 1j * traj.r[:, 1])
        expected = 0.5 * np.exp(-1j * omega * traj.times)
        np.testing.assert_allclose(plus, expected, atol=1e-8)

    def test_resonant_rabi_oscillations(self):
        # weak resonant drive at zero static detuning: full-contrast
        # population oscillations at half the drive amplitude
        drive = 0.05
        p = TLSParams(delta=1.0, eps0=0.0, drive_amp=drive, drive_freq=1.0)
        s0 = state_from_bloch([0.0, 0.0, -1.0], frame=DIABATIC)
        t_final = 2.0 * np.pi / (drive / 2.0)
        dt = 0.01
        n = int(round(t_final / dt))
        _, traj = integrate_envelope(p, None, s0, dt, n)
        rz = traj.r[:, 2]
        assert rz.max() > 0.99 and rz.min() < -0.99
        # rotating-frame reference integrated independently
        ref = _rotating_frame_rz(p, traj.times)
        assert np.max(np.abs(rz - ref)) < 0.02

    def test_norm_conserved_with_and_without_noise(self):
        p = TLSParams(delta=1.0, eps0=1.5, drive_amp=0.3, drive_freq=1.0)
        s0 = state_from_bloch([1.0, 0.0, 0.0], frame=DIABATIC)
        noise = sample_path(OUParams(0.5, 0.5, seed=2), 0.01, 4000)
        for path in (None, noise):
            _, traj = integrate_envelope(p, path, s0, 0.01, 4000)
            horizon = traj.times[-1]
            assert np.max(np.abs(traj.norm - 1.0)) < 1e-10 * max(horizon, 1.0)

    def test_zero_strength_reduces_to_deterministic(self):
        p = TLSParams(delta=1.0, eps0=1.5, drive_amp=0.4, drive_freq=1.0)
        s0 = state_from_bloch([1.0, 0.0, 0.0], frame=DIABATIC)
        zero = sample_path(OUParams(0.0, 0.5, seed=1), 0.01, 1000)
        series_a, _ = integrate_envelope(p, zero, s0, 0.01, 1000)
        series_b, _ = integrate_envelope(p, None, s0, 0.01, 1000)
        np.testing.assert_array_equal(series_a.psi, series_b.psi)

    def test_bare_and_diabatic_frames_agree(self):
        p = TLSParams(delta=1.0, eps0=1.5, drive_amp=0.3, drive_freq=1.0)
        rng = np.random.default_rng(3)
        psi_bare = random_pure_state(rng)
        s_bare = EnvelopeState(psi_bare, frame=BARE)
        s_diab = rotate_to_diabatic(s_bare, p)
        noise = sample_path(OUParams(0.3, 0.5, seed=4), 0.005, 4000)
        series_b, _ = integrate_envelope(p, noise, s_bare, 0.005, 4000)
        series_d, _ = integrate_envelope(p, noise, s_diab, 0.005, 4000)
        # the rotated-back diabatic amplitudes must track the bare run up to
        # the oscillating Omega phase handled by the frame definition: here
        # both integrate the same physical field, so compare Bloch vectors
        theta = mixing_angle(p)
        from oscqubit.envelope import bloch_from_series

        r_bare = bloch_from_series(series_b).r
        r_diab = bloch_from_series(series_d).r
        np.testing.assert_allclose(
            rotate_bloch_about_y(r_bare, theta), r_diab, atol=5e-5
        )

    def test_picture_round_trip(self):
        p = TLSParams(delta=1.0, eps0=1.5)
        s0 = state_from_bloch([1.0, 0.0, 0.0], frame=DIABATIC)
        _, traj = integrate_envelope(p, None, s0, 0.01, 500)
        rotated = interaction_picture(traj, p.splitting)
        back = schrodinger_picture(rotated, p.splitting)
        np.testing.assert_allclose(back.r, traj.r, atol=1e-12)
        with pytest.raises(ValueError):
            interaction_picture(rotated, p.splitting)

    def test_record_stride(self):
        p = TLSParams(delta=1.0)
        s0 = state_from_bloch([0.0, 0.0, 1.0], frame=DIABATIC)
        series, _ = integrate_envelope(p, None, s0, 0.01, 100, record_stride=10)
        assert series.times.shape == (11,)
        with pytest.raises(ValueError):
            integrate_envelope(p, None, s0, 0.01, 105, record_stride=10)


def _rotating_frame_rz(p: TLSParams, times: np.ndarray) -> np.ndarray:
    """Independent reference: integrate the corotating two-level equation."""
    detune = p.splitting - p.drive_freq
    h = 0.5 * np.array([[detune, -p.drive_amp / 2], [-p.drive_amp / 2, -detune]])
    vals, vecs = np.linalg.eigh(h)
    psi0 = np.array([0.0, 1.0], dtype=complex)  # rz = -1 against the pole
    coeff = vecs.conj().T @ psi0
    rz = np.empty_like(times)
    for i, t in enumerate(times):
        psi = vecs @ (np.exp(-1j * vals * t) * coeff)
        rz[i] = abs(psi[1]) ** 2 - abs(psi[0]) ** 2
    return -rz  # state ordering flips the population difference


class TestBlochDeterministic:
    def test_precession_axis_fixed_point(self):
        p = TLSParams(delta=1.0, eps0=1.5)
        axis = np.array([-p.delta, 0.0, p.eps0])
        axis /= np.linalg.norm(axis)
        traj = integrate_bloch_deterministic(p, axis, 1e-3, 5.0)
        assert np.max(np.abs(traj.r - traj.r[0][None, :])) < 1e-10

    def test_uniform_decay_preserves_direction(self):
        p = TLSParams(delta=1.0, eps0=0.5, gamma=0.2)
        r0 = np.array([0.3, -0.5, 0.6])
        traj = integrate_bloch_deterministic(p, r0, 1e-3, 10.0)
        expected = np.linalg.norm(r0) * np.exp(-p.gamma * traj.times)
        np.testing.assert_allclose(traj.magnitude, expected, atol=1e-9)

    def test_matches_envelope_integration(self):
        # independent route: amplitudes evolved and mapped to the sphere,
        # with the factored friction decay restored
        p = TLSParams(delta=1.0, eps0=1.5, drive_amp=0.5, drive_freq=1.0, gamma=0.3)
        psi0 = np.array([0.6, 0.8j])
        s0 = EnvelopeState(psi0, frame=BARE)
        dt = 1e-4
        t_final = 2.0
        n = int(round(t_final / dt))
        from oscqubit.envelope import bloch_from_series

        series, _ = integrate_envelope(p, None, s0, dt, n)
        r_env = bloch_from_series(series).r * np.exp(-p.gamma * series.times)[:, None]
        r0, _ = bloch_from_state(psi0)
        traj = integrate_bloch_deterministic(p, r0, dt, t_final)
        assert traj.times.size == series.times.size
        assert np.max(np.abs(traj.r - r_env)) < 1e-8
