"""Shared helpers for the test suite."""

import numpy as np

from oscqubit.envelope import (
    BARE,
    EnvelopeState,
    TLSParams,
    bloch_from_series,
    integrate_envelope,
)
from oscqubit.mechanics import demodulate, integrate_mechanics, lower_params, state_from_envelope
from oscqubit.noise import OUParams, sample_path


def svea_deviation(omega0: float, seed: int = 21, quality: float = 1.0e4) -> float:
    """Max Bloch deviation between the raw mechanical run and its envelope
    reduction, on a shared noise path, over ten population-exchange periods.
    """
    drive = 0.5
    tls = TLSParams(
        delta=1.0, eps0=0.0, drive_amp=drive, drive_freq=1.0, gamma=omega0 / quality
    )
    mp = lower_params(tls, omega0)
    t_final = 10.0 * 4.0 * np.pi / drive
    path = sample_path(OUParams(0.2, 0.5, seed=seed), 0.02, int(np.ceil(t_final / 0.02)) + 2)
    psi0 = np.array([1.0, 0.0], dtype=complex)
    dt_m = 2.0 * np.pi / (80.0 * omega0)
    n_m = int(round(t_final / dt_m))
    traj = integrate_mechanics(mp, path, state_from_envelope(mp, psi0), dt_m, n_m * dt_m)
    r_mech = bloch_from_series(demodulate(traj, omega0))
    _, r_env = integrate_envelope(
        tls, path, EnvelopeState(psi0, frame=BARE), 0.005, int(round(t_final / 0.005))
    )
    ref = r_env.r * np.exp(-tls.gamma * r_env.times)[:, None]
    tt = r_mech.times
    interp = np.column_stack([np.interp(tt, r_env.times, ref[:, i]) for i in range(3)])
    mask = (tt > 2.0) & (tt < t_final - 2.0)
    return float(np.max(np.linalg.norm(r_mech.r[mask] - interp[mask], axis=1)))
