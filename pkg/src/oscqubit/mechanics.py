"""Raw dimensional dynamics of the two coupled parametric oscillators.

Two equal masses hang between fixed walls on springs ``k -/+ dk(t)/2`` and
are coupled to each other by a spring ``h``:

    m x1'' + m gamma x1' + [k - dk(t)/2] x1 + h (x1 - x2) = f(t)
    m x2'' + m gamma x2' + [k + dk(t)/2] x2 + h (x2 - x1) = 0

The parametric modulation is specified in envelope frequency units,
``dk(t) = 2 m omega0 * (eps0 + drive_amp cos(drive_freq t) + Gamma(t))``
with ``omega0^2 = (k + h)/m``, so that the slowly-varying-envelope
reduction of this system is exactly the analog two-level equation with
tunnel coupling ``delta = (h/m)/omega0`` and detuning ``eps(t)``.

This module is the ground truth the envelope approximation is checked
against: it integrates the raw equations with a fixed-step classical
fourth-order scheme (noise interpolated linearly inside a step) and
recovers envelopes by quadrature demodulation at the carrier plus a
zero-phase low-pass filter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import butter, sosfiltfilt

from .envelope import BARE, SCHRODINGER, DivergenceError, EnvelopeSeries, TLSParams
from .noise import NoisePath

__all__ = [
    "DriveSpec",
    "MechanicalParams",
    "MechState",
    "MechTrajectory",
    "map_params",
    "lower_params",
    "integrate_mechanics",
    "demodulate",
    "mechanical_energy",
    "state_from_envelope",
    "burst_initialize",
]


@dataclass(frozen=True)
class DriveSpec:
    """Parametric drive in envelope frequency units (see module docstring)."""

    eps0: float = 0.0
    amp: float = 0.0
    freq: float = 0.0


@dataclass(frozen=True)
class MechanicalParams:
    """Masses, springs, damping, and the parametric drive specification."""

    m: float
    k: float
    h: float
    gamma: float = 0.0
    drive: DriveSpec = field(default_factory=DriveSpec)

    def __post_init__(self) -> None:
        if self.m <= 0:
            raise ValueError(f"mass must be > 0, got {self.m}")
        if self.k < 0 or self.h < 0:
            raise ValueError("spring constants must be >= 0")
        if self.k + self.h <= 0:
            raise ValueError("need k + h > 0 for a finite carrier frequency")
        if self.gamma < 0:
            raise ValueError(f"damping must be >= 0, got {self.gamma}")

    @property
    def omega0(self) -> float:
        """Carrier frequency sqrt((k + h) / m)."""
        return math.sqrt((self.k + self.h) / self.m)

    @property
    def coupling_rate(self) -> float:
        """Envelope exchange rate (h/m) / omega0."""
        return (self.h / self.m) / self.omega0

    @property
    def underdamped_ok(self) -> bool:
        """Whether gamma << omega0 holds (factor 10), as the reduction assumes."""
        return self.gamma * 10.0 <= self.omega0

    @property
    def quality(self) -> float:
        return np.inf if self.gamma == 0 else self.omega0 / self.gamma


@dataclass
class MechState:
    """Positions and velocities of the two oscillators at one instant."""

    x1: float
    v1: float
    x2: float
    v2: float
    t: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.x1, self.v1, self.x2, self.v2])


@dataclass
class MechTrajectory:
    """Recorded raw trajectory; columns follow (x1, v1, x2, v2)."""

    times: np.ndarray
    states: np.ndarray

    @property
    def x1(self) -> np.ndarray:
        return self.states[:, 0]

    @property
    def v1(self) -> np.ndarray:
        return self.states[:, 1]

    @property
    def x2(self) -> np.ndarray:
        return self.states[:, 2]

    @property
    def v2(self) -> np.ndarray:
        return self.states[:, 3]


def map_params(mp: MechanicalParams) -> tuple[TLSParams, float]:
    """Equivalent analog two-level parameters and the carrier frequency."""
    return (
        TLSParams(
            delta=mp.coupling_rate,
            eps0=mp.drive.eps0,
            drive_amp=mp.drive.amp,
            drive_freq=mp.drive.freq,
            gamma=mp.gamma,
        ),
        mp.omega0,
    )


def lower_params(tls: TLSParams, omega0: float, m: float = 1.0) -> MechanicalParams:
    """Mechanical realization of analog parameters at a chosen carrier.

    Inverse of :func:`map_params` on the derived frequencies:
    ``h = m delta omega0`` and ``k = m omega0^2 - h``.
    """
    if omega0 <= 0:
        raise ValueError("carrier frequency must be > 0")
    h = m * tls.delta * omega0
    k = m * omega0 * omega0 - h
    if k < 0:
        raise ValueError("delta too large for this carrier: k would be negative")
    return MechanicalParams(
        m=m,
        k=k,
        h=h,
        gamma=tls.gamma,
        drive=DriveSpec(eps0=tls.eps0, amp=tls.drive_amp, freq=tls.drive_freq),
    )


def _detuning_half_grid(
    mp: MechanicalParams, noise: NoisePath | None, dt: float, n_steps: int, t0: float
) -> np.ndarray:
    """eps(t) sampled at t0 + j*dt/2 for j = 0..2*n_steps."""
    t = t0 + 0.5 * dt * np.arange(2 * n_steps + 1)
    eps = mp.drive.eps0 + mp.drive.amp * np.cos(mp.drive.freq * t)
    if noise is not None:
        if noise.white_noise:
            raise ValueError(
                "carrier-resolving integration needs pointwise noise samples; "
                "white-noise increment paths are not supported here"
            )
        if t[-1] > noise.times[-1] + 1e-9:
            raise ValueError("noise path too short for the requested horizon")
        eps = eps + np.interp(t, noise.times, noise.values)
    return eps


def integrate_mechanics(
    mp: MechanicalParams,
    noise: NoisePath | None,
    initial: MechState,
    dt: float,
    t_final: float,
    forcing=None,
    record_stride: int = 1,
) -> MechTrajectory:
    """Fixed-step fourth-order integration of the raw equations.

    The step must resolve the carrier, ``dt <= 2 pi / (40 omega0)``; noise
    is interpolated linearly between its samples, and an optional external
    force ``forcing(t)`` acts on the first oscillator.  Divergent runs
    (parametric instability can grow without bound) raise
    :class:`DivergenceError` with the offending time.
    """
    omega0 = mp.omega0
    if dt <= 0 or dt > 2.0 * math.pi / (40.0 * omega0) * (1.0 + 1e-12):
        raise ValueError(
            f"dt must satisfy 0 < dt <= 2*pi/(40*omega0) = {2 * math.pi / (40 * omega0):.3e}"
        )
    n_steps = max(1, int(round(t_final / dt)))
    if n_steps % record_stride:
        raise ValueError("record_stride must divide the number of steps")
    eps_half = _detuning_half_grid(mp, noise, dt, n_steps, initial.t)

    w0sq = omega0 * omega0
    ccoup = mp.h / mp.m
    gamma = mp.gamma
    inv_m = 1.0 / mp.m

    eps_list = eps_half.tolist()
    x1, v1, x2, v2 = initial.x1, initial.v1, initial.x2, initial.v2
    t = initial.t

    n_rec = n_steps // record_stride
    out = np.empty((n_rec + 1, 4))
    out[0] = (x1, v1, x2, v2)
    rec = 1

    def accel(xa, va, xb, vb, eps, fa):
        wd = omega0 * eps
        a1 = -gamma * va - (w0sq - wd) * xa + ccoup * xb + fa
        a2 = -gamma * vb - (w0sq + wd) * xb + ccoup * xa
        return a1, a2

    half = 0.5 * dt
    sixth = dt / 6.0
    for n in range(n_steps):
        e0 = eps_list[2 * n]
        em = eps_list[2 * n + 1]
        e1 = eps_list[2 * n + 2]
        if forcing is not None:
            f0 = forcing(t) * inv_m
            fm = forcing(t + half) * inv_m
            f1 = forcing(t + dt) * inv_m
        else:
            f0 = fm = f1 = 0.0

        a1a, a2a = accel(x1, v1, x2, v2, e0, f0)
        xb1 = x1 + half * v1
        vb1 = v1 + half * a1a
        xb2 = x2 + half * v2
        vb2 = v2 + half * a2a
        a1b, a2b = accel(xb1, vb1, xb2, vb2, em, fm)
        xc1 = x1 + half * vb1
        vc1 = v1 + half * a1b
        xc2 = x2 + half * vb2
        vc2 = v2 + half * a2b
        a1c, a2c = accel(xc1, vc1, xc2, vc2, em, fm)
        xd1 = x1 + dt * vc1
        vd1 = v1 + dt * a1c
        xd2 = x2 + dt * vc2
        vd2 = v2 + dt * a2c
        a1d, a2d = accel(xd1, vd1, xd2, vd2, e1, f1)

        x1 += sixth * (v1 + 2.0 * (vb1 + vc1) + vd1)
        v1 += sixth * (a1a + 2.0 * (a1b + a1c) + a1d)
        x2 += sixth * (v2 + 2.0 * (vb2 + vc2) + vd2)
        v2 += sixth * (a2a + 2.0 * (a2b + a2c) + a2d)
        t = initial.t + (n + 1) * dt

        if (n + 1) % record_stride == 0:
            out[rec] = (x1, v1, x2, v2)
            rec += 1
        if n % 64 == 0 and not (
            math.isfinite(x1) and math.isfinite(x2) and math.isfinite(v1) and math.isfinite(v2)
        ):
            raise DivergenceError(t, "mechanical integration diverged")
    if not np.all(np.isfinite(out)):
        raise DivergenceError(t, "mechanical integration diverged")
    times = initial.t + dt * record_stride * np.arange(n_rec + 1)
    return MechTrajectory(times, out)


def mechanical_energy(mp: MechanicalParams, traj: MechTrajectory) -> np.ndarray:
    """Kinetic plus spring potential (base springs and coupling, no drive)."""
    kin = 0.5 * mp.m * (traj.v1**2 + traj.v2**2)
    pot = 0.5 * mp.k * (traj.x1**2 + traj.x2**2) + 0.5 * mp.h * (traj.x1 - traj.x2) ** 2
    return kin + pot


def demodulate(
    traj: MechTrajectory, omega0: float, filter_cutoff: float | None = None
) -> EnvelopeSeries:
    """Recover the complex envelopes by quadrature demodulation.

    Multiplying by ``2 exp(-i omega0 t)`` shifts the envelope to baseband
    and its image to twice the carrier; a second-order zero-phase (two-pass)
    low-pass at ``filter_cutoff`` (default ``omega0 / 10``) removes the
    image.  The cutoff must lie strictly between zero and the carrier.
    """
    if filter_cutoff is None:
        filter_cutoff = omega0 / 10.0
    if not (0.0 < filter_cutoff < omega0):
        raise ValueError("filter cutoff must lie in (0, omega0)")
    dt = traj.times[1] - traj.times[0]
    nyquist = math.pi / dt
    wn = filter_cutoff / nyquist
    if wn >= 1.0:
        raise ValueError("trajectory too coarsely sampled for this cutoff")
    sos = butter(2, wn, output="sos")
    # even padding over several filter decay times: odd reflection of a
    # signal with a carrier image injects low-frequency edge artifacts
    padlen = int(min(traj.times.size - 2, math.ceil(8.0 / (filter_cutoff * dt))))
    carrier = np.exp(-1j * omega0 * traj.times)
    psi = np.empty((traj.times.size, 2), dtype=complex)
    for j, x in enumerate((traj.x1, traj.x2)):
        z = 2.0 * x * carrier
        psi[:, j] = sosfiltfilt(
            sos, z.real, padtype="even", padlen=padlen
        ) + 1j * sosfiltfilt(sos, z.imag, padtype="even", padlen=padlen)
    return EnvelopeSeries(traj.times, psi, frame=BARE, picture=SCHRODINGER)


def state_from_envelope(mp: MechanicalParams, psi: np.ndarray, t: float = 0.0) -> MechState:
    """Mechanical state realizing a bare-frame envelope at time ``t``.

    Positions are the real projections of the envelope on the carrier and
    velocities include the first-order envelope drift, which keeps the
    initialization error at second order in the envelope bandwidth over
    the carrier.
    """
    tls, omega0 = map_params(mp)
    psi = np.asarray(psi, dtype=complex)
    eps = tls.eps0 + tls.drive_amp * math.cos(tls.drive_freq * t)
    h11 = 0.5 * eps
    h12 = 0.5 * tls.delta
    dpsi = np.array(
        [
            -1j * (h11 * psi[0] + h12 * psi[1]) - 0.5 * tls.gamma * psi[0],
            -1j * (h12 * psi[0] - h11 * psi[1]) - 0.5 * tls.gamma * psi[1],
        ]
    )
    phase = np.exp(1j * omega0 * t)
    x = (psi * phase).real
    v = ((dpsi + 1j * omega0 * psi) * phase).real
    return MechState(x1=x[0], v1=v[0], x2=x[1], v2=v[1], t=t)


def burst_initialize(
    mp: MechanicalParams, amplitude: float, duration: float, dt: float
) -> MechState:
    """Drive the system from rest with a resonant force burst on oscillator 1.

    Mimics the experimental initialization protocol where an external force
    feeds energy into the system before the free evolution starts; the
    returned state has its clock reset to zero.
    """
    omega0 = mp.omega0
    traj = integrate_mechanics(
        mp,
        None,
        MechState(0.0, 0.0, 0.0, 0.0),
        dt,
        duration,
        forcing=lambda t: amplitude * math.sin(omega0 * t),
    )
    final = traj.states[-1]
    return MechState(x1=final[0], v1=final[1], x2=final[2], v2=final[3], t=0.0)
