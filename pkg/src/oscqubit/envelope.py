"""Two-component envelope dynamics and Bloch-vector bookkeeping.

The slowly varying amplitudes ``psi = (psi1, psi2)`` of the two oscillators
obey an analog Schroedinger equation.  In the bare frame

    i dpsi/dt = (1/2) [delta * sigma_x + eps(t) * sigma_z] psi

with ``eps(t) = eps0 + drive_amp * cos(drive_freq * t) + Gamma(t)``.  The
uniform friction decay ``exp(-gamma t / 2)`` is factored out of the state;
every integrator here evolves the unit-norm part only.

Rotating by the mixing angle ``theta = atan2(delta, eps0)`` about y gives the
diabatic frame where the static part is diagonal,

    i dpsi'/dt = (1/2) [Omega sigma_z
                        + (eps'(t)/Omega) (eps0 sigma_z - delta sigma_x)] psi'

with ``Omega = sqrt(eps0^2 + delta^2)`` and ``eps'`` the oscillating plus
stochastic part of the detuning.

Bloch components follow the fixed map

    rx = 2 Re(conj(psi1) psi2), ry = 2 Im(conj(psi1) psi2),
    rz = |psi2|^2 - |psi1|^2,

so ``psi = (1, 0)`` sits at the south pole.  With this map the precession
axis of the bare-frame dynamics is ``(-delta, 0, eps)``; integrators use the
axis consistent with the envelope equation rather than the conventional
``(+delta, 0, eps)`` label, so envelope and Bloch integrations agree exactly.

Time stepping applies the closed-form 2x2 unitary of the midpoint
Hamiltonian.  This conserves the norm to machine precision for any step
size (stochastic steps included) and converges to the Stratonovich solution
in the white-noise limit, consistent with noise defined as the limit of a
smooth colored process.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .noise import NoisePath

__all__ = [
    "TLSParams",
    "EnvelopeState",
    "EnvelopeSeries",
    "BlochTrajectory",
    "mixing_angle",
    "rotate_to_diabatic",
    "rotate_to_bare",
    "rotate_bloch_about_y",
    "bloch_from_state",
    "bloch_from_series",
    "state_from_bloch",
    "evolve_block",
    "integrate_envelope",
    "integrate_bloch_deterministic",
    "interaction_picture",
    "schrodinger_picture",
]

BARE = "bare"
DIABATIC = "diabatic"
SCHRODINGER = "schrodinger"
INTERACTION = "interaction"


@dataclass(frozen=True)
class TLSParams:
    """Static splitting, detuning and drive of the analog two-level system.

    ``delta`` is the tunnel coupling (sigma_x weight), ``eps0`` the static
    detuning, ``drive_amp``/``drive_freq`` the harmonic detuning modulation
    and ``gamma`` the friction rate whose trivial decay is factored out.
    """

    delta: float
    eps0: float = 0.0
    drive_amp: float = 0.0
    drive_freq: float = 0.0
    gamma: float = 0.0

    def __post_init__(self) -> None:
        if self.delta < 0:
            raise ValueError(f"delta must be >= 0, got {self.delta}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")

    @property
    def splitting(self) -> float:
        """Level splitting Omega of the diabatic frame."""
        return float(np.hypot(self.eps0, self.delta))

    def detuning(self, t) -> np.ndarray:
        """Deterministic detuning eps0 + drive_amp * cos(drive_freq * t)."""
        return self.eps0 + self.drive_amp * np.cos(self.drive_freq * np.asarray(t))


@dataclass
class EnvelopeState:
    """Complex amplitude pair tagged with its frame and picture."""

    psi: np.ndarray
    frame: str = BARE
    picture: str = SCHRODINGER
    t: float = 0.0

    def __post_init__(self) -> None:
        self.psi = np.asarray(self.psi, dtype=complex)
        if self.psi.shape != (2,):
            raise ValueError("psi must have exactly two components")
        if self.frame not in (BARE, DIABATIC):
            raise ValueError(f"unknown frame {self.frame!r}")
        if self.picture not in (SCHRODINGER, INTERACTION):
            raise ValueError(f"unknown picture {self.picture!r}")

    @property
    def norm(self) -> float:
        return float(np.vdot(self.psi, self.psi).real)


@dataclass
class EnvelopeSeries:
    """Amplitudes on a time grid, one row per sample."""

    times: np.ndarray
    psi: np.ndarray
    frame: str = BARE
    picture: str = SCHRODINGER

    @property
    def norm(self) -> np.ndarray:
        return np.abs(self.psi[:, 0]) ** 2 + np.abs(self.psi[:, 1]) ** 2


@dataclass
class BlochTrajectory:
    """Bloch 3-vector time series with optional norm and error bars."""

    times: np.ndarray
    r: np.ndarray
    norm: np.ndarray | None = None
    stderr: np.ndarray | None = None
    frame: str = BARE
    picture: str = SCHRODINGER

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=float)
        self.r = np.asarray(self.r, dtype=float)
        if self.r.shape != (self.times.size, 3):
            raise ValueError("r must have shape (n_times, 3)")

    @property
    def magnitude(self) -> np.ndarray:
        return np.linalg.norm(self.r, axis=1)


def mixing_angle(params: TLSParams) -> float:
    """Rotation angle atan2(delta, eps0); pi/2 exactly when eps0 = 0."""
    return float(np.arctan2(params.delta, params.eps0))


def _rotation(theta: float) -> np.ndarray:
    half = 0.5 * theta
    c, s = np.cos(half), np.sin(half)
    return np.array([[c, s], [-s, c]])


def rotate_to_diabatic(state: EnvelopeState, params: TLSParams) -> EnvelopeState:
    """Rotate a bare-frame state into the frame where the statics are diagonal."""
    if state.frame != BARE:
        raise ValueError(f"expected a bare-frame state, got {state.frame!r}")
    psi = _rotation(mixing_angle(params)) @ state.psi
    return EnvelopeState(psi, frame=DIABATIC, picture=state.picture, t=state.t)


def rotate_to_bare(state: EnvelopeState, params: TLSParams) -> EnvelopeState:
    """Inverse of :func:`rotate_to_diabatic`; round-trips to machine precision."""
    if state.frame != DIABATIC:
        raise ValueError(f"expected a diabatic-frame state, got {state.frame!r}")
    psi = _rotation(mixing_angle(params)).T @ state.psi
    return EnvelopeState(psi, frame=BARE, picture=state.picture, t=state.t)


def rotate_bloch_about_y(r: np.ndarray, theta: float) -> np.ndarray:
    """Bloch-vector image of the spinor rotation exp(i theta sigma_y / 2).

    Linear, so it applies to mixed vectors as well:
    ``rx' = cos(theta) rx + sin(theta) rz``, ``ry' = ry``,
    ``rz' = -sin(theta) rx + cos(theta) rz``.
    """
    r = np.asarray(r, dtype=float)
    c, s = np.cos(theta), np.sin(theta)
    out = np.empty_like(r)
    out[..., 0] = c * r[..., 0] + s * r[..., 2]
    out[..., 1] = r[..., 1]
    out[..., 2] = -s * r[..., 0] + c * r[..., 2]
    return out


def bloch_from_state(psi: np.ndarray | EnvelopeState) -> tuple[np.ndarray, float]:
    """Bloch vector and squared norm of an amplitude pair.

    Pure states satisfy ``|r| = norm`` identically.
    """
    if isinstance(psi, EnvelopeState):
        psi = psi.psi
    psi = np.asarray(psi, dtype=complex)
    u = np.conj(psi[0]) * psi[1]
    r = np.array(
        [2.0 * u.real, 2.0 * u.imag, abs(psi[1]) ** 2 - abs(psi[0]) ** 2]
    )
    return r, float(abs(psi[0]) ** 2 + abs(psi[1]) ** 2)


def bloch_from_series(series: EnvelopeSeries) -> BlochTrajectory:
    psi = series.psi
    u = np.conj(psi[:, 0]) * psi[:, 1]
    r = np.column_stack(
        [2.0 * u.real, 2.0 * u.imag, np.abs(psi[:, 1]) ** 2 - np.abs(psi[:, 0]) ** 2]
    )
    return BlochTrajectory(
        series.times, r, norm=series.norm, frame=series.frame, picture=series.picture
    )


def state_from_bloch(
    r: np.ndarray, frame: str = DIABATIC, picture: str = SCHRODINGER
) -> EnvelopeState:
    """Unit-norm amplitude pair realizing a pure Bloch vector."""
    r = np.asarray(r, dtype=float)
    mag = np.linalg.norm(r)
    if not np.isclose(mag, 1.0, atol=1e-9):
        raise ValueError(f"pure-state construction needs |r| = 1, got {mag}")
    if r[2] > 1.0 - 1e-12:
        psi = np.array([0.0, 1.0], dtype=complex)
    else:
        p1 = np.sqrt((1.0 - r[2]) / 2.0)
        psi = np.array([p1, (r[0] + 1j * r[1]) / (2.0 * p1)], dtype=complex)
    return EnvelopeState(psi, frame=frame, picture=picture)


def _midpoint_noise(noise: NoisePath | None, dt: float, n_steps: int) -> np.ndarray:
    """Effective noise value per integrator step, averaged over the step."""
    if noise is None:
        return np.zeros(n_steps)
    t_mid = dt * (np.arange(n_steps) + 0.5)
    if noise.white_noise:
        # consume integrated increments; steps must line up with the path grid
        ratio = dt / noise.dt
        per = int(round(ratio))
        if abs(ratio - per) > 1e-9 or per < 1:
            raise ValueError("integrator step must be a multiple of the white path step")
        need = n_steps * per
        if need > noise.values.size:
            raise ValueError("noise path too short for the requested horizon")
        inc = noise.values[:need].reshape(n_steps, per).sum(axis=1)
        return inc / dt
    t_path = noise.times
    if t_mid[-1] > t_path[-1] + 1e-9:
        raise ValueError("noise path too short for the requested horizon")
    return np.interp(t_mid, t_path, noise.values)


def evolve_block(
    params: TLSParams,
    frame: str,
    psi0: np.ndarray,
    gamma_noise: np.ndarray,
    dt: float,
    t0: float,
    record_stride: int,
) -> np.ndarray:
    """Shared stepping kernel for one or many realizations.

    ``psi0`` has shape (n_real, 2) and ``gamma_noise`` (n_real, n_steps)
    holds the effective noise value per realization and step.  Each step
    applies the closed-form unitary of the midpoint Hamiltonian
    ``hx sigma_x + hz sigma_z``.  Returns recorded amplitudes with shape
    (n_real, n_records + 1, 2).  The single-realization integrator and the
    Monte-Carlo engine both call this, so the zero-noise ensemble reduces
    to the deterministic run bit for bit.
    """
    psi0 = np.asarray(psi0, dtype=complex)
    n_real, n_steps = gamma_noise.shape
    if psi0.shape != (n_real, 2):
        raise ValueError("psi0 and gamma_noise disagree on the realization count")
    if n_steps % record_stride:
        raise ValueError("record_stride must divide n_steps")
    t_mid = t0 + dt * (np.arange(n_steps) + 0.5)
    if frame == BARE:
        det_mod = params.detuning(t_mid) - params.eps0
        cz0 = 0.5 * params.eps0
        cz1 = 0.5
        cx0 = 0.5 * params.delta
        cx1 = 0.0
    elif frame == DIABATIC:
        omega = params.splitting
        if omega <= 0:
            raise ValueError("diabatic dynamics needs a positive splitting")
        det_mod = params.drive_amp * np.cos(params.drive_freq * t_mid)
        cz0 = 0.5 * omega
        cz1 = 0.5 * params.eps0 / omega
        cx0 = 0.0
        cx1 = -0.5 * params.delta / omega
    else:
        raise ValueError(f"unknown frame {frame!r}")

    out = np.empty((n_real, n_steps // record_stride + 1, 2), dtype=complex)
    out[:, 0, :] = psi0
    a = psi0[:, 0].copy()
    b = psi0[:, 1].copy()
    k = 1
    tiny = np.finfo(float).tiny
    for n in range(n_steps):
        mod = det_mod[n] + gamma_noise[:, n]
        hz = cz0 + cz1 * mod
        hx = cx0 + cx1 * mod
        mag = np.hypot(hx, hz)
        phi = mag * dt
        c = np.cos(phi)
        s = np.where(mag > 0.0, np.sin(phi) / np.maximum(mag, tiny), dt)
        u11 = c - 1j * (s * hz)
        u12 = -1j * (s * hx)
        a, b = u11 * a + u12 * b, u12 * a + np.conj(u11) * b
        if (n + 1) % record_stride == 0:
            out[:, k, 0] = a
            out[:, k, 1] = b
            k += 1
    return out


def integrate_envelope(
    params: TLSParams,
    noise: NoisePath | None,
    state0: EnvelopeState,
    dt: float,
    n_steps: int,
    record_stride: int = 1,
) -> tuple[EnvelopeSeries, BlochTrajectory]:
    """Evolve one envelope realization and return amplitudes plus Bloch data.

    The state frame selects the equation: bare states evolve under the raw
    detuning field, diabatic states under the rotated one.  The friction
    decay is factored out, so the returned norm stays at its initial value
    up to roundoff for every realization.  With ``noise=None`` (or zero
    strength) this is the deterministic driven system, bit for bit.
    """
    if dt <= 0 or n_steps < 1:
        raise ValueError("need dt > 0 and n_steps >= 1")
    if state0.picture != SCHRODINGER:
        raise ValueError("integration starts from a Schrodinger-picture state")
    gamma_noise = _midpoint_noise(noise, dt, n_steps)[None, :]
    psi = evolve_block(
        params, state0.frame, state0.psi[None, :], gamma_noise, dt, state0.t,
        record_stride,
    )[0]
    if not np.all(np.isfinite(psi)):
        raise DivergenceError(state0.t + dt * n_steps)
    times = state0.t + dt * np.arange(0, n_steps + 1, record_stride)
    series = EnvelopeSeries(times, psi, frame=state0.frame, picture=SCHRODINGER)
    return series, bloch_from_series(series)


class DivergenceError(RuntimeError):
    """Raised when an integration produces non-finite state entries."""

    def __init__(self, t: float, detail: str = ""):
        self.t = t
        msg = f"non-finite state at t = {t:g}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


def integrate_bloch_deterministic(
    params: TLSParams, r0: np.ndarray, dt: float, t_final: float
) -> BlochTrajectory:
    """Lab-frame Bloch integration including the uniform friction decay.

    Solves ``dr/dt = a(t) x r - gamma r`` with the precession axis
    ``a(t) = (-delta, 0, eps(t))`` consistent with the envelope equation and
    the Bloch map above.  The cross product preserves |r|, so with a drive
    off the magnitude decays exactly as ``exp(-gamma t)``.
    """
    if dt <= 0 or t_final <= 0:
        raise ValueError("need dt > 0 and t_final > 0")
    n_steps = max(1, int(round(t_final / dt)))
    r = np.asarray(r0, dtype=float).copy()
    out = np.empty((n_steps + 1, 3))
    out[0] = r
    gamma = params.gamma
    delta = params.delta

    def rhs(t, y):
        eps = params.eps0 + params.drive_amp * np.cos(params.drive_freq * t)
        ax, az = -delta, eps
        return np.array(
            [
                -az * y[1] - gamma * y[0],
                az * y[0] - ax * y[2] - gamma * y[1],
                ax * y[1] - gamma * y[2],
            ]
        )

    t = 0.0
    for n in range(n_steps):
        k1 = rhs(t, r)
        k2 = rhs(t + 0.5 * dt, r + 0.5 * dt * k1)
        k3 = rhs(t + 0.5 * dt, r + 0.5 * dt * k2)
        k4 = rhs(t + dt, r + dt * k3)
        r = r + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t += dt
        out[n + 1] = r
    if not np.all(np.isfinite(out)):
        raise DivergenceError(t)
    times = dt * np.arange(n_steps + 1)
    return BlochTrajectory(times, out, norm=np.exp(-gamma * times), frame=BARE)


def _rotate_xy(traj: BlochTrajectory, phases: np.ndarray) -> tuple[np.ndarray, np.ndarray | None]:
    u = (traj.r[:, 0] + 1j * traj.r[:, 1]) * phases
    out = traj.r.copy()
    out[:, 0] = u.real
    out[:, 1] = u.imag
    err = traj.stderr
    if err is not None:
        # propagate per-component errors through the in-plane rotation
        c, s = phases.real, phases.imag
        err = err.copy()
        vx = (c * traj.stderr[:, 0]) ** 2 + (s * traj.stderr[:, 1]) ** 2
        vy = (s * traj.stderr[:, 0]) ** 2 + (c * traj.stderr[:, 1]) ** 2
        err[:, 0] = np.sqrt(vx)
        err[:, 1] = np.sqrt(vy)
    return out, err


def interaction_picture(traj: BlochTrajectory, splitting: float) -> BlochTrajectory:
    """Remove the free precession at the splitting frequency.

    Acting on a diabatic Schrodinger-picture trajectory this leaves the
    transverse components constant under free evolution.
    """
    if traj.picture != SCHRODINGER:
        raise ValueError("trajectory already in the interaction picture")
    r, err = _rotate_xy(traj, np.exp(-1j * splitting * traj.times))
    return BlochTrajectory(
        traj.times, r, norm=traj.norm, stderr=err,
        frame=traj.frame, picture=INTERACTION,
    )


def schrodinger_picture(traj: BlochTrajectory, splitting: float) -> BlochTrajectory:
    """Restore the free precession removed by :func:`interaction_picture`."""
    if traj.picture != INTERACTION:
        raise ValueError("trajectory is not in the interaction picture")
    r, err = _rotate_xy(traj, np.exp(+1j * splitting * traj.times))
    return BlochTrajectory(
        traj.times, r, norm=traj.norm, stderr=err,
        frame=traj.frame, picture=SCHRODINGER,
    )
