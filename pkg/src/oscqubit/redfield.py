"""Second-order cumulant (Redfield) dynamics of the averaged Bloch vector.

Averaging the stochastic envelope equation over drive-noise realizations and
truncating the cumulant expansion at second order yields linear equations for
the spherical components of the mean Bloch vector.  In the interaction
picture of the static splitting, with the shorthand spectral weights
``k_a = spectral_weight(noise, Omega, a)``, the coupled equations are

    2 Omega^2 dp/dt = -(2 eps0^2 k0 + delta^2 k-) p
                      + delta^2 k+ exp(-2i Omega t) m
                      - 2 delta eps0 k+ exp(-i Omega t) w
    2 Omega^2 dm/dt = conjugate equation (m = conj(p) for physical states)
    2 Omega^2 dw/dt = -delta^2 (k+ + k-) w
                      - delta eps0 k0 [exp(+i Omega t) p + exp(-i Omega t) m]

where ``p``/``m`` are the raising/lowering coherences and ``w`` half the
population difference.  Dropping every oscillating coupling is the secular
approximation, which decouples the three components.

A Laplace-domain perturbative solution of the same system gives closed-form
longitudinal and transverse rates, the frequency (Lamb) shift, and a pure
dephasing rate that vanishes at zero static detuning.  These closed forms,
the integrations (interaction picture and lab frame), and the secular
Lindblad generator are all built here from one set of coefficients.

Convention note: writing the secular generator with an extra noise-strength
prefactor in front of spectral weights that already contain one power of it
double-counts the strength; this module keeps the overall generator first
order in the noise strength, the normalization that reproduces the
relaxation rates of the component equations above.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .envelope import (
    DIABATIC,
    INTERACTION,
    SCHRODINGER,
    BlochTrajectory,
    DivergenceError,
    TLSParams,
)
from .noise import OUParams, spectral_weight

__all__ = [
    "RedfieldGenerator",
    "RelaxationTimes",
    "build_generator",
    "integrate_redfield",
    "relaxation_times",
    "lindblad_generator",
    "lindblad_matrix",
    "compare_generators",
    "GeneratorComparison",
]

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1j], [1j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
SIGMA_P = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
SIGMA_M = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)
IDENTITY = np.eye(2, dtype=complex)


@dataclass(frozen=True)
class RedfieldGenerator:
    """Spectral weights and relaxation coefficients for one parameter set.

    The five coefficients close to

        r00 = G d^2 / (W^2 (1 + W^2 tc^2))
        r0p = G d e / (2 W^2)
        rp0 = G d e (1 + i W tc) / (W^2 (1 + W^2 tc^2))
        rpp = (G/2) [2 e^2 / W^2 + d^2 (1 - i W tc) / (W^2 (1 + W^2 tc^2))]
        rpm = -G d^2 (1 + i W tc) / (2 W^2 (1 + W^2 tc^2))

    with d the tunnel coupling, e the static detuning, W the splitting,
    G the noise strength and tc the correlation time.  ``r00`` is real, and
    every coefficient is real in the white-noise limit.
    """

    tls: TLSParams
    noise: OUParams
    splitting: float
    k0: complex
    k_plus: complex
    k_minus: complex
    r00: complex
    r0p: complex
    rp0: complex
    rpp: complex
    rpm: complex

    @property
    def perturbative_ok(self) -> bool:
        """Cumulant truncation validity flag (strength * tau_c < 1)."""
        return self.noise.perturbative_ok()

    @property
    def drive_ok(self) -> bool:
        """Validity of keeping the drive out of the dissipator (D * tau_c < 1)."""
        return self.tls.drive_amp * self.noise.tau_c < 1.0


@dataclass(frozen=True)
class RelaxationTimes:
    """Closed-form rates, their leading-order dephasing estimate, and shift."""

    t1_inv: float
    t2_inv: float
    tphi_inv: float
    tphi_inv_leading: float
    lamb_shift: float


def build_generator(tls: TLSParams, noise: OUParams) -> RedfieldGenerator:
    """Evaluate the spectral weights and relaxation coefficients."""
    omega = tls.splitting
    if omega <= 0:
        raise ValueError("relaxation coefficients need a positive splitting")
    d2 = tls.delta**2
    e0 = tls.eps0
    g = noise.strength
    tc = noise.tau_c
    w2 = omega * omega
    lor = 1.0 + w2 * tc * tc
    k0 = spectral_weight(noise, omega, 0)
    kp = spectral_weight(noise, omega, +1)
    km = spectral_weight(noise, omega, -1)
    return RedfieldGenerator(
        tls=tls,
        noise=noise,
        splitting=omega,
        k0=k0,
        k_plus=kp,
        k_minus=km,
        r00=g * d2 / (w2 * lor),
        r0p=g * tls.delta * e0 / (2.0 * w2),
        rp0=g * tls.delta * e0 * (1.0 + 1j * omega * tc) / (w2 * lor),
        rpp=0.5 * g * (2.0 * e0 * e0 / w2 + d2 * (1.0 - 1j * omega * tc) / (w2 * lor)),
        rpm=-0.5 * g * d2 * (1.0 + 1j * omega * tc) / (w2 * lor),
    )


def relaxation_times(gen: RedfieldGenerator) -> RelaxationTimes:
    """Longitudinal/transverse rates, pure dephasing and frequency shift.

    Adiabatic elimination of the cross couplings in the component system
    places the population pole at ``-r00 - 2 Re[r0p rp0 / (i W - rpp)]``
    and the coherence pole at ``i W - rpp + r0p rp0 / (i W + r00)``, so

        t1_inv = r00 + 2 Re[r0p rp0 / (i W - rpp)]
        t2_inv = Re[rpp] - Re[r0p rp0 / (i W + r00)]

    The dephasing rate is ``t2_inv - t1_inv / 2`` by construction; its
    leading-order form ``G e^2/W^2 - G^2 d^2 e^2 tc / (W^4 (1 + W^2 tc^2))``
    drops the relaxation coefficients from the pole denominators.  With a
    real cross product (white noise) the corrections reduce to the familiar
    symmetric form; for colored noise the signs here are fixed by the
    numerically integrated component system, which is the ground truth.
    """
    omega = gen.splitting
    cross = gen.r0p * gen.rp0
    t1_inv = float((gen.r00 + 2.0 * (cross / (1j * omega - gen.rpp))).real)
    pole = 1j * omega - gen.rpp + cross / (1j * omega + gen.r00)
    t2_inv = float(-pole.real)
    lamb = float(pole.imag - omega - abs(gen.rpm) ** 2 / (2.0 * omega))
    tls, noise = gen.tls, gen.noise
    w2 = omega * omega
    lor = 1.0 + w2 * noise.tau_c**2
    leading = noise.strength * tls.eps0**2 / w2 - (
        noise.strength**2 * tls.delta**2 * tls.eps0**2 * noise.tau_c / (w2 * w2 * lor)
    )
    return RelaxationTimes(
        t1_inv=t1_inv,
        t2_inv=t2_inv,
        tphi_inv=t2_inv - 0.5 * t1_inv,
        tphi_inv_leading=float(leading),
        lamb_shift=lamb,
    )


def _spherical_from_cartesian(r: np.ndarray) -> tuple[complex, complex, complex]:
    """(p, m, w) components used by the averaged equations.

    ``p = (rx + i ry) / 2`` and ``w = -rz / 2`` with the package Bloch map;
    at t = 0 interaction and Schrodinger pictures coincide.
    """
    p = 0.5 * (r[0] + 1j * r[1])
    return p, p.conjugate(), complex(-0.5 * r[2])


def _cartesian_from_spherical(p: complex, m: complex, w: complex) -> np.ndarray:
    u = 0.5 * (p + m.conjugate())  # average away roundoff asymmetry
    return np.array([2.0 * u.real, 2.0 * u.imag, -2.0 * w.real])


def integrate_redfield(
    gen: RedfieldGenerator,
    r0: np.ndarray,
    dt: float,
    t_final: float,
    secular: bool = False,
    picture: str = INTERACTION,
    record_stride: int = 1,
) -> BlochTrajectory:
    """Integrate the averaged component equations.

    ``picture="interaction"`` integrates the oscillating-coefficient system
    quoted in the module docstring (or its secular diagonal part).
    ``picture="schrodinger"`` integrates the equivalent lab-frame master
    equation, whose dissipator is time independent and whose coherent part
    carries the splitting plus the deterministic drive; this is the form
    used for Bloch-sphere trajectories of the driven system.
    """
    if dt <= 0 or t_final <= 0:
        raise ValueError("need dt > 0 and t_final > 0")
    r0 = np.asarray(r0, dtype=float)
    if r0.shape != (3,):
        raise ValueError("r0 must be a 3-vector")
    if np.linalg.norm(r0) > 1.0 + 1e-9:
        raise ValueError("|r0| must not exceed 1")
    if picture == INTERACTION:
        return _integrate_interaction(gen, r0, dt, t_final, secular, record_stride)
    if picture == SCHRODINGER:
        return _integrate_lab(gen, r0, dt, t_final, secular, record_stride)
    raise ValueError(f"unknown picture {picture!r}")


def _integrate_interaction(
    gen: RedfieldGenerator,
    r0: np.ndarray,
    dt: float,
    t_final: float,
    secular: bool,
    record_stride: int,
) -> BlochTrajectory:
    omega = gen.splitting
    d2 = gen.tls.delta**2
    de = gen.tls.delta * gen.tls.eps0
    k0, kp, km = gen.k0, gen.k_plus, gen.k_minus
    inv = 1.0 / (2.0 * omega * omega)
    app = -(2.0 * gen.tls.eps0**2 * k0 + d2 * km) * inv
    amm = app.conjugate()
    aww = -(d2 * (kp + km)) * inv
    cpm = d2 * kp * inv
    cpw = -2.0 * de * kp * inv
    cwp = -de * k0 * inv

    n_steps = max(1, int(round(t_final / dt)))
    n_steps += (-n_steps) % record_stride
    p, m, w = _spherical_from_cartesian(r0)

    if secular:
        def rhs(t, y):
            return (app * y[0], amm * y[1], aww * y[2])
    else:
        def rhs(t, y):
            ph = cmath.exp(1j * omega * t)
            ph2 = ph * ph
            return (
                app * y[0] + cpm / ph2 * y[1] + cpw / ph * y[2],
                amm * y[1] + cpm.conjugate() * ph2 * y[0] + cpw.conjugate() * ph * y[2],
                aww * y[2] + cwp * (ph * y[0] + y[1] / ph),
            )

    n_rec = n_steps // record_stride
    out = np.empty((n_rec + 1, 3))
    out[0] = r0
    y = (p, m, w)
    t = 0.0
    k = 1
    for n in range(n_steps):
        y = _rk4_step(rhs, t, y, dt)
        t += dt
        if (n + 1) % record_stride == 0:
            out[k] = _cartesian_from_spherical(*y)
            k += 1
    if not np.all(np.isfinite(out)):
        raise DivergenceError(t)
    times = dt * record_stride * np.arange(n_rec + 1)
    return BlochTrajectory(times, out, frame=DIABATIC, picture=INTERACTION)


def _rk4_step(rhs, t, y, dt):
    k1 = rhs(t, y)
    y2 = tuple(a + 0.5 * dt * b for a, b in zip(y, k1))
    k2 = rhs(t + 0.5 * dt, y2)
    y3 = tuple(a + 0.5 * dt * b for a, b in zip(y, k2))
    k3 = rhs(t + 0.5 * dt, y3)
    y4 = tuple(a + dt * b for a, b in zip(y, k3))
    k4 = rhs(t + dt, y4)
    return tuple(
        a + (dt / 6.0) * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
        for a, b1, b2, b3, b4 in zip(y, k1, k2, k3, k4)
    )


def _coupling_operator(tls: TLSParams) -> np.ndarray:
    """Noise coupling (eps0 sigma_z - delta sigma_x) / (2 Omega)."""
    omega = tls.splitting
    return (tls.eps0 * SIGMA_Z - tls.delta * SIGMA_X) / (2.0 * omega)


def _kernel_operator(gen: RedfieldGenerator) -> np.ndarray:
    """Noise coupling filtered through the free evolution.

    ``W = int_0^inf C(t') exp(-i H0 t') V exp(+i H0 t') dt'`` which dresses
    the raising/lowering parts with the spectral weights; Hermitian because
    the two weights are conjugate.
    """
    tls = gen.tls
    omega = gen.splitting
    return (
        tls.eps0 * gen.k0 * SIGMA_Z
        - tls.delta * (gen.k_minus * SIGMA_P + gen.k_plus * SIGMA_M)
    ) / (2.0 * omega)


def _pauli_coords(mat: np.ndarray) -> np.ndarray:
    """Coordinates (n, rx, ry, rz) of a 2x2 Hermitian matrix in the package map."""
    n = mat[0, 0].real + mat[1, 1].real
    rx = (mat[0, 1] + mat[1, 0]).real
    ry = (mat[0, 1] - mat[1, 0]).imag * -1.0
    rz = (mat[1, 1] - mat[0, 0]).real
    return np.array([n, rx, ry, rz])


def _matrix_from_coords(c: np.ndarray) -> np.ndarray:
    n, rx, ry, rz = c
    return 0.5 * np.array(
        [[n - rz, rx - 1j * ry], [rx + 1j * ry, n + rz]], dtype=complex
    )


def _superop_matrix(apply) -> np.ndarray:
    """4x4 real action of a superoperator in (n, rx, ry, rz) coordinates."""
    out = np.empty((4, 4))
    for j in range(4):
        basis = np.zeros(4)
        basis[j] = 1.0
        out[:, j] = _pauli_coords(apply(_matrix_from_coords(basis)))
    return out


def _comm(a, b):
    return a @ b - b @ a


def dissipator_matrix(gen: RedfieldGenerator) -> np.ndarray:
    """Lab-frame double-commutator dissipator as a 4x4 coordinate action.

    ``D(rho) = -[V, [W, rho]]`` is time independent, trace preserving and
    unital; in the interaction picture it reproduces the oscillating
    component equations exactly.
    """
    v = _coupling_operator(gen.tls)
    w = _kernel_operator(gen)

    def apply(rho):
        return -_comm(v, _comm(w, rho))

    return _superop_matrix(apply)


def _integrate_lab(
    gen: RedfieldGenerator,
    r0: np.ndarray,
    dt: float,
    t_final: float,
    secular: bool,
    record_stride: int,
) -> BlochTrajectory:
    tls = gen.tls
    omega = gen.splitting
    if secular:
        diss = lindblad_matrix(gen, include_hamiltonian=False)[1:, 1:]
    else:
        diss = dissipator_matrix(gen)[1:, 1:]
    ratio_z = tls.eps0 / omega
    ratio_x = tls.delta / omega

    def rhs(t, r):
        mod = tls.drive_amp * math.cos(tls.drive_freq * t)
        # precession axis consistent with the envelope equation
        ax = ratio_x * mod  # -2 hx with hx = -(delta/omega) mod / 2
        az = omega + ratio_z * mod
        coherent = np.array(
            [
                -az * r[1],
                az * r[0] - ax * r[2],
                ax * r[1],
            ]
        )
        return coherent + diss @ r

    n_steps = max(1, int(round(t_final / dt)))
    n_steps += (-n_steps) % record_stride
    n_rec = n_steps // record_stride
    out = np.empty((n_rec + 1, 3))
    out[0] = r0
    r = r0.copy()
    t = 0.0
    k = 1
    for n in range(n_steps):
        k1 = rhs(t, r)
        k2 = rhs(t + 0.5 * dt, r + 0.5 * dt * k1)
        k3 = rhs(t + 0.5 * dt, r + 0.5 * dt * k2)
        k4 = rhs(t + dt, r + dt * k3)
        r = r + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t += dt
        if (n + 1) % record_stride == 0:
            out[k] = r
            k += 1
    if not np.all(np.isfinite(out)):
        raise DivergenceError(t)
    times = dt * record_stride * np.arange(n_rec + 1)
    return BlochTrajectory(times, out, frame=DIABATIC, picture=SCHRODINGER)


def lindblad_generator(gen: RedfieldGenerator):
    """Secular generator as a callable on 2x2 Hermitian matrices.

    Dephasing at weight ``eps0^2 k0``, quantum jumps with equal upward and
    downward rates ``delta^2 Re(k+) / (2 Omega^2)``, and a frequency-shift
    commutator from ``Im(k+)``.  The unique fixed point is the maximally
    mixed state: purely Hamiltonian noise cannot pump the system toward a
    pole, so the effective temperature is infinite.
    """
    tls = gen.tls
    omega = gen.splitting
    pref = 1.0 / (4.0 * omega * omega)
    deph = 2.0 * tls.eps0**2 * gen.k0.real
    jump = tls.delta**2 * gen.k_plus.real
    shift = tls.delta**2 * gen.k_plus.imag
    h0 = 0.5 * omega * SIGMA_Z

    def apply(rho: np.ndarray) -> np.ndarray:
        out = -1j * _comm(h0, rho)
        out -= pref * deph * (rho - SIGMA_Z @ rho @ SIGMA_Z)
        out -= 2.0 * pref * jump * (
            rho - SIGMA_P @ rho @ SIGMA_M - SIGMA_M @ rho @ SIGMA_P
        )
        out -= 1j * pref * shift * _comm(SIGMA_Z, rho)
        return out

    return apply


def lindblad_matrix(
    gen: RedfieldGenerator, include_hamiltonian: bool = True
) -> np.ndarray:
    """Secular generator as a 4x4 action on (n, rx, ry, rz) coordinates."""
    full = lindblad_generator(gen)
    if include_hamiltonian:
        return _superop_matrix(full)
    tls = gen.tls
    omega = gen.splitting
    pref = 1.0 / (4.0 * omega * omega)
    deph = 2.0 * tls.eps0**2 * gen.k0.real
    jump = tls.delta**2 * gen.k_plus.real

    def apply(rho):
        out = -pref * deph * (rho - SIGMA_Z @ rho @ SIGMA_Z)
        out -= 2.0 * pref * jump * (
            rho - SIGMA_P @ rho @ SIGMA_M - SIGMA_M @ rho @ SIGMA_P
        )
        return out

    return _superop_matrix(apply)


@dataclass(frozen=True)
class GeneratorComparison:
    """Diagonal decay rates of the secular generators, both routes."""

    lindblad_transverse: float
    lindblad_longitudinal: float
    secular_transverse: float
    secular_longitudinal: float

    @property
    def transverse_residual(self) -> float:
        return abs(self.lindblad_transverse - self.secular_transverse)

    @property
    def longitudinal_residual(self) -> float:
        return abs(self.lindblad_longitudinal - self.secular_longitudinal)

    @property
    def consistent(self) -> bool:
        scale = max(abs(self.secular_transverse), abs(self.secular_longitudinal), 1e-300)
        return (
            self.transverse_residual <= 1e-12 * max(scale, 1.0)
            and self.longitudinal_residual <= 1e-12 * max(scale, 1.0)
        )


def compare_generators(gen: RedfieldGenerator) -> GeneratorComparison:
    """Check the Lindblad decay rates against the secular component rates.

    The transverse rate must equal ``Re[(2 eps0^2 k0 + delta^2 k-)]/(2 W^2)``
    and the longitudinal rate ``delta^2 (k+ + k-) / (2 W^2)``; any residual
    signals a normalization slip between the two constructions.
    """
    mat = lindblad_matrix(gen, include_hamiltonian=False)
    lin_t = -0.5 * (mat[1, 1] + mat[2, 2])
    lin_l = -mat[3, 3]
    omega = gen.splitting
    inv = 1.0 / (2.0 * omega * omega)
    sec_t = float((2.0 * gen.tls.eps0**2 * gen.k0 + gen.tls.delta**2 * gen.k_minus).real * inv)
    sec_l = float((gen.tls.delta**2 * (gen.k_plus + gen.k_minus)).real * inv)
    return GeneratorComparison(
        lindblad_transverse=float(lin_t),
        lindblad_longitudinal=float(lin_l),
        secular_transverse=sec_t,
        secular_longitudinal=sec_l,
    )
