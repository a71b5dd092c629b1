"""Stationary Ornstein-Uhlenbeck drive fluctuations.

The multiplicative frequency noise entering the parametric drive is a
zero-mean stationary Gaussian process with exponential autocorrelation

    <Gamma(0) Gamma(t)> = (strength / tau_c) * exp(-|t| / tau_c)

so the stationary variance is ``strength / tau_c`` and the autocorrelation
integrated over the whole line equals ``2 * strength``.  The limit
``tau_c -> 0`` is white noise of intensity ``2 * strength``; in that limit
only integrated increments are meaningful and paths carry increments with
variance ``2 * strength * dt`` per step.

Sampling uses the exact one-step transition of the process (not an Euler
scheme), so the generated statistics are unbiased for any step size.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

__all__ = [
    "OUParams",
    "NoisePath",
    "sample_path",
    "sample_paths",
    "autocorrelation",
    "spectral_weight",
    "path_rng",
    "write_path_csv",
]


@dataclass(frozen=True)
class OUParams:
    """Noise strength, correlation time and reproducibility seed.

    ``strength`` has units of frequency: ``strength * tau_c`` is the
    dimensionless perturbative parameter and ``strength / tau_c`` the
    stationary variance (frequency squared).  ``tau_c = 0`` selects the
    white-noise limit and is handled specially everywhere.
    """

    strength: float
    tau_c: float
    seed: int = 0

    def __post_init__(self) -> None:
        if self.strength < 0:
            raise ValueError(f"noise strength must be >= 0, got {self.strength}")
        if self.tau_c < 0:
            raise ValueError(f"correlation time must be >= 0, got {self.tau_c}")

    @property
    def is_white(self) -> bool:
        return self.tau_c == 0.0

    @property
    def stationary_variance(self) -> float:
        """Variance of the pointwise process; infinite in the white limit."""
        if self.is_white:
            return np.inf if self.strength > 0 else 0.0
        return self.strength / self.tau_c

    @property
    def perturbative_product(self) -> float:
        """Dimensionless strength * tau_c controlling the cumulant truncation."""
        return self.strength * self.tau_c

    def perturbative_ok(self) -> bool:
        """Whether the second-order (Redfield) description is trustworthy."""
        return self.perturbative_product < 1.0


@dataclass
class NoisePath:
    """One sampled realization on a uniform grid.

    For a colored path (``white_noise`` False) ``values[n]`` is the process
    at ``t = n * dt``; there are ``n_steps + 1`` fencepost samples.  For a
    white path ``values[n]`` is the integrated increment over step ``n``
    (variance ``2 * strength * dt``) and there are ``n_steps`` entries.
    """

    dt: float
    values: np.ndarray
    white_noise: bool = False

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.dt <= 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.values.ndim != 1 or self.values.size < 1:
            raise ValueError("values must be a non-empty 1-d array")

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.values.size)

    def value_at_midpoints(self) -> np.ndarray:
        """Linear interpolation at step midpoints (colored paths only)."""
        if self.white_noise:
            raise ValueError("white-noise paths carry increments, not values")
        return 0.5 * (self.values[:-1] + self.values[1:])


def path_rng(master_seed: int, path_index: int) -> np.random.Generator:
    """Independent per-path generator from a counter-based seed split.

    Derived streams depend only on (master_seed, path_index), so ensembles
    are reproducible regardless of scheduling order or worker count.
    """
    return np.random.default_rng(
        np.random.SeedSequence(entropy=master_seed, spawn_key=(path_index,))
    )


def _sample_colored(
    params: OUParams, dt: float, n_steps: int, rng: np.random.Generator
) -> np.ndarray:
    var = params.stationary_variance
    if params.strength == 0.0:
        return np.zeros(n_steps + 1)
    decay = np.exp(-dt / params.tau_c)
    step_sigma = np.sqrt(var * (1.0 - decay * decay))
    shocks = rng.standard_normal(n_steps + 1)
    # first entry seeds the recursion with a stationary draw
    shocks[0] *= np.sqrt(var)
    shocks[1:] *= step_sigma
    return lfilter([1.0], [1.0, -decay], shocks)


def sample_path(
    params: OUParams,
    dt: float,
    n_steps: int,
    rng: np.random.Generator | None = None,
) -> NoisePath:
    """Sample one realization using the exact transition update.

    For ``tau_c > 0`` the update is
    ``x[n+1] = x[n] * exp(-dt/tau_c) + sqrt(var * (1 - exp(-2 dt/tau_c))) * xi``
    with ``x[0]`` drawn from the stationary distribution, which reproduces
    the conditional law of the process exactly for any ``dt``.  For
    ``tau_c = 0`` the path holds white-noise increments of variance
    ``2 * strength * dt`` and is flagged accordingly.
    """
    if dt <= 0:
        raise ValueError(f"dt must be > 0, got {dt}")
    if n_steps < 1:
        raise ValueError(f"n_steps must be >= 1, got {n_steps}")
    if rng is None:
        rng = np.random.default_rng(np.random.SeedSequence(params.seed))
    if params.is_white:
        sigma = np.sqrt(2.0 * params.strength * dt)
        return NoisePath(dt, sigma * rng.standard_normal(n_steps), white_noise=True)
    return NoisePath(dt, _sample_colored(params, dt, n_steps, rng))


def sample_paths(
    params: OUParams, dt: float, n_steps: int, n_paths: int
) -> np.ndarray:
    """Sample an ensemble of colored paths, one row per realization.

    Rows use per-path seed splits of ``params.seed``, so row ``i`` does not
    depend on ``n_paths``.
    """
    if params.is_white:
        raise ValueError("path ensembles are defined for tau_c > 0 only")
    out = np.empty((n_paths, n_steps + 1))
    for i in range(n_paths):
        out[i] = _sample_colored(params, dt, n_steps, path_rng(params.seed, i))
    return out


def autocorrelation(
    paths: np.ndarray, dt: float, max_lag: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Unbiased lag estimates with standard errors from path scatter.

    Each path contributes ``c_l = sum_n x[n] x[n+l] / (N - l)``; the
    estimate is the mean over paths, the error the standard error of that
    mean.  Requires at least two paths of equal length.

    Returns ``(lag_times, estimates, stderr)``.
    """
    paths = np.asarray(paths, dtype=float)
    if paths.ndim != 2 or paths.shape[0] < 2:
        raise ValueError("need a 2-d array with at least two paths")
    n_paths, n_samples = paths.shape
    if max_lag >= n_samples:
        raise ValueError(f"max_lag {max_lag} too large for {n_samples} samples")
    per_path = np.empty((n_paths, max_lag + 1))
    for lag in range(max_lag + 1):
        stop = n_samples - lag
        per_path[:, lag] = np.einsum(
            "ij,ij->i", paths[:, :stop], paths[:, lag:]
        ) / stop
    est = per_path.mean(axis=0)
    err = per_path.std(axis=0, ddof=1) / np.sqrt(n_paths)
    return dt * np.arange(max_lag + 1), est, err


def spectral_weight(params: OUParams, omega: float, alpha: int) -> complex:
    """One-sided Fourier weight of the autocorrelation at ``alpha * omega``.

    Evaluates ``integral_0^inf <Gamma(t) Gamma(t - t')> exp(i alpha omega t') dt'``
    which for the exponential autocorrelation closes to

        strength * (1 + i alpha omega tau_c) / (1 + alpha^2 omega^2 tau_c^2).

    At ``alpha = 0`` or in the white limit this is just the strength.
    """
    if omega <= 0:
        raise ValueError(f"omega must be > 0, got {omega}")
    if alpha not in (-1, 0, 1):
        raise ValueError(f"alpha must be one of -1, 0, +1, got {alpha}")
    if params.is_white or alpha == 0:
        return complex(params.strength)
    x = alpha * omega * params.tau_c
    return params.strength * (1.0 + 1j * x) / (1.0 + x * x)


def write_path_csv(path: NoisePath, destination) -> None:
    """Dump a path as ``t,gamma_d`` rows (white paths store increments)."""
    header = "t,gamma_d"
    data = np.column_stack([path.times, path.values])
    np.savetxt(destination, data, fmt="%.12g", delimiter=",", header=header, comments="")
