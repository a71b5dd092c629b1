"""Exponential decay-rate extraction and rate comparison records."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import curve_fit
from scipy.signal import hilbert

__all__ = [
    "FitResult",
    "RateComparison",
    "fit_exponential",
    "compare_rates",
    "default_window",
    "debiased_magnitude",
]


@dataclass(frozen=True)
class FitResult:
    """Fitted decay ``amplitude * exp(-rate * t) + offset`` over a window."""

    rate: float
    amplitude: float
    offset: float
    rate_stderr: float
    window: tuple[float, float]
    quality: float  # rms residual of the fitted model inside the window

    def __post_init__(self) -> None:
        if self.rate_stderr < 0:
            raise ValueError("rate_stderr must be >= 0")


@dataclass(frozen=True)
class RateComparison:
    """PASS/FAIL record of a fitted rate against an analytic one."""

    fitted: float
    analytic: float
    tolerance: float
    pooled_stderr: float
    passed: bool

    @property
    def relative_deviation(self) -> float:
        return abs(self.fitted - self.analytic) / abs(self.analytic)


def debiased_magnitude(
    re: np.ndarray, im: np.ndarray, se_re: np.ndarray, se_im: np.ndarray
) -> np.ndarray:
    """Magnitude of a noisily estimated complex mean, noise floor removed.

    The squared magnitude of an estimated mean exceeds the true one by the
    component variances; subtracting them before the square root removes
    the Rayleigh-type positive bias that would otherwise flatten fitted
    decays once the signal approaches the error bars.
    """
    mag2 = re * re + im * im - se_re * se_re - se_im * se_im
    return np.sqrt(np.maximum(mag2, 0.0))


def default_window(rate_guess: float) -> tuple[float, float]:
    """Fit between half and three decay times of the expected rate.

    Skipping the first half decay time avoids the early window where the
    coarse-grained (memoryless) description has not set in yet; stopping at
    three decay times stays above the noise floor.
    """
    if rate_guess <= 0:
        raise ValueError("rate_guess must be > 0")
    return 0.5 / rate_guess, 3.0 / rate_guess


def _log_fit(
    t: np.ndarray, y: np.ndarray, sigma: np.ndarray | None = None
) -> tuple[float, float, float]:
    """Weighted LS on log(y); returns (rate, amplitude, rate_stderr).

    Without explicit uncertainties, weights proportional to y^2 make the
    log fit equivalent to constant absolute noise on y itself; with them,
    weights are y^2 / sigma^2.
    """
    if sigma is None:
        w = y * y
    else:
        w = (y / sigma) ** 2
    ly = np.log(y)
    sw = w.sum()
    tbar = (w * t).sum() / sw
    lbar = (w * ly).sum() / sw
    dt_ = t - tbar
    denom = (w * dt_ * dt_).sum()
    slope = (w * dt_ * (ly - lbar)).sum() / denom
    resid = ly - (lbar + slope * dt_)
    dof = max(t.size - 2, 1)
    s2 = (w * resid * resid).sum() / dof / sw  # residual-scaled weight variance
    var_slope = s2 * sw / denom
    return -slope, float(np.exp(lbar - slope * tbar)), float(np.sqrt(var_slope))


def fit_exponential(
    times: np.ndarray,
    values: np.ndarray,
    window: tuple[float, float] | None = None,
    envelope_mode: bool = False,
    fit_offset: bool = False,
    rate_guess: float | None = None,
    sigma: np.ndarray | None = None,
) -> FitResult:
    """Fit a decaying exponential to a trajectory segment.

    ``envelope_mode`` first reduces the signal to a positive envelope:
    complex input by magnitude, real oscillatory input by the magnitude of
    its analytic (Hilbert) signal.  Without an offset the fit is weighted
    least squares on the logarithm; with ``fit_offset`` a full nonlinear
    ``a exp(-k t) + c`` fit is used.  The window defaults to
    :func:`default_window` of ``rate_guess`` when one is supplied.
    ``sigma`` supplies known per-point standard errors (ensemble means);
    points with tighter errors then dominate the fit.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values)
    if times.ndim != 1 or times.size != values.shape[0]:
        raise ValueError("times and values must be 1-d and equally long")
    if sigma is not None:
        sigma = np.asarray(sigma, dtype=float)
        if sigma.shape != times.shape:
            raise ValueError("sigma must match times")
        floor = max(np.max(sigma) * 1e-6, 1e-300)
        sigma = np.maximum(sigma, floor)
    if envelope_mode:
        if np.iscomplexobj(values):
            values = np.abs(values)
        else:
            values = np.abs(hilbert(np.asarray(values, dtype=float)))
    else:
        values = np.asarray(values, dtype=float)
    if window is None:
        if rate_guess is not None:
            window = default_window(rate_guess)
        else:
            window = (float(times[0]), float(times[-1]))
    lo, hi = window
    if not (times[0] - 1e-12 <= lo < hi <= times[-1] + 1e-12):
        raise ValueError(f"window {window} outside data range")
    mask = (times >= lo) & (times <= hi)
    if mask.sum() < 20:
        raise ValueError("need at least 20 samples inside the fit window")
    t = times[mask]
    y = values[mask]
    s = sigma[mask] if sigma is not None else None

    if fit_offset:
        # linear log-fit on the upper half seeds the nonlinear solve
        guess_off = float(y.min())
        positive = y - guess_off + 1e-12 * max(1.0, abs(guess_off))
        k0, a0, _ = _log_fit(t - t[0], positive)
        p0 = [a0, max(k0, 1e-6), guess_off]

        def model(tt, a, k, c):
            return a * np.exp(-k * (tt - t[0])) + c

        popt, pcov = curve_fit(model, t, y, p0=p0, sigma=s, maxfev=20000)
        a, k, c = popt
        amp = a * np.exp(k * t[0])
        resid = y - model(t, *popt)
        return FitResult(
            rate=float(k),
            amplitude=float(amp),
            offset=float(c),
            rate_stderr=float(np.sqrt(max(pcov[1, 1], 0.0))),
            window=(lo, hi),
            quality=float(np.sqrt(np.mean(resid**2))),
        )

    if np.any(y <= 0):
        raise ValueError("log-mode fit needs strictly positive data in the window")
    rate, amp, err = _log_fit(t, y, s)
    resid = y - amp * np.exp(-rate * t)
    return FitResult(
        rate=float(rate),
        amplitude=float(amp),
        offset=0.0,
        rate_stderr=err,
        window=(lo, hi),
        quality=float(np.sqrt(np.mean(resid**2))),
    )


def compare_rates(fit: FitResult, analytic: float, tol: float) -> RateComparison:
    """Relative comparison of a fitted rate against an analytic value."""
    if analytic == 0:
        raise ValueError("analytic rate must be nonzero for a relative comparison")
    rel = abs(fit.rate - analytic) / abs(analytic)
    return RateComparison(
        fitted=fit.rate,
        analytic=analytic,
        tolerance=tol,
        pooled_stderr=fit.rate_stderr,
        passed=bool(rel <= tol),
    )
