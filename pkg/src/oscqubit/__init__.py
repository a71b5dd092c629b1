"""Coupled noisy parametric oscillators as an analog dissipative qubit.

Two coupled classical oscillators with a stochastically fluctuating
parametric drive reproduce the dissipative dynamics of a two-level system,
including distinct longitudinal and transverse relaxation times and a pure
dephasing rate.  The package provides the raw mechanical integration, the
slowly-varying-envelope reduction, exact colored-noise sampling, a
Monte-Carlo ensemble engine, the second-order cumulant (Redfield) and
secular Lindblad descriptions, rate fitting, and a CLI that renders the
standard decay and Bloch-sphere figures alongside CSV output.
"""

from .envelope import (
    BlochTrajectory,
    DivergenceError,
    EnvelopeSeries,
    EnvelopeState,
    TLSParams,
    bloch_from_state,
    integrate_bloch_deterministic,
    integrate_envelope,
    interaction_picture,
    rotate_to_bare,
    rotate_to_diabatic,
    state_from_bloch,
)
from .ensemble import EnsembleResult, EnsembleSpec, convergence_study, run_ensemble
from .fitting import FitResult, compare_rates, fit_exponential
from .mechanics import (
    DriveSpec,
    MechanicalParams,
    MechState,
    demodulate,
    integrate_mechanics,
    lower_params,
    map_params,
)
from .noise import NoisePath, OUParams, autocorrelation, sample_path, spectral_weight
from .redfield import (
    RedfieldGenerator,
    RelaxationTimes,
    build_generator,
    compare_generators,
    integrate_redfield,
    lindblad_generator,
    lindblad_matrix,
    relaxation_times,
)

__version__ = "0.1.0"

__all__ = [
    "BlochTrajectory",
    "DivergenceError",
    "DriveSpec",
    "EnsembleResult",
    "EnsembleSpec",
    "EnvelopeSeries",
    "EnvelopeState",
    "FitResult",
    "MechState",
    "MechanicalParams",
    "NoisePath",
    "OUParams",
    "RedfieldGenerator",
    "RelaxationTimes",
    "TLSParams",
    "autocorrelation",
    "bloch_from_state",
    "build_generator",
    "compare_generators",
    "compare_rates",
    "convergence_study",
    "demodulate",
    "fit_exponential",
    "integrate_bloch_deterministic",
    "integrate_envelope",
    "integrate_mechanics",
    "integrate_redfield",
    "interaction_picture",
    "lindblad_generator",
    "lindblad_matrix",
    "lower_params",
    "map_params",
    "relaxation_times",
    "rotate_to_bare",
    "rotate_to_diabatic",
    "run_ensemble",
    "sample_path",
    "spectral_weight",
    "state_from_bloch",
]
