"""Wavelet-based Hurst exponent estimation with level-pairwise ALPHEE / NC-ALPHEE.

Typical use::

    from hurstwave import SignalSpec, synthesize, make_filter, analyze
    sig = synthesize(SignalSpec(2**14, 0.7, sigma_eps=0.1, seed=1))
    analyze(sig, make_filter("sym6"), "nc_alphee", 3, 10)
"""

from ._kernels import BACKEND_NAME
from .errors import (
    ConfigError,
    DomainError,
    HurstError,
    IncompatibleModelError,
    InsufficientDataError,
    ModelFormatError,
    NoDataError,
    SearchFailedError,
    ShapeError,
    TrainingDivergedError,
)
from .estimators import (
    METHODS,
    NoiseEstimate,
    PairEstimate,
    SpectrumFit,
    all_pair_estimates,
    alphee_pair,
    estimate_noise_variance,
    nc_alphee_pair,
    pair_count,
    pair_ids,
    spectrum_regression,
)
from .fbm import Signal, SignalSpec, add_noise, generate_fbm, read_signal, synthesize
from .filters import FILTER_NAMES, WaveletFilter, make_filter
from .pipeline import analyze
from .special import digamma, log_chi2_moments, trigamma
from .wavelet import WaveletDecomposition, detrend_endpoints, dwt, idwt, level_energies

__version__ = "0.1.0"

__all__ = [
    "BACKEND_NAME",
    "ConfigError",
    "DomainError",
    "FILTER_NAMES",
    "HurstError",
    "IncompatibleModelError",
    "InsufficientDataError",
    "METHODS",
    "ModelFormatError",
    "NoDataError",
    "NoiseEstimate",
    "PairEstimate",
    "SearchFailedError",
    "ShapeError",
    "Signal",
    "SignalSpec",
    "SpectrumFit",
    "TrainingDivergedError",
    "WaveletDecomposition",
    "WaveletFilter",
    "add_noise",
    "all_pair_estimates",
    "alphee_pair",
    "analyze",
    "detrend_endpoints",
    "digamma",
    "dwt",
    "estimate_noise_variance",
    "generate_fbm",
    "idwt",
    "level_energies",
    "log_chi2_moments",
    "make_filter",
    "nc_alphee_pair",
    "pair_count",
    "pair_ids",
    "read_signal",
    "spectrum_regression",
    "synthesize",
    "trigamma",
]
