"""STFT-based synchrosqueezing with tvAR bootstrap uncertainty quantification."""

__version__ = "0.1.0"

from .core import FreqGrid, SstBootError, Tfr, TfrKind, TimeSeries, WindowPair, uniform_grid
from .pipeline import Analysis, Pipeline, PipelineConfig, analyze
from .recon import Ridge, ComponentEstimate, extract_ridge, reconstruct
from .sst import SstParams, reassign, synchrosqueeze
from .stft import WindowFamily, make_window, stft, stft_pair
from .tvar import TvarModel, fit_tvar, sample_bootstrap
from .uq import BandSpec, Bands, apply_threshold, bootstrap_bands, noise_threshold, spline_lift

__all__ = [
    "__version__",
    "FreqGrid", "SstBootError", "Tfr", "TfrKind", "TimeSeries", "WindowPair", "uniform_grid",
    "Analysis", "Pipeline", "PipelineConfig", "analyze",
    "Ridge", "ComponentEstimate", "extract_ridge", "reconstruct",
    "SstParams", "reassign", "synchrosqueeze",
    "WindowFamily", "make_window", "stft", "stft_pair",
    "TvarModel", "fit_tvar", "sample_bootstrap",
    "BandSpec", "Bands", "apply_threshold", "bootstrap_bands", "noise_threshold", "spline_lift",
]
