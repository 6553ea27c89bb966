"""LMMSE smoothing of ISI-distorted Gaussian sources in AR colored noise."""
from .arfit import FitReport, approximate_process, fit_ar
from .errors import *  # noqa: F401,F403
from .messages import SymbolBeliefs, combine, extrinsic
from .model import (ArModel, AutocorrSeq, IsiChannel, ar_autocorrelation, observe,
                    sample_ar_noise, sample_source, six_tap_channel, stabilize_ar)
from .oracle import NoiseCov, block_lmmse, noise_covariance
from .smoother import (FilterOptions, StateSpace, backward_smooth, build_state_space,
                       extract_symbol_posteriors, fg_lmmse, forward_pass)

__version__ = "0.1.0"
