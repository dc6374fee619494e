"""Terminated LDPC convolutional codes from the permutation-matrix
ensemble: construction, belief-propagation decoding, and convergence
thresholds via position-dependent density evolution."""

__version__ = "0.1.0"

from .channels import ChannelModel, bec, biawgn, ebn0_from_sigma, noiseless, sigma_from_ebn0
from .ensemble import EnsembleParams, TerminatedCode, design_rate, sample_ensemble, terminate

__all__ = [
    "__version__",
    "ChannelModel", "bec", "biawgn", "noiseless",
    "sigma_from_ebn0", "ebn0_from_sigma",
    "EnsembleParams", "TerminatedCode", "design_rate",
    "sample_ensemble", "terminate",
]
