"""Counterfactual temporal point processes via a Gumbel-Max model of thinning."""
from .errors import CftppError, ConfigError, DominatingRateError, ObservationError
from .randomness import Label, Stream, StreamKey, make_stream
from .intensity import (BranchKernel, ConstantIntensity, HawkesParams, RbfComponent,
                        RbfMixtureIntensity, SirEdgeKernel, intensity_from_config)
from .gumbel_scm import (abduct_noise, counterfactual_prob_exact, counterfactual_prob_montecarlo,
                         counterfactual_sample)
from .thinning import EventSequence, ThinningRecord, counterfactual_acceptance, lewis_sample
from .cf_poisson import counterfactual_poisson, sample_plausible_rejections
from .hawkes import assign, counterfactual_hawkes, counterfactual_hawkes_trace, sample_hawkes

__version__ = "0.1.0"

__all__ = [
    "CftppError", "ConfigError", "DominatingRateError", "ObservationError",
    "Label", "Stream", "StreamKey", "make_stream",
    "BranchKernel", "ConstantIntensity", "HawkesParams", "RbfComponent", "RbfMixtureIntensity",
    "SirEdgeKernel", "intensity_from_config",
    "abduct_noise", "counterfactual_prob_exact", "counterfactual_prob_montecarlo", "counterfactual_sample",
    "EventSequence", "ThinningRecord", "counterfactual_acceptance", "lewis_sample",
    "counterfactual_poisson", "sample_plausible_rejections",
    "assign", "counterfactual_hawkes", "counterfactual_hawkes_trace", "sample_hawkes",
]
