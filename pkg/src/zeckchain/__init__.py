"""Generalized Zeckendorf decompositions and the Markov chain model of their uniform measure."""

__version__ = "0.1.0"

from .chain import ChainModel, ChainState, StateSpace, build_chain, build_state_space, verify_spectral
from .decomposer import DigitString, count_legal, decompose, enumerate_legal, is_legal, recompose
from .errors import BudgetError, InputError, InternalFault, ModelError, UnsupportedModelError, ZeckError
from .functionals import (
    StatReport,
    asymptotic_variance,
    conditioned_mean_counting,
    conditioned_mean_theorem22,
    conditioned_mean_weighted_chain,
    conditioned_variance_counting,
    group_inverse,
    lekkerkerker_constants,
)
from .gaps import GapLaw, MaxGapLaw, gap_counts, limit_gap_law, max_gap, maxgap_exact_cdf, maxgap_law, spacing_margin
from .oracle import exhaustive_stats, transfer_stats
from .recurrence import Recurrence, companion_spectral, new_recurrence, perron_root, scale_sequence
from .sampler import SampleBatch, estimate, sample_paths

__all__ = [
    "BudgetError",
    "ChainModel",
    "ChainState",
    "DigitString",
    "GapLaw",
    "InputError",
    "InternalFault",
    "MaxGapLaw",
    "ModelError",
    "Recurrence",
    "SampleBatch",
    "StatReport",
    "StateSpace",
    "UnsupportedModelError",
    "ZeckError",
    "asymptotic_variance",
    "build_chain",
    "build_state_space",
    "companion_spectral",
    "conditioned_mean_counting",
    "conditioned_mean_theorem22",
    "conditioned_mean_weighted_chain",
    "conditioned_variance_counting",
    "count_legal",
    "decompose",
    "enumerate_legal",
    "estimate",
    "exhaustive_stats",
    "gap_counts",
    "group_inverse",
    "is_legal",
    "lekkerkerker_constants",
    "limit_gap_law",
    "max_gap",
    "maxgap_exact_cdf",
    "maxgap_law",
    "new_recurrence",
    "perron_root",
    "recompose",
    "sample_paths",
    "scale_sequence",
    "spacing_margin",
    "transfer_stats",
    "verify_spectral",
]
