"""Bias-corrected participation-ratio dimensionality estimators."""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .estimator import (  # noqa: F401
    Centering,
    Correction,
    DimEstimate,
    EstimatorVariant,
    TermBreakdown,
    TrialPair,
    compute_terms,
    estimate_all_variants,
    estimate_dimensionality,
    unequal_pair_contraction,
)
from .synth import Kind, NoiseMode, PopulationSpec, generate, generate_trial_pair  # noqa: F401
