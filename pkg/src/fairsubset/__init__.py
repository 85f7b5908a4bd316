"""Contextually fair subset selection for multi-label datasets."""

__version__ = "0.1.0"

from .composition import (
    CategorySet,
    CompositionMatrix,
    CooccurrenceTable,
    ProtectedView,
    build_composition,
    cooccurrence_stats,
    protected_view,
    selection_counts,
)
from .errors import InfeasibleError, ValidationError
from .inequality import coefficient_of_variation, generalized_entropy_index, quadratic_objective
from .selection import (
    Selection,
    baseline_select,
    brute_force_select,
    fair_select,
    pair_balance_select,
    ratio_constrained_select,
)
from .aloft import (
    ALState,
    DetectorNoise,
    extract_pseudo_labels,
    run_aloft,
    run_aloft_cycle,
    simulate_detector,
)
from .metrics import (
    AttackerModel,
    LabelVectorRecord,
    OutcomeRecord,
    average_precision,
    bias_amplification,
    equalized_odds_disparity,
    fit_attacker,
    leakage,
    representational_bias,
)
