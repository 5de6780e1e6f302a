"""Exact and simulated analysis of alternating two-player search games on Markov chains."""

from .chains import (
    ChainClassification,
    MixingCertificate,
    classify,
    mixing_certificate,
    stationary_distribution,
    tv_distance,
)
from .core import (
    Belief,
    GameSpec,
    History,
    StateSpace,
    TransitionMatrix,
    TransitionSchedule,
    condition,
    propagate,
    spec_to_document,
    step_belief,
    validate_spec,
)
from .errors import (
    BeliefSumNotOne,
    ConditioningOnCertainty,
    DimensionMismatch,
    EmptySchedule,
    HorizonTooLarge,
    NegativeEntry,
    NotIrreducible,
    ParameterOutOfRange,
    RowSumNotOne,
    SearchGameError,
    SpecError,
    SpecMismatch,
    SpecParseError,
    UnknownStrategy,
    UnsupportedDimension,
)
from . import presets
from .presets import generate_example
from .regions import (
    RegionMap,
    SimplexGrid,
    check_intersection,
    check_star_convexity,
    check_zero_mass_domination,
    export_regions,
    map_regions,
    read_regions_csv,
)
from .solver import (
    DiscountedResult,
    SolveResult,
    TruncationStrategy,
    ValueBracket,
    q_value,
    solve_batch,
    truncation_strategy,
    value_bracket,
    value_discounted,
    value_finite,
)
from .strategies import (
    Cycle,
    EvaluationReport,
    Fixed,
    Greedy,
    SimulationReport,
    Strategy,
    builtin,
    evaluate_exact,
    example_strategy,
    parse_strategy,
    simulate,
)

__version__ = "0.1.0"
