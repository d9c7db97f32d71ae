"""Recall-oriented ranking evaluation.

Classical metrics in an exposure-times-normalization framework, the
bottom-position efficiency metric, bottom-up lexicographic preferences,
brute-force worst-case population oracles, exact tie-probability
combinatorics, seeded simulators, and a significance-testing pipeline,
plus parsers for standard run/qrels/ratings files and a CLI.
"""

from .analytics import (
    ExactProbability,
    SimulationConfig,
    agreement_with_worst_case,
    degradation_study,
    degrade_judgments,
    orientation,
    simulate_pairs,
    tie_fractions,
    tie_probability,
)
from .core import (
    ExposureKind,
    ExposureModel,
    Imputation,
    JudgmentSet,
    JudgmentSource,
    Preference,
    PreferenceOutcome,
    RankedList,
    RelevantPositions,
    exposure_at,
    project_and_impute,
)
from .errors import (
    EnumerationBudgetError,
    LexirankError,
    ParseError,
    UndefinedResultError,
    UnevaluableRequestError,
    ValidationError,
)
from .io import parse_qrels, parse_ratings_csv, parse_run_file, write_table
from .metrics import (
    MetricId,
    MetricKind,
    NormalizationKind,
    NormalizationModel,
    evaluate,
    is_top_heavy,
    lexirecall_weights,
    metric_lexirecall,
    recall_level_form,
    recall_level_metric,
    tse,
)
from .prefs import (
    UtilityVector,
    leximin_compare,
    lexirecall_compare,
    make_method,
    metric_compare,
    tse_compare,
)
from .robustness import (
    UserSubset,
    enumerate_users,
    optimal_ranker_worst_case,
    provider_utility,
    user_utility,
    worst_case_provider,
    worst_case_user,
)
from .stats import (
    PreferenceTallies,
    ScoreMatrix,
    binomial_sign_test,
    discriminative_power,
    holm_bonferroni,
    paired_t_test,
    studentized_range_cdf,
    studentized_range_critical,
    tukey_hsd,
)

__version__ = "0.1.0"

__all__ = [
    "EnumerationBudgetError",
    "ExactProbability",
    "ExposureKind",
    "ExposureModel",
    "Imputation",
    "JudgmentSet",
    "JudgmentSource",
    "LexirankError",
    "MetricId",
    "MetricKind",
    "NormalizationKind",
    "NormalizationModel",
    "ParseError",
    "Preference",
    "PreferenceOutcome",
    "PreferenceTallies",
    "RankedList",
    "RelevantPositions",
    "ScoreMatrix",
    "SimulationConfig",
    "UndefinedResultError",
    "UnevaluableRequestError",
    "UserSubset",
    "UtilityVector",
    "ValidationError",
    "agreement_with_worst_case",
    "binomial_sign_test",
    "degradation_study",
    "degrade_judgments",
    "discriminative_power",
    "enumerate_users",
    "evaluate",
    "exposure_at",
    "holm_bonferroni",
    "is_top_heavy",
    "leximin_compare",
    "lexirecall_compare",
    "lexirecall_weights",
    "make_method",
    "metric_compare",
    "metric_lexirecall",
    "optimal_ranker_worst_case",
    "orientation",
    "paired_t_test",
    "parse_qrels",
    "parse_ratings_csv",
    "parse_run_file",
    "project_and_impute",
    "provider_utility",
    "recall_level_form",
    "recall_level_metric",
    "simulate_pairs",
    "studentized_range_cdf",
    "studentized_range_critical",
    "tie_fractions",
    "tie_probability",
    "tse",
    "tse_compare",
    "tukey_hsd",
    "user_utility",
    "worst_case_provider",
    "worst_case_user",
    "write_table",
]
