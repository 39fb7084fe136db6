"""Efficiency metrics and growth modeling for social tagging systems.

The package measures how well tags identify and retrieve questions in
Stack Exchange style corpora (entropies, mutual information, inequality
and novelty statistics over time) and simulates a two-urn
reinforcement/novelty/diversity model of tag growth, including parameter
sweeps and maximum-likelihood parameter recovery.
"""

__version__ = "0.1.0"

from .analysis import (
    HeapsFit,
    MetricsSnapshot,
    composite_split_trajectory,
    distinct_growth_curve,
    fit_heaps_curve,
    heaps_fit,
    is_composite,
    mean_tag_length,
    monthly_trajectory,
    new_tag_rate,
    stratified_trajectory,
)
from .counters import FrequencyTable, JointAssignmentTable
from .estimate import (
    AssignmentTrace,
    DiversityEstimate,
    diversity_log_likelihood,
    estimate_d,
    estimate_p,
    estimate_q,
    fit_report,
    trace_from_corpus,
)
from .ingest import (
    CorpusManifest,
    QuestionRecord,
    SkipLog,
    parse_posts_stream,
    parse_tags_field,
    read_canonical,
    write_canonical,
)
from .measures import (
    EfficiencyMetrics,
    conditional_entropy,
    conditional_entropy_distinct_corpus,
    efficiency_metrics,
    entropy,
    gini,
    mutual_information_joint,
    mutual_information_uniform,
    tag_conditional_entropy,
    uniform_question_entropy,
)
from .simulate import (
    ModelParams,
    SweepResult,
    UrnState,
    new_state,
    simulate,
    simulate_state,
    softmax_weights,
    step_user,
    sweep,
    tail_slope,
)

__all__ = [
    "AssignmentTrace",
    "CorpusManifest",
    "DiversityEstimate",
    "EfficiencyMetrics",
    "FrequencyTable",
    "HeapsFit",
    "JointAssignmentTable",
    "MetricsSnapshot",
    "ModelParams",
    "QuestionRecord",
    "SkipLog",
    "SweepResult",
    "UrnState",
    "composite_split_trajectory",
    "conditional_entropy",
    "conditional_entropy_distinct_corpus",
    "distinct_growth_curve",
    "diversity_log_likelihood",
    "efficiency_metrics",
    "entropy",
    "estimate_d",
    "estimate_p",
    "estimate_q",
    "fit_heaps_curve",
    "fit_report",
    "gini",
    "heaps_fit",
    "is_composite",
    "mean_tag_length",
    "monthly_trajectory",
    "mutual_information_joint",
    "mutual_information_uniform",
    "new_state",
    "new_tag_rate",
    "parse_posts_stream",
    "parse_tags_field",
    "read_canonical",
    "simulate",
    "simulate_state",
    "softmax_weights",
    "step_user",
    "stratified_trajectory",
    "sweep",
    "tag_conditional_entropy",
    "tail_slope",
    "trace_from_corpus",
    "uniform_question_entropy",
    "write_canonical",
]
