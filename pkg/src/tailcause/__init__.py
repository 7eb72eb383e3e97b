"""Extremal causal discovery with Wasserstein scores on the standard Pareto scale."""
from .errors import (
    DataError,
    FitError,
    HeavyWeightError,
    InsufficientDataError,
    NoExtremeEventsError,
    NonIdentifiableError,
    ParameterError,
    TailCauseError,
)
from .inference import (
    BootstrapConfig,
    BootstrapScores,
    ScoreCI,
    SourceVote,
    bootstrap_scores,
    source_node_vote,
)
from .margins import (
    GpMarginFit,
    SampleMatrix,
    StandardParetoMatrix,
    ThresholdSpec,
    fit_gp_margin,
    select_extreme_events,
    to_standard_pareto,
)
from .samplers import (
    CopulaSpec,
    MgpSpec,
    SemSpec,
    sample_asym_logistic,
    sample_gp_univariate,
    sample_sem,
    sample_standard_pareto_t,
    sample_standard_pareto_u,
)
from .score import (
    CausalScoreReport,
    causal_report,
    causal_score,
    mean_gap,
    rank_margins,
    w1_to_unit_exponential,
)

__version__ = "0.1.0"
