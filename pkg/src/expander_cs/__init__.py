"""Compressed sensing with expander graphs under Poisson noise.

The package builds sparse binary sensing matrices from left-regular
bipartite expander graphs, simulates photon-limited (Poisson)
measurements, decodes with a penalized maximum a posteriori objective,
and ships executable numerical checks for every inequality behind the
recovery guarantees.
"""

__version__ = "0.1.0"

from .bounds import (
    BoundReport,
    SupportSplit,
    affine_plane_graph,
    disjoint_columns_graph,
    error_order,
    kl_distance_bound,
    map_oracle_risk_mc,
    measurement_gap_bound,
    measurement_risk_mc,
    recovery_risk_mc,
    run_suite,
    sparse_approximation_bound,
    support_split,
)
from .channel import (
    SensingMatrix,
    hellinger_affinity_term,
    load_counts,
    load_vector,
    neg_log_likelihood,
    poisson_kl,
    sample_poisson,
    save_counts,
    save_vector,
)
from .errors import (
    BudgetError,
    DimensionError,
    DomainError,
    ParameterError,
    PreconditionError,
    RegimeError,
    UncoverableError,
)
from .expander import (
    CollisionAnalysis,
    CoverSet,
    ExpanderGraph,
    ExpanderParams,
    ExpansionCertificate,
    ExpansionProfile,
    Rip1Report,
    collision_analysis,
    cover_set,
    dumps_graph,
    expansion_profile,
    find_certified_graph,
    generate_graph,
    load_graph,
    loads_graph,
    rip1_check,
    save_graph,
    verify_expansion,
)
from .experiment import ExperimentConfig, ExperimentResult, TrialRecord, run_experiment
from .recon import (
    CandidateSet,
    L1Penalty,
    Penalty,
    ReconConfig,
    ReconResult,
    SupportCodePenalty,
    UniformPenalty,
    default_lambda,
    kraft_sum,
    kraft_sum_support_code,
    map_objective,
    shift_to_gamma,
    solve_map,
)
from .tv import load_image, save_image, tv_norm

__all__ = [name for name in dir() if not name.startswith("_")]
