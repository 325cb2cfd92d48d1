"""Directed graphical utility networks with ceteris-paribus semantics:
model construction, validity checking, outcome optimization, expected-
utility decisions over Bayes nets, and minimax-regret weight elicitation.
"""

from .bayes import (
    Action,
    BayesNet,
    BayesSpec,
    DecisionScenario,
    ExplicitSupport,
    MarginalTable,
    UtilityNode,
    build_influence,
    compile_to_support,
    expected_value,
    factor_spans,
    staged_decision,
    ve_marginal,
)
from .elicit import (
    ElicitationSession,
    Query,
    QueryResponse,
    RegretReport,
    WeightSpace,
    apply_response,
    build_query_pool,
    ev_linear_form,
    minimax_regret,
    pairwise_max_advantage,
    query_improvement,
    select_query,
    structural_constraints,
)
from .errors import (
    CompileFirstError,
    ContradictionError,
    ContradictoryQueryError,
    DocumentError,
    DuplicateLastVariableError,
    EmptyWeightSpaceError,
    IncompleteWeightsError,
    InvalidAssignmentError,
    InvalidModelError,
    SizeLimitError,
    UcpError,
    UnknownActionError,
    ValidityRequiredError,
    ZeroProbabilityError,
)
from .io import (
    load_gai,
    load_net,
    load_scenario,
    save_net,
)
from .lp import (
    LinearConstraint,
    LinearExpr,
    LpSolution,
    enumerate_vertices,
    solve_lp,
)
from .model import (
    EPS_UTIL,
    Factor,
    NormalizedUcpNet,
    UcpNet,
    VariableTable,
    assignment_key,
    compare_outcomes,
    evaluate_utility,
    instantiate_weights,
    normalize_net,
    parse_assignment_key,
    pi_id,
    sigma_id,
)
from .optimize import brute_force_optimize, forward_sweep
from .validation import (
    GaiDecomposition,
    GaiFactor,
    ValidationReport,
    check_acyclic,
    cpi_oracle,
    cp_satisfaction_oracle,
    dominates_children,
    family_semantics_hold,
    is_valid_ucp,
    sufficient_check,
    topology_from_gai,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
