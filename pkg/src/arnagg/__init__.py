"""Krylov-subspace aggregation of finite Markov chains.

Builds reduced systems from the Arnoldi iteration on the transition matrix,
evolves them instead of the full chain, and controls the aggregation size
adaptively with a dominant-eigenvector stopping criterion.
"""

from .arnoldi import (
    ArnoldiAggregation,
    ArnoldiState,
    NaiveCriteria,
    aggregated_transient,
    approx_transient,
    arnoldi_expand,
    build_aggregation,
    closed_form_error,
    error_bound,
    naive_criteria,
    relation_residual,
    residual_row_sums,
    transient_error,
)
from .chain import (
    check_distribution,
    check_generator_matrix,
    check_stochastic_matrix,
    disaggregate,
    inf_row_sum_norm,
    l1_norm,
    l2_norm,
    spmv_left,
    transient_naive,
    uniformise,
)
from .convergence import (
    AdaptiveResult,
    ComplexRejection,
    CriterionConfig,
    DominantEigenvector,
    StopReason,
    criterion_value,
    dominant_eigenvector,
    run_adaptive,
)
from .errors import (
    ArnaggError,
    DimensionMismatchError,
    EigenSolverError,
    InvalidRateError,
    InvariantSubspaceError,
    StateSpaceOverflowError,
    ValidationError,
)
from .models import (
    BuiltinModel,
    ModelDescriptor,
    Reaction,
    ReactionNetwork,
    StateSpace,
    build_generator,
    builtin,
    enumerate_state_space,
    lotka_volterra_network,
    gene_expression_network,
    lumpable_test_chain,
    workstation_cluster,
)

__version__ = "0.1.0"
