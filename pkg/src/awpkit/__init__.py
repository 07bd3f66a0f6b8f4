"""Approximating a hidden distribution over a data set from weight queries.

Given a hierarchical tree over the examples and an oracle answering leaf
and subtree weight queries, the package searches for a small pruning of
the tree whose induced piecewise-uniform weighting is close to the hidden
target in total variation, and compares the adaptive search against
budget-matched baselines.
"""

from awpkit.adversarial import (
    Construction,
    HeavyLeafVectors,
    assemble,
    build_greedy_trap_a,
    build_greedy_trap_b,
    build_lookahead_trap,
    build_tightness,
    greedy_lookahead,
    greedy_max_discrepancy,
    heavy_leaf_vectors,
)
from awpkit.baselines import (
    Budget,
    empirical_score,
    match_budget,
    run_empirical,
    run_uniform,
    run_weight,
    uniform_score,
)
from awpkit.engine import (
    AwpRun,
    EngineConfig,
    PruningResult,
    dump_trace,
    normalized_distance,
    refine_with_queries,
    run_awp,
    sc_satisfied,
)
from awpkit.estimator import (
    NodeStats,
    bernstein_radius,
    confidence_radius,
    estimate_discrepancy,
    exact_discrepancy,
    hoeffding_radius,
)
from awpkit.fileio import (
    dump_tree,
    dump_weights,
    dumps_tree,
    dumps_weights,
    load_tree,
    load_weights,
    loads_tree,
    loads_weights,
)
from awpkit.oracle import (
    Oracle,
    QueryLedger,
    TargetSpec,
    build_median_split_tree,
    build_random_balanced_tree,
    leaf_order_bins,
    make_geometric_target,
    random_features,
)
from awpkit.tree import (
    FileFormatError,
    HierTree,
    InvariantError,
    TreeStructureError,
    WeightTable,
    Weighting,
    average_split_quality,
    induced_weighting,
    is_pruning,
    leaves_under,
    node_discrepancies,
    node_discrepancy,
    optimal_pruning,
    pruning_discrepancy,
    split_quality,
    tv_distance,
    validate,
)

__version__ = "0.1.0"
