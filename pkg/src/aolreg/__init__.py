"""Aggregation-of-leaders least-squares regression on discrete designs."""

from .aggregate import AggregatorSpec, ew_aggregate, ms_aggregate, segment_ls, star_aggregate
from .bounds import (
    BoundInputs,
    EntropyModel,
    barpsi,
    barpsi_breakpoints,
    dudley_bound,
    entropy_integral,
    loc_radius,
    psi_nms,
    tilde_psi,
    xi_bound,
)
from .domain import (
    BoxSequence,
    Dataset,
    DictionaryHull,
    FiniteList,
    Member,
    MemberBudgetError,
    Mixture,
    Predictor,
    ThreeWaySplit,
    VcIndicator,
    enumerate_members,
    evaluate,
    split_threeway,
)
from .empirical import EmpiricalMetricContext, EpsilonNet, emp_metric, emp_risk, greedy_cover, rademacher_mc
from .estimators import AolConfig, FitRecord, aol_fit, epsilon_rule, global_erm_fit, skeleton_fit, sparse_convex_fit
from .netpart import Partition, build_partition, cell_members
from .solvers import ErmResult, erm_cell, erm_enumerate, erm_simplex
from .worlds import (
    HammingCode,
    World,
    d_selection_pack,
    exact_risk,
    excess_risk,
    make_delta_world,
    make_hypercube_world,
    make_vc_world,
    sample_world,
)

__version__ = "0.1.0"

__all__ = [
    "AggregatorSpec", "AolConfig", "BoundInputs", "BoxSequence", "Dataset", "DictionaryHull",
    "EmpiricalMetricContext", "EntropyModel", "EpsilonNet", "ErmResult", "FiniteList", "FitRecord",
    "HammingCode", "Member", "MemberBudgetError", "Mixture", "Partition", "Predictor", "ThreeWaySplit",
    "VcIndicator", "World", "aol_fit", "barpsi", "barpsi_breakpoints", "build_partition", "cell_members",
    "d_selection_pack", "dudley_bound", "emp_metric", "emp_risk", "entropy_integral", "enumerate_members",
    "epsilon_rule", "erm_cell", "erm_enumerate", "erm_simplex", "evaluate", "ew_aggregate", "exact_risk",
    "excess_risk", "global_erm_fit", "greedy_cover", "loc_radius", "make_delta_world", "make_hypercube_world",
    "make_vc_world", "ms_aggregate", "psi_nms", "rademacher_mc", "sample_world", "segment_ls",
    "skeleton_fit", "sparse_convex_fit", "split_threeway", "star_aggregate", "tilde_psi", "xi_bound",
]
