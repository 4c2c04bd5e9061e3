"""Bond percolation on networks with a prescribed joint degree-degree distribution."""

from .analytics import (
    CriticalityError,
    ConvergenceError,
    analyze_curve,
    classify_peaks,
    finite_component_size,
    find_threshold,
    giant_component,
)
from .joint_dist import (
    DistributionError,
    JointDegreeDistribution,
    build_family,
    conditional_dist,
    load_custom,
    marginal_degree_dist,
    pearson_at,
    pearson_decay,
    percolate_joint,
)
from .mc_sim import component_stats, run_ensemble, sample_graph

__version__ = "0.1.0"
