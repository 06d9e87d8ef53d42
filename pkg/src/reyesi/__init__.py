"""Reyes's I: spatial autocorrelation for areal compositional data."""

__version__ = "0.1.0"

from .estimators import CLRTransformer, ILRTransformer, MoranMean, MultiplicativeReplacement, ReyesI  # noqa: E402
from .geometry import CompositionSample, ContrastMatrix, contrast_matrix  # noqa: E402
from .inference import (  # noqa: E402
    critical_values,
    exact_distribution,
    monte_carlo_distribution,
    p_values,
)
from .statistic import (  # noqa: E402
    moran_i,
    moran_mean,
    reyes_i,
    reyes_statistic,
    second_moment_randomization,
    upper_bound,
)
from .weights import SpatialWeights, from_edge_list, lattice_weights, row_standardize  # noqa: E402

__all__ = [
    "CLRTransformer",
    "ILRTransformer",
    "MoranMean",
    "MultiplicativeReplacement",
    "ReyesI",
    "CompositionSample",
    "ContrastMatrix",
    "contrast_matrix",
    "critical_values",
    "exact_distribution",
    "monte_carlo_distribution",
    "p_values",
    "moran_i",
    "moran_mean",
    "reyes_i",
    "reyes_statistic",
    "second_moment_randomization",
    "upper_bound",
    "SpatialWeights",
    "from_edge_list",
    "lattice_weights",
    "row_standardize",
]
