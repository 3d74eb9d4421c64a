"""Upper bounds on the geometric measure of entanglement of multipartite states."""

from .mixed import AlgorithmConfig, GmEstimate, gme_mixed
from .pure import (
    bipartite_pure_gme,
    closest_product_iterate,
    generalized_schmidt,
    generalized_schmidt_qudit,
    pure_gme_multirestart,
)
from .tensor import (
    DegenerateInput,
    DensityOperator,
    Ensemble,
    HilbertStructure,
    InvalidArgument,
    ProductState,
    PureState,
    fidelity,
    partial_trace,
)

__version__ = "0.1.0"

__all__ = [
    "AlgorithmConfig",
    "GmEstimate",
    "gme_mixed",
    "bipartite_pure_gme",
    "closest_product_iterate",
    "generalized_schmidt",
    "generalized_schmidt_qudit",
    "pure_gme_multirestart",
    "DegenerateInput",
    "DensityOperator",
    "Ensemble",
    "HilbertStructure",
    "InvalidArgument",
    "ProductState",
    "PureState",
    "fidelity",
    "partial_trace",
]
