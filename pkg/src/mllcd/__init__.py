"""Local community detection on multiplex networks with a layer-coverage bias."""

from .engine import (
    CommunityState,
    DetectionError,
    DetectionResult,
    Objective,
    TraceStep,
    detect,
    lc_external,
    lc_internal,
    lc_objective,
)
from .graph import (
    GraphError,
    MultilayerGraph,
    ParseError,
    dumps,
    layer_neighbors,
    load_graph,
    multilayer_neighbors,
    read_graph,
    write_graph,
)
from .similarity import BiasConfig, BiasError, biased_sim, dispersion_f, jaccard_sim

__version__ = "0.1.0"
