"""netlasso: penalized-consensus sparse linear regression over mesh networks.

A simulator and library for the distributed proximal-gradient algorithm
applied to the consensus-penalized LASSO, together with the centralized
baseline, parameter-selection rules, theoretical diagnostics, and an
experiment harness.
"""

from .errors import (
    BandNotMetError,
    ConfigError,
    DataFormatError,
    DisconnectedGraphError,
    DivergenceError,
    NetlassoError,
    NumericalError,
    RegimeError,
)
from .graph import (
    GossipMatrix,
    Graph,
    build_topology,
    lazy_metropolis_weights,
    metropolis_weights,
    spectral_gap,
    uniform_average_matrix,
)

__all__ = [
    "BandNotMetError",
    "ConfigError",
    "DataFormatError",
    "DisconnectedGraphError",
    "DivergenceError",
    "NetlassoError",
    "NumericalError",
    "RegimeError",
    "GossipMatrix",
    "Graph",
    "build_topology",
    "lazy_metropolis_weights",
    "metropolis_weights",
    "spectral_gap",
    "uniform_average_matrix",
]

__version__ = "0.1.0"
