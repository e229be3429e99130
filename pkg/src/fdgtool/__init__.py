"""Dependence-graph toolkit for capacitated acyclic networks.

Builds the functional dependence graph of a network, reduces it under
capacity-preserving rules, generates and exactly solves the entropy-space
LP outer bound on achievable rates, and constructs the symbolic scalar
linear coding matrices with finite-field solvability search.
"""

from .netmodel import (
    Edge,
    InvalidNetworkError,
    Network,
    NetworkFormatError,
    Sink,
    Source,
    Weights,
    in_edges,
    load_fixture,
    out_edges,
    parse_network,
    serialize_network,
    topological_order,
    validate,
)
from .fdg import (
    EdgeVar,
    Fdg,
    ReductionTrace,
    SourceVar,
    Step,
    UnitCapacityError,
    build_fdg,
    reduce,
    remove_var,
    removable,
    replay,
)
from .lpbound import (
    LpProblem,
    LpSolution,
    LpStats,
    build_lp,
    elemental_inequalities,
    export_lp,
    lp_solve,
    lp_stats,
    verify_witness,
)
from .algebra import (
    Poly,
    ReductionStats,
    SearchResult,
    TransferSystem,
    build_transfer_system,
    reduction_stats,
    solvability_search,
    transfer_matrix,
)

__version__ = "0.1.0"
