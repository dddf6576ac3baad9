"""Workbench for rainbow matchings in edge-coloured bipartite multigraphs."""

from .core import (
    ColouredEdge,
    ColourClass,
    Edge,
    Instance,
    RainbowMatching,
    Side,
    Vertex,
    VertexSet,
    class_edges_between,
    instance_from_json,
    instance_to_json,
    is_rainbow,
    make_instance,
    make_matching,
    matching_from_json,
    matching_to_json,
    neighbourhood_along,
    saturated_sets,
    validate_instance,
)
from .gen import gen_drisko, gen_no_transversal, gen_random_instance
from .latin import (
    LatinSquare,
    PartialTransversal,
    gen_cyclic,
    gen_random_latin,
    latin_to_instance,
    rainbow_to_transversal,
    transversal_to_rainbow,
    validate_latin,
)
from .oracle import (
    SearchBudget,
    SearchReport,
    SweepReport,
    estimate_f,
    estimate_mu,
    max_rainbow,
    naive_max_rainbow,
)
from .proofkit import (
    Epsilon,
    Mode,
    PropertyReport,
    SwitchState,
    claim1_switch,
    claim2_switch,
    claim3_switch,
    colour_chain,
    construct_N0,
    construct_Nk,
    contradiction_threshold,
    extend_state,
    initial_state,
    pigeonhole_select,
    s_k,
    size_xy_prime,
    smallest_t,
    verify_properties,
)
from .solver import SolveResult, augment, greedy_rainbow, solve

__all__ = [
    "ColouredEdge",
    "ColourClass",
    "Edge",
    "Instance",
    "RainbowMatching",
    "Side",
    "Vertex",
    "VertexSet",
    "class_edges_between",
    "instance_from_json",
    "instance_to_json",
    "is_rainbow",
    "make_instance",
    "make_matching",
    "matching_from_json",
    "matching_to_json",
    "neighbourhood_along",
    "saturated_sets",
    "validate_instance",
    "gen_drisko",
    "gen_no_transversal",
    "gen_random_instance",
    "LatinSquare",
    "PartialTransversal",
    "gen_cyclic",
    "gen_random_latin",
    "latin_to_instance",
    "rainbow_to_transversal",
    "transversal_to_rainbow",
    "validate_latin",
    "SearchBudget",
    "SearchReport",
    "SweepReport",
    "estimate_f",
    "estimate_mu",
    "max_rainbow",
    "naive_max_rainbow",
    "Epsilon",
    "Mode",
    "PropertyReport",
    "SwitchState",
    "claim1_switch",
    "claim2_switch",
    "claim3_switch",
    "colour_chain",
    "construct_N0",
    "construct_Nk",
    "contradiction_threshold",
    "extend_state",
    "initial_state",
    "pigeonhole_select",
    "s_k",
    "size_xy_prime",
    "smallest_t",
    "verify_properties",
    "SolveResult",
    "augment",
    "greedy_rainbow",
    "solve",
]
