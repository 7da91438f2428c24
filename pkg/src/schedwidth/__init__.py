"""Exact and approximate makespan solvers for R||Cmax and P|M_j|Cmax,
parameterised by treewidth and rankwidth of the restriction graphs."""

from .core import (
    InfeasibleError,
    InputError,
    Instance,
    ResourceError,
    SchedError,
    Schedule,
    SubinstanceRef,
    load_instance,
    make_instance,
    makespan,
    restricted_instance,
    subinstance,
    write_instance,
)
from .dp_basic import fptas_fixed_m, solve_load_dp, solve_machine_dp
from .dp_treewidth import fptas_treewidth, solve_dual, solve_incidence, solve_primal
from .graphs import build_graph, cut_rank
from .harness import GeneratorSpec, brute_force, cross_validate, default_corpus, diagnostics, generate, verify_class
from .ptas import ptas, round_instance, solve_edge_dp
from .rounding import two_approx

__version__ = "0.1.0"

__all__ = [
    "Instance", "Schedule", "SubinstanceRef", "SchedError", "InputError", "InfeasibleError", "ResourceError",
    "make_instance", "restricted_instance", "subinstance", "makespan", "load_instance", "write_instance",
    "build_graph", "cut_rank",
    "solve_machine_dp", "solve_load_dp", "fptas_fixed_m",
    "solve_primal", "solve_dual", "solve_incidence", "fptas_treewidth",
    "two_approx", "round_instance", "solve_edge_dp", "ptas",
    "brute_force", "generate", "GeneratorSpec", "verify_class", "diagnostics", "cross_validate", "default_corpus",
]
