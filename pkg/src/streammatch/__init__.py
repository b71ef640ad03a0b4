"""Multipass water-filling for bipartite matching in vertex-arrival streams."""

from .analysis import (
    CanonicalDecomposition,
    LevelProfile,
    canonical_decomposition,
    check_profile_bound,
    choose_pass_count,
    gamma_tail,
    guarantee,
    verify_decomposition,
)
from .exact import budgeted_feasibility, hopcroft_karp, round_on_support
from .gap import GapInstance, NeighborOracle, gap_decide
from .generators import GenSpec, generate
from .graph import ArrivalStream, BipartiteGraph, Matching, parse_stream, write_stream
from .waterfill import Allocation, PassConfig, matching_value, run_multipass

__version__ = "0.1.0"

__all__ = [
    "Allocation",
    "ArrivalStream",
    "BipartiteGraph",
    "CanonicalDecomposition",
    "GapInstance",
    "GenSpec",
    "LevelProfile",
    "Matching",
    "NeighborOracle",
    "PassConfig",
    "budgeted_feasibility",
    "canonical_decomposition",
    "check_profile_bound",
    "choose_pass_count",
    "gamma_tail",
    "gap_decide",
    "generate",
    "guarantee",
    "hopcroft_karp",
    "matching_value",
    "parse_stream",
    "round_on_support",
    "run_multipass",
    "verify_decomposition",
    "write_stream",
]
