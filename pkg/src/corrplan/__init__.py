"""Correlation-plan polytopes for two-player extensive-form games.

Main entry points:

* :mod:`corrplan.gameio` - text format, built-in games, Goofspiel.
* :mod:`corrplan.decomposition` - triangle-freeness and the
  scaled-extension program.
* :mod:`corrplan.polytope` - relevance index, membership, objectives,
  LP export.
* :mod:`corrplan.oracle` - brute-force verification at desk scale.
* :mod:`corrplan.optimizer` - regret-matching optimization of linear
  objectives over the polytope.
"""

from .gameio import GoofspielParams, builtin, goofspiel, parse_efg, serialize_efg
from .polytope import (
    CorrelationPlan,
    LinearObjective,
    RelevanceIndex,
    build_relevance_index,
    check_membership,
    constraint_system,
    export_lp,
    payoff_objective,
)
from .decomposition import (
    NotTriangleFreeError,
    ScaledExtensionProgram,
    TriangleWitness,
    decompose,
    deterministic_points,
    dump_program,
    evaluate,
    find_triangle,
    is_triangle_free,
    sample,
)
from .tree import GameTree, validate_perfect_recall

__all__ = [
    "GameTree",
    "GoofspielParams",
    "CorrelationPlan",
    "LinearObjective",
    "RelevanceIndex",
    "ScaledExtensionProgram",
    "TriangleWitness",
    "NotTriangleFreeError",
    "builtin",
    "build_relevance_index",
    "check_membership",
    "constraint_system",
    "decompose",
    "deterministic_points",
    "dump_program",
    "evaluate",
    "export_lp",
    "find_triangle",
    "goofspiel",
    "is_triangle_free",
    "parse_efg",
    "payoff_objective",
    "sample",
    "serialize_efg",
    "validate_perfect_recall",
]

__version__ = "0.1.0"
