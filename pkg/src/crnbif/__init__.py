"""Bifurcations of mass-action reaction networks and their inheritance under enlargement."""

from .bifurcation import BifPoint, BifurcationError, continue_equilibrium, find_equilibrium, locate_bifurcation
from .dsl import DSLError, parse_file, parse_network, serialize_network
from .enlarge import E1, E2, E3, E4, E5, E6, EnlargementError, compose
from .gallery import run_case, verify_paper_gallery
from .inherit import InheritanceReport, SweepConfig, track_inherited_bifurcation
from .massaction import ReducedField, make_chart
from .network import Network

__all__ = [
    "BifPoint", "BifurcationError", "continue_equilibrium", "find_equilibrium", "locate_bifurcation",
    "DSLError", "parse_file", "parse_network", "serialize_network",
    "E1", "E2", "E3", "E4", "E5", "E6", "EnlargementError", "compose",
    "run_case", "verify_paper_gallery",
    "InheritanceReport", "SweepConfig", "track_inherited_bifurcation",
    "ReducedField", "make_chart", "Network",
]
