"""Exact 2-enumerations of halved alternating sign matrices.

Three independent routes are provided: weighted enumeration of the
matrices themselves, weighted perfect-matching sums on the associated
lattice graphs (brute force and Pfaffian), and closed-form values.  The
:mod:`renewal` module implements the local rewrites that reduce one
weighted graph to the next smaller one with exact factor bookkeeping.
"""

from .asm import BottomSpec, WeightStats, enumerate_full_asms, enumerate_halved_asms, weight_stats
from .graphs import WeightedGraph, build_fortress, build_gn, build_teeth_region
from .matchings import matching_sum_bruteforce, matching_sum_pfaffian

__version__ = "0.1.0"

__all__ = [
    "BottomSpec",
    "WeightStats",
    "WeightedGraph",
    "build_fortress",
    "build_gn",
    "build_teeth_region",
    "enumerate_full_asms",
    "enumerate_halved_asms",
    "matching_sum_bruteforce",
    "matching_sum_pfaffian",
    "weight_stats",
]
