"""Boundary words of free group automorphisms and their factor complexity."""

from .classify import ClassVerdict, classify_empirical, classify_fixed_point, classify_structural
from .complexity import ComplexityProfile, complexity_profile, laminary_language, recurrence_profile
from .graphs import GraphSelfMap, compute_strata, growth_type, load_gmap, parse_gmap, rose_map, tighten
from .limits import PrefixStream, as_stream, limit_prefix, rationality_check, transport
from .words import (
    Alphabet,
    AlphabetError,
    FormatError,
    GroupEndo,
    ReducedWord,
    apply,
    compose,
    identity,
    inverse,
    load_fga,
    parse_fga,
    power,
    reduce,
    verify_automorphism,
)

__all__ = [
    "Alphabet", "AlphabetError", "ClassVerdict", "ComplexityProfile", "FormatError", "GraphSelfMap",
    "GroupEndo", "PrefixStream", "ReducedWord", "apply", "as_stream", "classify_empirical", "classify_fixed_point",
    "classify_structural", "complexity_profile", "compose", "compute_strata", "growth_type", "identity",
    "inverse", "laminary_language", "limit_prefix", "load_fga", "load_gmap", "parse_fga", "parse_gmap",
    "power", "rationality_check", "recurrence_profile", "reduce", "rose_map", "tighten", "transport",
    "verify_automorphism",
]

__version__ = "0.1.0"
