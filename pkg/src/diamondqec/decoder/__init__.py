"""Matching decoders and an exhaustive maximum-likelihood oracle."""

from .blossom import max_weight_matching, min_weight_perfect_matching
from .decode import (
    ENGINES,
    DecodeResult,
    Decoder,
    TwoPassDecoder,
    conditional_probability,
    decode,
    decode_two_pass,
    reweighted_probability,
)
from .exhaustive import MAX_MECHANISMS, exhaustive_decode, observable_class_probabilities
from .graph import GraphError, Link, MatchingEdge, MatchingGraph, build_matching_graph, edge_weight

__all__ = [
    "ENGINES",
    "DecodeResult",
    "Decoder",
    "TwoPassDecoder",
    "GraphError",
    "Link",
    "MatchingEdge",
    "MatchingGraph",
    "MAX_MECHANISMS",
    "build_matching_graph",
    "conditional_probability",
    "decode",
    "decode_two_pass",
    "edge_weight",
    "exhaustive_decode",
    "max_weight_matching",
    "min_weight_perfect_matching",
    "observable_class_probabilities",
    "reweighted_probability",
]
