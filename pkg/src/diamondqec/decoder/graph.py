"""Matching graphs built from graphlike detector error models."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..dem import DetectorErrorModel, xor_prob

__all__ = ["MatchingEdge", "MatchingGraph", "Link", "build_matching_graph", "edge_weight"]


class GraphError(ValueError):
    pass


def edge_weight(q: float) -> float:
    """Log-likelihood weight ``-ln(q / (1 - q))``."""
    if not 0 < q < 0.5:
        raise GraphError(f"edge probability {q} outside (0, 0.5)")
    return -math.log(q / (1 - q))


@dataclass(frozen=True)
class MatchingEdge:
    """``v`` equals the graph's boundary node for a boundary edge."""

    u: int
    v: int
    probability: float
    observables: int
    sources: tuple[int, ...]

    @property
    def weight(self) -> float:
        return edge_weight(self.probability)


@dataclass(frozen=True)
class Link:
    """Two edges that fire together through one mechanism of probability ``probability``."""

    a: int
    b: int
    probability: float


@dataclass(frozen=True)
class MatchingGraph:
    num_detectors: int
    num_observables: int
    edges: tuple[MatchingEdge, ...]
    links: tuple[Link, ...] = ()
    detector_basis: tuple[str, ...] = ()
    _index: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def boundary(self) -> int:
        return self.num_detectors

    @property
    def num_nodes(self) -> int:
        return self.num_detectors + 1

    def edge_id(self, u: int, v: int) -> int | None:
        if not self._index:
            self._index.update({_key(e.u, e.v): k for k, e in enumerate(self.edges)})
        return self._index.get(_key(u, v))

    def edge_basis(self, k: int) -> str:
        if not self.detector_basis:
            return "Z"
        return self.detector_basis[self.edges[k].u]


def _key(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u <= v else (v, u)


def build_matching_graph(dem: DetectorErrorModel) -> MatchingGraph:
    """One edge per distinct detector pair (or detector and boundary).

    Parallel contributions with equal observable masks are XOR-combined.  When
    masks disagree the more probable mask wins and keeps accumulating; the
    losing contributions are dropped.
    """
    bnode = dem.num_detectors
    # key -> {obs mask: [prob, sources]}
    acc: dict[tuple[int, int], dict[int, list]] = {}
    order: list[tuple[int, int]] = []
    comp_keys: list[list[tuple[int, int]]] = []
    for mid, m in enumerate(dem.mechanisms):
        if not 0 <= m.probability < 0.5:
            raise GraphError(f"mechanism {mid} has probability {m.probability}")
        keys = []
        for dets, obs in m.parts():
            if len(dets) > 2:
                raise GraphError(f"mechanism {mid} is not graphlike")
            if not dets:
                continue
            key = _key(dets[0], dets[1] if len(dets) == 2 else bnode)
            mask = 0
            for o in obs:
                mask |= 1 << o
            slot = acc.get(key)
            if slot is None:
                slot = acc[key] = {}
                order.append(key)
            cur = slot.setdefault(mask, [0.0, []])
            cur[0] = xor_prob(cur[0], m.probability)
            cur[1].append(mid)
            keys.append(key)
        comp_keys.append(keys)
    edges: list[MatchingEdge] = []
    index: dict[tuple[int, int], int] = {}
    for key in sorted(order):
        slot = acc[key]
        mask = min(slot, key=lambda k: (-slot[k][0], k))
        prob, src = slot[mask]
        if prob <= 0:
            continue
        if prob >= 0.5:
            raise GraphError(f"merged edge {key} has probability {prob}")
        index[key] = len(edges)
        edges.append(MatchingEdge(key[0], key[1], prob, mask, tuple(src)))
    links = []
    for mid, keys in enumerate(comp_keys):
        if len(keys) < 2:
            continue
        ids = [index[k] for k in keys if k in index]
        for i in range(len(ids)):
            for j in range(i + 1, len(ids)):
                if ids[i] != ids[j]:
                    links.append(Link(ids[i], ids[j], dem.mechanisms[mid].probability))
    return MatchingGraph(dem.num_detectors, dem.num_observables, tuple(edges), tuple(links),
                         tuple(dem.detector_basis))
