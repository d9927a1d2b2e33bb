"""Minimum-weight perfect matching decoders.

Two engines give the same optimum.  ``"blossom"`` runs the in-package exact
blossom on the defect graph (shortest paths between defects, one boundary copy
per defect, zero-weight edges between copies).  ``"pymatching"`` hands the
same graph to PyMatching's sparse blossom, which is far faster and is what the
sweeps use.

Two-pass decoding first matches the basis whose edges carry no observable,
then raises the probability of every edge linked (through a shared Y-type
mechanism) to an edge used by that correction before matching the other basis.
For a used edge ``e`` with merged probability ``q_e`` and a linking mechanism of
probability ``y``, the other causes of ``e`` fire with ``o_e = (q_e - y)/(1 - 2y)``
and the mechanism's posterior is ``c = y / (y + (1 - y) r)`` with
``r = o_e / (1 - o_e)``.  The partner edge ``f`` then fires with probability
``c XOR o_f`` (``o_f`` defined like ``o_e``); the largest such value over all
used partners replaces ``q_f`` if it is larger.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from ..dem import xor_prob
from .blossom import min_weight_perfect_matching
from .graph import MatchingGraph, edge_weight

__all__ = [
    "DecodeResult",
    "Decoder",
    "TwoPassDecoder",
    "decode",
    "decode_two_pass",
    "conditional_probability",
    "reweighted_probability",
    "ENGINES",
]

ENGINES = ("blossom", "pymatching")
_SCALE = 1e6
# pass-two probabilities are capped here so weights stay strictly positive
_QMAX = 0.5 - 1e-9


@dataclass(frozen=True)
class DecodeResult:
    """``edges`` is the correction (edge ids, each used an odd number of times)."""

    observables: np.ndarray
    edges: tuple[int, ...]
    weight: float
    pairs: tuple[tuple[int, int], ...] = ()

    @property
    def flips(self) -> int:
        return int(sum(int(b) << i for i, b in enumerate(self.observables)))


def conditional_probability(y: float, q_partner: float) -> float:
    """Posterior of a linking mechanism given that its partner edge fired."""
    if y <= 0:
        return 0.0
    o = max(0.0, (q_partner - y) / (1 - 2 * y))
    if o <= 0:
        return 1.0
    r = o / (1 - o)
    return y / (y + (1 - y) * r)


def reweighted_probability(q_edge: float, y: float, c: float) -> float:
    o = max(0.0, (q_edge - y) / (1 - 2 * y))
    return min(_QMAX, max(q_edge, xor_prob(c, o)))


def _empty(nobs: int) -> DecodeResult:
    return DecodeResult(np.zeros(nobs, dtype=np.uint8), (), 0.0, ())


class _Native:
    def __init__(self, graph: MatchingGraph):
        self.g = graph
        e = graph.edges
        self.u = np.array([x.u for x in e], dtype=np.int64)
        self.v = np.array([x.v for x in e], dtype=np.int64)
        self.w = np.array([x.weight for x in e], dtype=np.float64)
        self.csr = self._csr(self.w)

    def _csr(self, w: np.ndarray) -> csr_matrix:
        n = self.g.num_nodes
        return csr_matrix((w, (self.u, self.v)), shape=(n, n))

    def run(self, syndrome: np.ndarray, override: dict[int, float] | None = None) -> DecodeResult:
        g = self.g
        defects = np.flatnonzero(syndrome)
        k = len(defects)
        if k == 0:
            return _empty(g.num_observables)
        w = self.w
        csr = self.csr
        if override:
            w = w.copy()
            for eid, q in override.items():
                w[eid] = edge_weight(q)
            csr = self._csr(w)
        dist, pred = dijkstra(csr, directed=False, indices=defects, return_predecessors=True)
        bnode = g.boundary
        medges = []
        for i in range(k):
            for j in range(i + 1, k):
                d = dist[i, defects[j]]
                if np.isfinite(d):
                    medges.append((i, j, int(round(d * _SCALE))))
            d = dist[i, bnode]
            if np.isfinite(d):
                medges.append((i, k + i, int(round(d * _SCALE))))
            for j in range(i + 1, k):
                medges.append((k + i, k + j, 0))
        try:
            pm = min_weight_perfect_matching(2 * k, medges)
        except ValueError:
            raise AssertionError("syndrome cannot be matched on this graph") from None
        used: dict[int, int] = {}
        pairs = []
        total = 0.0
        for a, b in pm:
            if a >= k:
                continue
            if b < k:
                target = int(defects[b])
                pairs.append((int(defects[a]), target))
            else:
                target = bnode
                pairs.append((int(defects[a]), -1))
            total += float(dist[a, target])
            node = target
            while node != defects[a]:
                prev = int(pred[a, node])
                eid = g.edge_id(prev, node)
                used[eid] = used.get(eid, 0) ^ 1
                node = prev
        edges = tuple(sorted(e for e, par in used.items() if par))
        obs = 0
        for e in edges:
            obs ^= g.edges[e].observables
        bits = np.array([(obs >> i) & 1 for i in range(g.num_observables)], dtype=np.uint8)
        return DecodeResult(bits, edges, total, tuple(sorted(pairs)))


class _PyMatching:
    def __init__(self, graph: MatchingGraph, subset=None):
        import pymatching

        self.g = graph
        m = pymatching.Matching()
        ids = range(len(graph.edges)) if subset is None else subset
        for k in ids:
            e = graph.edges[k]
            self._add(m, e.u, e.v, e.weight, e.observables, e.probability, "disallow")
        m.ensure_num_fault_ids(graph.num_observables)
        self.m = m
        # nodes PyMatching knows about; syndromes are truncated to this
        self.n = m.num_detectors
        # edges currently carrying a non-default probability
        self._applied: dict[int, float] = {}

    def _add(self, m, u: int, v: int, w: float, mask: int, q: float, strategy: str) -> None:
        fids = {i for i in range(self.g.num_observables) if mask >> i & 1}
        if v == self.g.boundary:
            m.add_boundary_edge(u, weight=w, fault_ids=fids, error_probability=q, merge_strategy=strategy)
        else:
            m.add_edge(u, v, weight=w, fault_ids=fids, error_probability=q, merge_strategy=strategy)

    def _syn(self, syndrome: np.ndarray) -> np.ndarray:
        s = np.asarray(syndrome, dtype=np.uint8)
        if s[self.n:].any():
            raise AssertionError("defect on a detector with no edges")
        return s[: self.n]

    def set_probability(self, eid: int, q: float) -> None:
        e = self.g.edges[eid]
        self._add(self.m, e.u, e.v, edge_weight(q), e.observables, q, "replace")

    def _apply(self, override: dict[int, float]) -> None:
        # only touch edges whose probability differs from the previous call
        for eid in [e for e in self._applied if e not in override]:
            self.set_probability(eid, self.g.edges[eid].probability)
            del self._applied[eid]
        for eid, q in override.items():
            if self._applied.get(eid) != q:
                self.set_probability(eid, q)
                self._applied[eid] = q

    def run(self, syndrome: np.ndarray, override: dict[int, float] | None = None) -> DecodeResult:
        g = self.g
        s = self._syn(syndrome)
        if not s.any():
            return _empty(g.num_observables)
        self._apply(override or {})
        pairs = self.m.decode_to_edges_array(s)
        bnode = g.boundary
        used: dict[int, int] = {}
        for a, b in pairs:
            eid = g.edge_id(int(a), bnode if b < 0 else int(b))
            used[eid] = used.get(eid, 0) ^ 1
        edges = tuple(sorted(e for e, par in used.items() if par))
        obs = 0
        total = 0.0
        for e in edges:
            obs ^= g.edges[e].observables
            q = override.get(e, g.edges[e].probability) if override else g.edges[e].probability
            total += edge_weight(q)
        bits = np.array([(obs >> i) & 1 for i in range(g.num_observables)], dtype=np.uint8)
        return DecodeResult(bits, edges, total)

    def batch(self, dets: np.ndarray) -> np.ndarray:
        self._apply({})
        d = np.asarray(dets, dtype=np.uint8)
        if d[:, self.n:].any():
            raise AssertionError("defect on a detector with no edges")
        return self.m.decode_batch(np.ascontiguousarray(d[:, : self.n])).astype(np.uint8)


class Decoder:
    """Single-pass matching over one graph."""

    def __init__(self, graph: MatchingGraph, engine: str = "blossom"):
        if engine not in ENGINES:
            raise ValueError(f"unknown engine {engine!r}")
        self.graph = graph
        self.engine = engine
        self._impl = _Native(graph) if engine == "blossom" else _PyMatching(graph)

    def decode(self, syndrome, override: dict[int, float] | None = None) -> DecodeResult:
        s = np.asarray(syndrome, dtype=np.uint8).reshape(-1)
        if s.size != self.graph.num_detectors:
            raise ValueError(f"syndrome has {s.size} bits, graph has {self.graph.num_detectors} detectors")
        return self._impl.run(s, override)

    def decode_batch(self, dets: np.ndarray) -> np.ndarray:
        """Predicted observable bits, shape ``(shots, num_observables)``."""
        dets = np.asarray(dets, dtype=np.uint8)
        if dets.ndim != 2 or dets.shape[1] != self.graph.num_detectors:
            raise ValueError("expected a (shots, num_detectors) array")
        if not self.graph.edges:
            if dets.any():
                raise AssertionError("defects on a graph without edges")
            return np.zeros((dets.shape[0], self.graph.num_observables), dtype=np.uint8)
        if self.engine == "pymatching":
            return self._impl.batch(dets)
        out = np.zeros((dets.shape[0], self.graph.num_observables), dtype=np.uint8)
        for i, row in enumerate(dets):
            if row.any():
                out[i] = self._impl.run(row).observables
        return out


class TwoPassDecoder:
    """Correlated decoding: match one basis, reweight linked edges, match the other."""

    def __init__(self, graph: MatchingGraph, engine: str = "blossom", first: str | None = None):
        self.single = Decoder(graph, engine)
        self.engine = engine
        g = graph
        basis = np.array(g.detector_basis or ("Z",) * g.num_detectors)
        if first is None:
            carry = {"X": 0, "Z": 0}
            for k, e in enumerate(g.edges):
                if e.observables:
                    carry[g.edge_basis(k)] = carry.get(g.edge_basis(k), 0) + 1
            first = "Z" if carry["Z"] <= carry["X"] else "X"
        self.first = first
        self.mask_first = (basis == first).astype(np.uint8)
        self.mask_second = 1 - self.mask_first
        partners: dict[int, list[tuple[int, float]]] = {}
        for ln in g.links:
            for a, b in ((ln.a, ln.b), (ln.b, ln.a)):
                if g.edge_basis(a) == first and g.edge_basis(b) != first:
                    partners.setdefault(a, []).append((b, ln.probability))
        self.partners = partners
        self._passes = (self.single._impl, self.single._impl)
        if engine == "pymatching":
            # one PyMatching graph per basis: reweighting forces PyMatching to
            # rebuild its search graph, so pass two rebuilds only half of it
            ids1 = [k for k in range(len(g.edges)) if g.edge_basis(k) == first]
            ids2 = [k for k in range(len(g.edges)) if g.edge_basis(k) != first]
            self._passes = (_PyMatching(g, ids1), _PyMatching(g, ids2))

    @property
    def graph(self) -> MatchingGraph:
        return self.single.graph

    def reweights(self, used_edges) -> dict[int, float]:
        g = self.graph
        out: dict[int, float] = {}
        for e in used_edges:
            qe = g.edges[e].probability
            for f, y in self.partners.get(e, ()):
                c = conditional_probability(y, qe)
                q = reweighted_probability(g.edges[f].probability, y, c)
                if q > out.get(f, g.edges[f].probability):
                    out[f] = q
        return out

    def decode(self, syndrome) -> DecodeResult:
        s = np.asarray(syndrome, dtype=np.uint8).reshape(-1)
        if s.size != self.graph.num_detectors:
            raise ValueError(f"syndrome has {s.size} bits, graph has {self.graph.num_detectors} detectors")
        p1, p2 = self._passes
        r1 = p1.run(s & self.mask_first)
        over = self.reweights(r1.edges)
        r2 = p2.run(s & self.mask_second, over or None)
        edges = tuple(sorted(set(r1.edges) | set(r2.edges)))
        return DecodeResult(r1.observables ^ r2.observables, edges, r1.weight + r2.weight,
                            tuple(sorted(r1.pairs + r2.pairs)))

    def decode_batch(self, dets: np.ndarray) -> np.ndarray:
        dets = np.asarray(dets, dtype=np.uint8)
        out = np.zeros((dets.shape[0], self.graph.num_observables), dtype=np.uint8)
        for i, row in enumerate(dets):
            if row.any():
                out[i] = self.decode(row).observables
        return out


def decode(graph: MatchingGraph, syndrome, engine: str = "blossom") -> DecodeResult:
    return Decoder(graph, engine).decode(syndrome)


def decode_two_pass(graph: MatchingGraph, syndrome, engine: str = "blossom", first: str | None = None) -> DecodeResult:
    return TwoPassDecoder(graph, engine, first).decode(syndrome)
