"""Memory-experiment circuit generation for diamond and standard layouts.

Diamond rounds cycle through four templates (left, right, up, down triangles).
Every round is measured from the mid-cycle state: the previous round's two CX
layers are undone, then the next template's two layers are applied and all
measure qubits are read out and reset.

Detectors are built from *segments*.  A segment is the lifetime of one
mid-cycle operator ``O`` owned by a measure qubit ``m``: it starts at the last
reset of ``m`` that prepared ``O`` and ends at the next measurement of ``O``.
Its records are that final measurement plus every intermediate measurement of
``m`` in the basis of ``O`` (those outcomes are absorbed by the operator as it
passes through the measure/reset pair).  A detector is one segment (bare
checks, boundary stabilizers) or the XOR of the two segments of a
superstabilizer's gauge halves, anchored on the later half.
"""

from __future__ import annotations

from dataclasses import dataclass

from .circuit import Circuit, Instruction, QubitDecl
from .lattice import (
    SLOT_OFFSETS,
    SLOT_TYPE,
    SLOTS,
    Coord,
    Layout,
    build_layout,
    default_variant,
)

__all__ = [
    "ExperimentSpec",
    "RoundTemplate",
    "RoundSchedule",
    "DetectorTemplate",
    "diamond_schedule",
    "detector_rule",
    "logical_observable",
    "build_memory_circuit",
    "default_rounds",
]

Z_COLOR = (0.0, 0.0, 1.0, 0.25)
X_COLOR = (1.0, 0.0, 0.0, 0.25)


def default_rounds(family: str, d: int) -> int:
    return 4 * d if family == "diamond" else d


@dataclass(frozen=True)
class ExperimentSpec:
    family: str = "diamond"
    distance: int = 5
    rounds: int | None = None
    basis: str = "X"
    variant: str | None = None

    def resolved(self) -> "ExperimentSpec":
        fam = self.family.lower()
        if fam not in ("diamond", "standard"):
            raise ValueError(f"unknown family {self.family!r}")
        basis = self.basis.upper()
        if basis not in ("X", "Z"):
            raise ValueError(f"basis must be X or Z, got {self.basis!r}")
        rounds = self.rounds if self.rounds is not None else default_rounds(fam, self.distance)
        if rounds < 1:
            raise ValueError("rounds must be >= 1")
        variant = self.variant or default_variant(self.distance, fam)
        if fam == "standard":
            variant = "not-applicable"
        return ExperimentSpec(fam, self.distance, rounds, basis, variant)


@dataclass(frozen=True)
class RoundTemplate:
    slot: str
    cx_a: tuple[tuple[Coord, Coord], ...]
    cx_b: tuple[tuple[Coord, Coord], ...]
    measure_z: frozenset[Coord]
    measure_x: frozenset[Coord]

    @property
    def reset_z(self) -> frozenset[Coord]:
        return self.measure_z

    @property
    def reset_x(self) -> frozenset[Coord]:
        return self.measure_x

    def basis_of(self, m: Coord) -> str:
        return "Z" if m in self.measure_z else "X"

    def gated(self) -> frozenset[Coord]:
        return frozenset(p[0] if SLOT_TYPE[self.slot] == "X" else p[1] for p in self.cx_a + self.cx_b)


@dataclass(frozen=True)
class RoundSchedule:
    cycle: tuple[RoundTemplate, ...]
    start: int

    def template(self, r: int) -> RoundTemplate:
        """Template used by measurement round ``r`` (``r = -1`` is the virtual pre-round)."""
        return self.cycle[(r + self.start) % len(self.cycle)]


def diamond_schedule(layout: Layout, basis: str) -> RoundSchedule:
    """Four-round cycle.  X memories start on the left triangles, Z memories on the up ones.

    Starting two templates later swaps the roles of the two bases, so that the
    last round of a ``4k``-round experiment measures operators of the memory
    basis and the data readout can join that layer.
    """
    cycle = []
    for slot in SLOTS:
        t = SLOT_TYPE[slot]
        layers: list[list[tuple[Coord, Coord]]] = [[], []]
        mz, mx = set(), set()
        for m in layout.measure:
            role = layout.role(m)
            b = {"measure-Z": "Z", "measure-X": "X"}.get(role, t)
            (mz if b == "Z" else mx).add(m)
            g = layout.gauge(m, slot)
            if g is None or g.degenerate:
                continue
            for k in (0, 1):
                q = (m[0] + SLOT_OFFSETS[slot][k][0], m[1] + SLOT_OFFSETS[slot][k][1])
                if layout.is_data(q):
                    layers[k].append((m, q) if t == "X" else (q, m))
        cycle.append(RoundTemplate(slot, tuple(layers[0]), tuple(layers[1]), frozenset(mz), frozenset(mx)))
    return RoundSchedule(tuple(cycle), 0 if basis == "X" else 2)


@dataclass(frozen=True)
class DetectorTemplate:
    """Detector as a set of ``(round, measure qubit)`` records plus final data records."""

    coord: tuple[float, ...]
    round: int
    records: frozenset[tuple[int, Coord]]
    data: frozenset[Coord] = frozenset()
    basis: str = "Z"


def _op_key(layout: Layout, sched: RoundSchedule, r: int, m: Coord) -> tuple[str, str]:
    """(slot or 'single', pauli type) of the operator measured on ``m`` in round ``r``."""
    tpl = sched.template(r)
    b = tpl.basis_of(m)
    g = layout.gauge(m, tpl.slot)
    if g is not None and not g.degenerate:
        return (tpl.slot, g.pauli)
    return ("single", b)


def detector_rule(layout: Layout, schedule: RoundSchedule, rounds: int | None = None,
                  basis: str = "X") -> list[DetectorTemplate]:
    """All detectors of a diamond memory experiment with ``rounds`` measurement rounds."""
    if layout.family != "diamond":
        raise ValueError("detector_rule applies to diamond layouts")
    if rounds is None:
        rounds = 4 * layout.distance
    measure = sorted(layout.measure)
    key = {(r, m): _op_key(layout, schedule, r, m) for r in range(-1, rounds) for m in measure}
    basis_at = {(r, m): schedule.template(r).basis_of(m) for r in range(-1, rounds) for m in measure}
    partner: dict[tuple[Coord, str], tuple[Coord, str]] = {}
    standalone: set[tuple[Coord, str]] = set()
    for s in layout.stabilizers:
        if s.kind == "boundary-weight-3":
            g = s.gauges[0]
            standalone.add((g.measure, g.slot))
        else:
            a, b = s.gauges
            partner[(a.measure, a.slot)] = (b.measure, b.slot)
            partner[(b.measure, b.slot)] = (a.measure, a.slot)

    def segment(m: Coord, k: tuple[str, str], end: int) -> set[tuple[int, Coord]] | None:
        start = None
        for a in range(end - 1, -1, -1):
            if key[(a, m)] == k:
                start = a
                break
        if start is None:
            # born at initialisation: the reset basis of m must fix the operator
            if basis_at[(-1, m)] != k[1]:
                return None
            if k[0] != "single" and k[1] != basis:
                return None
            start = -1
        recs = {(end, m)}
        recs.update((j, m) for j in range(start + 1, end) if basis_at[(j, m)] == k[1])
        return recs

    dets: list[DetectorTemplate] = []
    for r in range(rounds):
        for m in measure:
            k = key[(r, m)]
            recs: set[tuple[int, Coord]] | None
            coord: tuple[float, ...] = (m[0], m[1], r)
            if k[0] == "single" or (m, k[0]) in standalone:
                recs = segment(m, k, r)
            else:
                m2, slot2 = partner[(m, k[0])]
                if r == 0 or key[(r - 1, m2)][0] != slot2:
                    continue
                a = segment(m, k, r)
                b = segment(m2, key[(r - 1, m2)], r - 1)
                recs = None if a is None or b is None else a ^ b
                coord = ((m[0] + m2[0]) / 2, (m[1] + m2[1]) / 2, r)
            if recs is not None:
                dets.append(DetectorTemplate(coord, r, frozenset(recs), basis=k[1]))
    # final readout: the memory-basis operator prepared by the second-to-last
    # reset of each measure qubit is closed by the transversal data readout
    last = rounds - 1
    for m in measure:
        if basis_at[(last, m)] != basis:
            continue
        nb = frozenset(q for q in ((m[0] + dx, m[1] + dy) for dx in (-1, 1) for dy in (-1, 1))
                       if layout.is_data(q))
        dets.append(DetectorTemplate((m[0], m[1], rounds), rounds, frozenset({(last, m)}), nb, basis))
    return dets


def logical_observable(layout: Layout, basis: str) -> list[Coord]:
    """Data qubits of a minimum-weight logical operator of the given type.

    X: the column ``x = 1`` (parallel to the Z-type left boundary).
    Z: the row ``y = 1`` (parallel to the X-type top boundary).
    """
    basis = basis.upper()
    if basis == "X":
        return sorted(q for q in layout.data if q[0] == 1)
    if basis == "Z":
        return sorted(q for q in layout.data if q[1] == 1)
    raise ValueError(f"basis must be X or Z, got {basis!r}")


class _Builder:
    def __init__(self, layout: Layout):
        self.layout = layout
        self.idx = layout.index_of()
        self.ins: list[Instruction] = []
        self.n_meas = 0
        self.rec: dict[tuple[int, Coord], int] = {}

    def tick(self) -> None:
        self.ins.append(Instruction("TICK"))

    def cx(self, pairs) -> None:
        if not pairs:
            return
        flat = sorted((self.idx[c], self.idx[t]) for c, t in pairs)
        self.ins.append(Instruction("CX", tuple(q for p in flat for q in p)))

    def op(self, kind: str, coords) -> None:
        if coords:
            self.ins.append(Instruction(kind, tuple(sorted(self.idx[c] for c in coords))))

    def measure(self, rnd: int, zs, xs) -> None:
        for kind, cs in (("M", zs), ("MX", xs)):
            for q in sorted(self.idx[c] for c in cs):
                self.rec[(rnd, self._coord(q))] = self.n_meas
                self.n_meas += 1
            self.op(kind, cs)

    def _coord(self, q: int) -> Coord:
        if not hasattr(self, "_inv"):
            self._inv = {i: c for c, i in self.idx.items()}
        return self._inv[q]

    def detector(self, recs, coord) -> None:
        absr = sorted(self.rec[r] for r in recs)
        self.ins.append(Instruction("DETECTOR", tuple(a - self.n_meas for a in absr), tuple(float(c) for c in coord)))

    def observable(self, recs) -> None:
        absr = sorted(self.rec[r] for r in recs)
        self.ins.append(Instruction("OBSERVABLE_INCLUDE", tuple(a - self.n_meas for a in absr), (0.0,)))

    def decls(self) -> tuple[QubitDecl, ...]:
        return tuple(QubitDecl(i, (float(c[0]), float(c[1]))) for c, i in sorted(self.idx.items(), key=lambda t: t[1]))


def _polygons(b: _Builder) -> None:
    for g in b.layout.gauges:
        if g.degenerate:
            continue
        pts = [b.idx[g.data[0]], b.idx[g.measure], *(b.idx[q] for q in g.data[1:])]
        b.ins.append(Instruction("POLYGON", tuple(pts), Z_COLOR if g.pauli == "Z" else X_COLOR))


def _build_diamond(layout: Layout, spec: ExperimentSpec) -> Circuit:
    basis = spec.basis
    rounds = spec.rounds
    sched = diamond_schedule(layout, basis)
    b = _Builder(layout)
    _polygons(b)
    b.tick()
    pre = sched.template(-1)
    data = layout.data
    rz = set(pre.reset_z) | (set(data) if basis == "Z" else set())
    rx = set(pre.reset_x) | (set(data) if basis == "X" else set())
    b.op("R", rz)
    b.op("RX", rx)
    dets = detector_rule(layout, sched, rounds, basis)
    by_round: dict[int, list[DetectorTemplate]] = {}
    for det in dets:
        by_round.setdefault(det.round, []).append(det)
    prev = pre
    for r in range(rounds):
        cur = sched.template(r)
        if r > 0:
            b.tick()
            b.op("R", prev.reset_z)
            b.op("RX", prev.reset_x)
        b.tick()
        b.cx(prev.cx_b)
        b.tick()
        b.cx(prev.cx_a)
        if r > 0:
            b.tick()
        b.tick()
        b.cx(cur.cx_a)
        b.tick()
        b.cx(cur.cx_b)
        b.tick()
        if r == rounds - 1:
            zs = set(cur.measure_z) | (set(data) if basis == "Z" else set())
            xs = set(cur.measure_x) | (set(data) if basis == "X" else set())
            # data records are keyed by the virtual round index ``rounds``
            for kind, cs in (("M", zs), ("MX", xs)):
                for q in sorted(b.idx[c] for c in cs):
                    c = b._coord(q)
                    b.rec[(rounds if layout.is_data(c) else r, c)] = b.n_meas
                    b.n_meas += 1
                b.op(kind, cs)
        else:
            b.measure(r, cur.measure_z, cur.measure_x)
        for det in by_round.get(r, []):
            b.detector(det.records, det.coord)
        prev = cur
    finals = [(frozenset(b.rec[k] for k in set(det.records) | {(rounds, q) for q in det.data}), det.coord)
              for det in by_round.get(rounds, [])]
    if rounds % 4:
        finals = _deterministic_finals(b, finals)
    for recs, coord in finals:
        b.ins.append(Instruction("DETECTOR", tuple(a - b.n_meas for a in sorted(recs)),
                                 tuple(float(c) for c in coord)))
    b.observable({(rounds, q) for q in logical_observable(layout, basis)})
    return Circuit(b.decls(), tuple(b.ins))


def _deterministic_finals(b: _Builder, finals):
    """Keep the deterministic span of the final-readout comparisons.

    The per-operator comparison only holds when the last round closes a full
    four-round cycle. Otherwise some comparisons are random; products of them
    whose random parts cancel are still valid detectors.
    """
    from .sim.tableau import tableau_run

    exprs = tableau_run(Circuit(b.decls(), tuple(b.ins))).measurements
    keep, pivots = [], {}
    for recs, coord in finals:
        v = 0
        for k in recs:
            v ^= exprs[k][1]
        if not v:
            keep.append((recs, coord))
            continue
        # reduce against earlier random comparisons; a zero row is a new detector
        while v:
            top = v.bit_length() - 1
            if top not in pivots:
                pivots[top] = (v, recs, coord)
                break
            pv, precs, _ = pivots[top]
            v ^= pv
            recs = recs ^ precs
        else:
            if recs:
                keep.append((recs, coord))
    return keep


# CX offsets per layer for the standard circuit; the last two data qubits of
# each check form a pair perpendicular to the logical that its hook errors
# would otherwise shorten.
STANDARD_ORDER = {
    "X": ((-1, -1), (1, -1), (-1, 1), (1, 1)),
    "Z": ((-1, -1), (-1, 1), (1, -1), (1, 1)),
}


def _build_standard(layout: Layout, spec: ExperimentSpec) -> Circuit:
    basis = spec.basis
    rounds = spec.rounds
    b = _Builder(layout)
    stabs = sorted(layout.stabilizers, key=lambda s: s.measure)
    mz = {s.measure for s in stabs if s.pauli == "Z"}
    mx = {s.measure for s in stabs if s.pauli == "X"}
    data = layout.data
    layers: list[list[tuple[Coord, Coord]]] = [[] for _ in range(4)]
    for s in stabs:
        m = s.measure
        for k, (dx, dy) in enumerate(STANDARD_ORDER[s.pauli]):
            q = (m[0] + dx, m[1] + dy)
            if q in s.support:
                layers[k].append((m, q) if s.pauli == "X" else (q, m))
    b.tick()
    b.op("R", mz | (set(data) if basis == "Z" else set()))
    b.op("RX", mx | (set(data) if basis == "X" else set()))
    for r in range(rounds):
        if r > 0:
            b.tick()
            b.op("R", mz)
            b.op("RX", mx)
        for layer in layers:
            b.tick()
            b.cx(layer)
        b.tick()
        last = r == rounds - 1
        if last:
            zs = mz | (set(data) if basis == "Z" else set())
            xs = mx | (set(data) if basis == "X" else set())
            for kind, cs in (("M", zs), ("MX", xs)):
                for q in sorted(b.idx[c] for c in cs):
                    c = b._coord(q)
                    b.rec[(rounds if layout.is_data(c) else r, c)] = b.n_meas
                    b.n_meas += 1
                b.op(kind, cs)
        else:
            b.measure(r, mz, mx)
        for s in stabs:
            m = s.measure
            if r == 0:
                if s.pauli == basis:
                    b.detector({(0, m)}, (m[0], m[1], 0))
            else:
                b.detector({(r, m), (r - 1, m)}, (m[0], m[1], r))
    for s in stabs:
        if s.pauli == basis:
            m = s.measure
            b.detector({(rounds - 1, m)} | {(rounds, q) for q in s.support}, (m[0], m[1], rounds))
    b.observable({(rounds, q) for q in logical_observable(layout, basis)})
    return Circuit(b.decls(), tuple(b.ins))


def build_memory_circuit(spec: ExperimentSpec) -> Circuit:
    """Noiseless memory experiment for ``spec``."""
    spec = spec.resolved()
    layout = build_layout(spec.family, spec.distance, spec.variant if spec.family == "diamond" else None)
    if spec.family == "diamond":
        return _build_diamond(layout, spec)
    return _build_standard(layout, spec)
