"""Code layouts: diamond (Lieb-lattice) circuits and the standard rotated surface code.

Coordinates follow the convention ``x`` to the right and ``y`` down.  Data
qubits sit at odd ``(x, y)`` in ``[1, 2d-1]``; measure sites sit at even
``(x, y)`` in ``[0, 2d]`` excluding the four corners.

The diamond layout keeps one checkerboard subgrid of measure sites.  Each kept
measure qubit ``m`` owns four weight-3 "triangles", one per schedule slot::

    left  = Z_m Z(m + (-1,-1)) Z(m + (-1,+1))
    right = Z_m Z(m + (+1,-1)) Z(m + (+1,+1))
    up    = X_m X(m + (-1,-1)) X(m + (+1,-1))
    down  = X_m X(m + (-1,+1)) X(m + (+1,+1))

A triangle whose data qubits are all absent is degenerate (a bare single-qubit
check).  Boundary measure qubits on the left/right edges only own Z triangles,
those on the top/bottom edges only X triangles.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

__all__ = [
    "Coord",
    "Gauge",
    "Stabilizer",
    "Layout",
    "LineCount",
    "SLOTS",
    "SLOT_OFFSETS",
    "SLOT_TYPE",
    "build_diamond_layout",
    "build_standard_layout",
    "build_layout",
    "line_count",
    "count_lines",
    "default_variant",
    "layout_to_json",
    "symplectic_product",
]

Coord = tuple[int, int]

SLOTS = ("left", "right", "up", "down")
SLOT_TYPE = {"left": "Z", "right": "Z", "up": "X", "down": "X"}
# (first CX layer offset, second CX layer offset) from the measure qubit
SLOT_OFFSETS: dict[str, tuple[Coord, Coord]] = {
    "left": ((-1, 1), (-1, -1)),
    "right": ((1, -1), (1, 1)),
    "up": ((-1, -1), (1, -1)),
    "down": ((1, 1), (-1, 1)),
}

VARIANTS = ("odd", "even-A", "even-B", "not-applicable")


def _norm_variant(variant: str) -> str:
    v = variant.strip()
    low = v.lower()
    for known in VARIANTS:
        if low == known.lower():
            return known
    raise ValueError(f"unknown variant {variant!r}")


def default_variant(d: int, family: str = "diamond") -> str:
    if family == "standard":
        return "not-applicable"
    return "odd" if d % 2 else "even-A"


@dataclass(frozen=True)
class Gauge:
    """A weight-3 (or degenerate weight-1) mid-cycle check owned by one measure qubit."""

    pauli: str
    measure: Coord
    slot: str
    data: tuple[Coord, ...]

    @property
    def support(self) -> frozenset[Coord]:
        return frozenset((self.measure, *self.data))

    @property
    def degenerate(self) -> bool:
        return not self.data


@dataclass(frozen=True)
class Stabilizer:
    pauli: str
    support: frozenset[Coord]
    weight: int
    kind: str
    gauges: tuple[Gauge, ...] = ()
    measure: Coord | None = None


@dataclass(frozen=True)
class LineCount:
    qubit_lines: int
    coupler_lines: int

    @property
    def total(self) -> int:
        return self.qubit_lines + self.coupler_lines


@dataclass(frozen=True)
class Layout:
    distance: int
    family: str
    variant: str
    qubits: tuple[tuple[Coord, str], ...]
    couplers: frozenset[tuple[Coord, Coord]]
    stabilizers: tuple[Stabilizer, ...]
    gauge_pairs: tuple[tuple[Gauge, Gauge], ...] = ()
    gauges: tuple[Gauge, ...] = ()
    _roles: dict[Coord, str] = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self) -> None:
        self._roles.update(dict(self.qubits))

    @property
    def data(self) -> list[Coord]:
        return [c for c, r in self.qubits if r == "data"]

    @property
    def measure(self) -> list[Coord]:
        return [c for c, r in self.qubits if r != "data"]

    def role(self, c: Coord) -> str:
        return self._roles[c]

    def has(self, c: Coord) -> bool:
        return c in self._roles

    def is_data(self, c: Coord) -> bool:
        return self._roles.get(c) == "data"

    def index_of(self) -> dict[Coord, int]:
        """Qubit indices assigned by sorted ``(x, y)``."""
        return {c: i for i, c in enumerate(sorted(self._roles))}

    def gauge(self, m: Coord, slot: str) -> Gauge | None:
        for g in self.gauges:
            if g.measure == m and g.slot == slot:
                return g
        return None

    def degree(self, c: Coord) -> int:
        return sum(1 for a, b in self.couplers if c in (a, b))


def _data_coords(d: int) -> list[Coord]:
    return [(2 * i + 1, 2 * j + 1) for i in range(d) for j in range(d)]


def _boundary_kind(d: int, i: int, j: int) -> str | None:
    """'Z' on the left/right edges, 'X' on top/bottom, '' inside, None for corners/outside."""
    on_lr = i in (0, d)
    on_tb = j in (0, d)
    if on_lr and on_tb:
        return None
    if on_lr:
        return "Z"
    if on_tb:
        return "X"
    return ""


def symplectic_product(a: tuple[str, Iterable[Coord]], b: tuple[str, Iterable[Coord]]) -> int:
    """0 if the two single-type Pauli operators commute, 1 otherwise."""
    if a[0] == b[0]:
        return 0
    return len(set(a[1]) & set(b[1])) % 2


def _subgrid_parity(d: int, variant: str) -> int:
    if variant == "odd":
        return 1
    # even-A keeps the sites diagonally inside every corner, giving weight-3
    # stabilizers there; even-B keeps the other subgrid, which puts a
    # superstabilizer at each corner and a boundary measure qubit next to it.
    return 0 if variant == "even-A" else 1


def build_diamond_layout(d: int, variant: str | None = None) -> Layout:
    """Diamond layout on the Lieb lattice."""
    if d < 2:
        raise ValueError("distance must be at least 2")
    variant = _norm_variant(variant) if variant else default_variant(d)
    if variant == "not-applicable":
        raise ValueError("diamond layouts need an odd/even variant")
    if (variant == "odd") != (d % 2 == 1):
        raise ValueError(f"variant {variant!r} does not match distance parity of d={d}")
    s = _subgrid_parity(d, variant)
    data = set(_data_coords(d))
    roles: dict[Coord, str] = {c: "data" for c in data}
    for i in range(d + 1):
        for j in range(d + 1):
            kind = _boundary_kind(d, i, j)
            if kind is None or (i + j) % 2 != s:
                continue
            roles[(2 * i, 2 * j)] = {"Z": "measure-Z", "X": "measure-X", "": "measure-ZX"}[kind]

    gauges: list[Gauge] = []
    for m in sorted(c for c, r in roles.items() if r != "data"):
        for slot in SLOTS:
            t = SLOT_TYPE[slot]
            if roles[m] == "measure-Z" and t == "X":
                continue
            if roles[m] == "measure-X" and t == "Z":
                continue
            pts = tuple(sorted((m[0] + dx, m[1] + dy) for dx, dy in SLOT_OFFSETS[slot]
                               if (m[0] + dx, m[1] + dy) in data))
            gauges.append(Gauge(t, m, slot, pts))

    couplers = frozenset(
        tuple(sorted((g.measure, q))) for g in gauges for q in g.data
    )
    stabs, pairs = _classify_gauges([g for g in gauges if not g.degenerate])
    qubits = tuple(sorted(roles.items()))
    return Layout(d, "diamond", variant, qubits, couplers, tuple(stabs), tuple(pairs), tuple(gauges))


def _classify_gauges(real: list[Gauge]) -> tuple[list[Stabilizer], list[tuple[Gauge, Gauge]]]:
    """Split weight-3 triangles into standalone stabilizers and superstabilizer pairs."""
    def op(g: Gauge) -> tuple[str, frozenset[Coord]]:
        return (g.pauli, g.support)

    by_qubit: dict[Coord, list[int]] = {}
    for k, g in enumerate(real):
        for q in g.support:
            by_qubit.setdefault(q, []).append(k)
    anti: list[frozenset[int]] = []
    for k, g in enumerate(real):
        near = {h for q in g.support for h in by_qubit[q]}
        anti.append(frozenset(h for h in near if symplectic_product(op(g), op(real[h]))))
    stabs: list[Stabilizer] = []
    pairs: list[tuple[Gauge, Gauge]] = []
    used: set[int] = set()
    for k, g in enumerate(real):
        if k in used:
            continue
        if not anti[k]:
            stabs.append(Stabilizer(g.pauli, g.support, len(g.support), "boundary-weight-3", (g,), g.measure))
            used.add(k)
            continue
        # a partner anticommutes with the same gauges, so it neighbours one of them
        cands = sorted({h for a in anti[k] for h in anti[a]})
        partner = None
        for h in cands:
            other = real[h]
            if h == k or h in used or other.pauli != g.pauli or (other.support & g.support):
                continue
            if anti[h] == anti[k]:
                partner = h
                break
        if partner is None:
            raise ValueError(f"gauge {g} has no superstabilizer partner")
        used.update((k, partner))
        partner = real[partner]
        a, b = sorted((g, partner), key=lambda x: (x.measure, x.slot))
        pairs.append((a, b))
        sup = a.support | b.support
        stabs.append(Stabilizer(g.pauli, sup, len(sup), "superstabilizer-weight-6", (a, b)))
    return stabs, pairs


def build_standard_layout(d: int) -> Layout:
    """Rotated surface code: ``d*d`` data qubits and ``d*d - 1`` measure qubits."""
    if d < 2:
        raise ValueError("distance must be at least 2")
    data = set(_data_coords(d))
    roles: dict[Coord, str] = {c: "data" for c in data}
    stabs: list[Stabilizer] = []
    for i in range(d + 1):
        for j in range(d + 1):
            kind = _boundary_kind(d, i, j)
            if kind is None:
                continue
            t = "X" if (i + j) % 2 == 0 else "Z"
            if kind and kind != t:
                continue
            m = (2 * i, 2 * j)
            roles[m] = "measure-X" if t == "X" else "measure-Z"
            sup = [(m[0] + dx, m[1] + dy) for dx in (-1, 1) for dy in (-1, 1)]
            sup = [q for q in sup if q in data]
            stabs.append(Stabilizer(t, frozenset(sup), len(sup),
                                    "bulk-weight-4" if len(sup) == 4 else "boundary-weight-2",
                                    (), m))
    couplers = frozenset(tuple(sorted((s.measure, q))) for s in stabs for q in s.support)
    return Layout(d, "standard", "not-applicable", tuple(sorted(roles.items())), couplers, tuple(stabs))


def build_layout(family: str, d: int, variant: str | None = None) -> Layout:
    if family == "diamond":
        return build_diamond_layout(d, variant)
    if family == "standard":
        return build_standard_layout(d)
    raise ValueError(f"unknown family {family!r}")


def line_count(layout: Layout) -> LineCount:
    """One control line per qubit and per coupler (readout lines excluded)."""
    return LineCount(len(layout.qubits), len(layout.couplers))


def count_lines(family: str, d: int, variant: str | None = None) -> LineCount:
    """Line count of ``build_layout(family, d, variant)`` from the site grid alone.

    Enumerates the kept measure sites with the same rules as the builders and
    counts each one's in-grid diagonal data neighbours (every kept measure
    qubit couples to all of them), skipping gauge bookkeeping so large
    distances stay cheap.
    """
    if d < 2:
        raise ValueError("distance must be at least 2")
    i, j = np.meshgrid(np.arange(d + 1), np.arange(d + 1), indexing="ij")
    lr = (i == 0) | (i == d)
    tb = (j == 0) | (j == d)
    site = ~(lr & tb)
    if family == "diamond":
        variant = _norm_variant(variant) if variant else default_variant(d)
        if variant == "not-applicable" or (variant == "odd") != (d % 2 == 1):
            raise ValueError(f"variant {variant!r} does not fit a diamond layout of distance {d}")
        keep = site & ((i + j) % 2 == _subgrid_parity(d, variant))
    elif family == "standard":
        xtype = (i + j) % 2 == 0
        keep = site & np.where(lr, ~xtype, np.where(tb, xtype, True))
    else:
        raise ValueError(f"unknown family {family!r}")
    neigh = np.where(lr, 1, 2) * np.where(tb, 1, 2)
    return LineCount(int(d * d + keep.sum()), int((neigh * keep).sum()))


def layout_to_json(layout: Layout) -> str:
    doc = {
        "family": layout.family,
        "distance": layout.distance,
        "variant": layout.variant,
        "qubits": [{"coord": list(c), "role": r} for c, r in layout.qubits],
        "couplers": [[list(a), list(b)] for a, b in sorted(layout.couplers)],
        "stabilizers": [
            {"pauli": s.pauli, "kind": s.kind, "weight": s.weight,
             "support": [list(c) for c in sorted(s.support)]}
            for s in layout.stabilizers
        ],
        "gauge_pairs": [
            [{"pauli": g.pauli, "measure": list(g.measure), "slot": g.slot} for g in pair]
            for pair in layout.gauge_pairs
        ],
    }
    return json.dumps(doc, indent=1, sort_keys=True)
