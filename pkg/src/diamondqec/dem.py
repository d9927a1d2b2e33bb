"""Detector error models: extraction, merging, graphlike decomposition.

Extraction walks the noisy circuit backwards once.  For every qubit it keeps
two bitsets (Python ints over detectors then observables): the detectors whose
region currently has a Z component on the qubit (flipped by an X error there)
and those with an X component (flipped by a Z error).  Each channel outcome
reads its symptoms straight off these bitsets.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from itertools import product
from typing import Iterable, Sequence

from .circuit import Circuit
from .noise import Channel, NoisyCircuit

__all__ = [
    "DemError",
    "ErrorMechanism",
    "DetectorErrorModel",
    "extract_dem",
    "decompose_graphlike",
    "detector_bases",
    "dem_to_text",
    "dem_from_text",
    "shortest_graphlike_error",
    "xor_prob",
    "depolarize_independent",
]


class DemError(ValueError):
    pass


Symptom = tuple[tuple[int, ...], tuple[int, ...]]


def xor_prob(a: float, b: float) -> float:
    """Probability that exactly one of two independent events fires."""
    return a * (1 - b) + b * (1 - a)


def depolarize_independent(p: float, k: int) -> float:
    """Per-Pauli probability of the independent channels equivalent to depolarizing ``p``.

    Depolarizing over the ``k = 3`` (one qubit) or ``k = 15`` (two qubits)
    non-identity Paulis equals ``log2(k + 1)`` rounds of independent
    generator-flips; solving ``1 - (k+1) p / k = (1 - 2q)^((k+1)/2)`` gives ``q``.
    """
    if p <= 0:
        return 0.0
    base = 1 - (k + 1) * p / k
    if base <= 0:
        return 0.5
    return 0.5 * (1 - base ** (2 / (k + 1)))


@dataclass(frozen=True)
class ErrorMechanism:
    """One independent error: probability, flipped detectors and observables.

    ``components`` is non-empty for a decomposed mechanism; each component is
    a graphlike ``(detectors, observables)`` pair and their XOR equals the
    whole.
    """

    probability: float
    detectors: tuple[int, ...]
    observables: tuple[int, ...] = ()
    components: tuple[Symptom, ...] = ()

    @property
    def symptom(self) -> Symptom:
        return (self.detectors, self.observables)

    def parts(self) -> tuple[Symptom, ...]:
        return self.components or (self.symptom,)


@dataclass(frozen=True)
class DetectorErrorModel:
    mechanisms: tuple[ErrorMechanism, ...]
    num_detectors: int
    num_observables: int
    graphlike: bool = False
    detector_basis: tuple[str, ...] = ()
    detector_coords: tuple[tuple[float, ...], ...] = ()

    def __len__(self) -> int:
        return len(self.mechanisms)


def detector_bases(circuit: Circuit) -> tuple[str, ...]:
    """Basis of each detector, taken from its latest measurement."""
    table = circuit.measurement_table()
    return tuple(table[max(recs)][1] if recs else "Z" for recs in circuit.detector_records)


def _bits(mask: int) -> list[int]:
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def _split(mask: int, ndet: int) -> Symptom:
    bits = _bits(mask)
    return (tuple(b for b in bits if b < ndet), tuple(b - ndet for b in bits if b >= ndet))


def _outcomes(ch: Channel, rx: list[int], rz: list[int]):
    """Yield ``(symptom mask, probability)`` for every non-identity outcome of ``ch``."""
    p = ch.probability
    if ch.kind == "X_ERROR":
        for q in ch.targets:
            yield rz[q], p
    elif ch.kind == "Z_ERROR":
        for q in ch.targets:
            yield rx[q], p
    elif ch.kind == "DEPOLARIZE1":
        qi = depolarize_independent(p, 3)
        for q in ch.targets:
            yield rz[q], qi
            yield rx[q], qi
            yield rz[q] ^ rx[q], qi
    elif ch.kind == "DEPOLARIZE2":
        qi = depolarize_independent(p, 15)
        t = ch.targets
        for i in range(0, len(t), 2):
            a, b = t[i], t[i + 1]
            sa = (0, rz[a], rx[a], rz[a] ^ rx[a])
            sb = (0, rz[b], rx[b], rz[b] ^ rx[b])
            for pa in range(4):
                for pb in range(4):
                    if pa or pb:
                        yield sa[pa] ^ sb[pb], qi
    else:
        raise DemError(f"channel {ch.kind} cannot be propagated as a Pauli")


def extract_dem(noisy: NoisyCircuit) -> DetectorErrorModel:
    circuit = noisy.base
    ndet = circuit.num_detectors
    nobs = circuit.num_observables
    n = circuit.num_qubits
    rec_mask = [0] * circuit.num_measurements
    for d, recs in enumerate(circuit.detector_records):
        for r in recs:
            rec_mask[r] ^= 1 << d
    for k, recs in enumerate(circuit.observable_records):
        for r in recs:
            rec_mask[r] ^= 1 << (ndet + k)
    rx = [0] * n
    rz = [0] * n
    bad = 0
    acc: dict[int, float] = {}

    def add(mask: int, prob: float) -> None:
        if prob <= 0 or mask == 0:
            return
        prev = acc.get(mask)
        acc[mask] = prob if prev is None else xor_prob(prev, prob)

    program = list(noisy.program())
    meas = circuit.num_measurements
    for kind, item in reversed(program):
        if kind == "noise":
            ch: Channel = item  # type: ignore[assignment]
            if ch.probability <= 0:
                continue
            if ch.kind == "FLIP":
                for r in ch.records:
                    add(rec_mask[r], ch.probability)
            else:
                for mask, prob in _outcomes(ch, rx, rz):
                    add(mask, prob)
            continue
        ins = item
        k = ins.kind  # type: ignore[attr-defined]
        if k == "CX":
            for c, t in reversed(ins.pairs()):  # type: ignore[attr-defined]
                rx[t] ^= rx[c]
                rz[c] ^= rz[t]
        elif k in ("M", "MX"):
            for q in reversed(ins.targets):  # type: ignore[attr-defined]
                meas -= 1
                if k == "M":
                    bad |= rx[q]
                    rz[q] ^= rec_mask[meas]
                else:
                    bad |= rz[q]
                    rx[q] ^= rec_mask[meas]
        elif k in ("R", "RX"):
            for q in ins.targets:  # type: ignore[attr-defined]
                bad |= rx[q] if k == "R" else rz[q]
                rx[q] = rz[q] = 0
    for q in range(n):
        bad |= rx[q]  # qubits start in |0>
    if bad:
        dets, obs = _split(bad, ndet)
        raise DemError(f"non-deterministic detectors {list(dets)[:10]} observables {list(obs)}")
    mechs = []
    for mask in sorted(acc, key=lambda m: _split(m, ndet)):
        dets, obs = _split(mask, ndet)
        mechs.append(ErrorMechanism(acc[mask], dets, obs))
    return DetectorErrorModel(tuple(mechs), ndet, nobs, False,
                              detector_bases(circuit), circuit.detector_coords)


# ----------------------------------------------------------- decomposition

def _xor_sets(a: Iterable[int], b: Iterable[int]) -> tuple[int, ...]:
    return tuple(sorted(set(a) ^ set(b)))


def decompose_graphlike(dem: DetectorErrorModel, strict: bool = True) -> DetectorErrorModel:
    """Rewrite every mechanism with more than two detectors as graphlike components.

    First choice is the split by detector basis (the X and Z halves of a Y-type
    error).  A half that still has more than two detectors is split into two
    or three known graphlike symptom sets.  Each component's observables come
    from a known mechanism with the same detectors when one exists.
    """
    known: dict[tuple[int, ...], list[tuple[int, ...]]] = {}
    for m in dem.mechanisms:
        if len(m.detectors) <= 2:
            known.setdefault(m.detectors, [])
            if m.observables not in known[m.detectors]:
                known[m.detectors].append(m.observables)
    for obs_list in known.values():
        obs_list.sort(key=lambda o: (len(o), o))
    by_det: dict[int, list[tuple[int, ...]]] = {}
    for dets in known:
        for d in dets:
            by_det.setdefault(d, []).append(dets)
    for lst in by_det.values():
        lst.sort()
    basis = dem.detector_basis or ("Z",) * dem.num_detectors

    def split_same_basis(dets: tuple[int, ...]) -> list[tuple[int, ...]] | None:
        if len(dets) <= 2:
            return [dets]
        target = set(dets)
        first = dets[0]
        for a in by_det.get(first, []):
            if not set(a) <= target:
                continue
            rest = tuple(sorted(target - set(a)))
            if rest in known:
                return [a, rest]
        for a in by_det.get(first, []):
            if not set(a) <= target:
                continue
            rest = tuple(sorted(target - set(a)))
            for b in by_det.get(rest[0], []):
                if set(b) <= set(rest):
                    c = tuple(sorted(set(rest) - set(b)))
                    if c in known:
                        return [a, b, c]
        return None

    def assign_obs(parts: list[tuple[int, ...]], total: tuple[int, ...]) -> list[Symptom] | None:
        options = [known.get(p, [None]) for p in parts]  # type: ignore[list-item]
        for choice in product(*options):
            fixed = [o for o in choice if o is not None]
            acc: tuple[int, ...] = ()
            for o in fixed:
                acc = _xor_sets(acc, o)
            free = [i for i, o in enumerate(choice) if o is None]
            if not free:
                if acc == tuple(total):
                    return [(p, o) for p, o in zip(parts, choice)]  # type: ignore[misc]
                continue
            out = list(choice)
            for i in free:
                out[i] = ()
            out[free[0]] = _xor_sets(acc, total)
            return [(p, o) for p, o in zip(parts, out)]  # type: ignore[misc]
        return None

    mechs = []
    failures = []
    for m in dem.mechanisms:
        if len(m.detectors) <= 2:
            mechs.append(ErrorMechanism(m.probability, m.detectors, m.observables))
            continue
        halves = [tuple(d for d in m.detectors if basis[d] == b) for b in ("X", "Z")]
        halves = [h for h in halves if h]
        parts: list[tuple[int, ...]] | None = []
        for h in halves:
            sub = split_same_basis(h)
            if sub is None:
                parts = None
                break
            parts.extend(sub)  # type: ignore[union-attr]
        comps = assign_obs(parts, m.observables) if parts else None
        if comps is None:
            failures.append(m)
            mechs.append(m)
            continue
        mechs.append(ErrorMechanism(m.probability, m.detectors, m.observables, tuple(comps)))
    if failures and strict:
        f = failures[0]
        raise DemError(f"{len(failures)} undecomposable mechanisms, e.g. D{list(f.detectors)} L{list(f.observables)}")
    return DetectorErrorModel(tuple(mechs), dem.num_detectors, dem.num_observables, not failures,
                              dem.detector_basis, dem.detector_coords)


# -------------------------------------------------------------------- text

def _fmt_prob(p: float) -> str:
    return format(p, ".17g")


def _symptom_text(dets: Sequence[int], obs: Sequence[int]) -> str:
    return " ".join([*(f"D{d}" for d in dets), *(f"L{o}" for o in obs)])


def dem_to_text(dem: DetectorErrorModel) -> str:
    """``error(q) D3 D17 L0`` per mechanism; decomposed components joined by ``^``."""
    lines = [f"# detectors {dem.num_detectors} observables {dem.num_observables}"]
    for m in dem.mechanisms:
        if m.components:
            body = " ^ ".join(_symptom_text(d, o) for d, o in m.components)
        else:
            body = _symptom_text(m.detectors, m.observables)
        lines.append(f"error({_fmt_prob(m.probability)}) {body}".rstrip())
    for d, b in enumerate(dem.detector_basis):
        coord = dem.detector_coords[d] if d < len(dem.detector_coords) else ()
        lines.append(f"detector({', '.join(format(c, 'g') for c in coord)}) D{d} # basis {b}")
    return "\n".join(lines) + "\n"


def dem_from_text(text: str) -> DetectorErrorModel:
    mechs = []
    ndet = nobs = 0
    bases: dict[int, str] = {}
    coords: dict[int, tuple[float, ...]] = {}
    graphlike = True
    for raw in text.splitlines():
        line = raw.strip()
        if line.startswith("# detectors"):
            toks = line.split()
            ndet, nobs = int(toks[2]), int(toks[4])
            continue
        comment = ""
        if "#" in line:
            line, comment = line.split("#", 1)
            line = line.strip()
        if not line:
            continue
        head, _, body = line.partition(")")
        name, _, arg = head.partition("(")
        if name == "detector":
            d = int(body.split()[0][1:])
            coords[d] = tuple(float(a) for a in arg.split(",") if a.strip())
            if "basis" in comment:
                bases[d] = comment.split()[-1]
            ndet = max(ndet, d + 1)
            continue
        if name != "error":
            raise DemError(f"unknown DEM line {raw!r}")
        comps = []
        for chunk in body.split("^"):
            toks = chunk.split()
            dets = tuple(sorted(int(t[1:]) for t in toks if t.startswith("D")))
            obs = tuple(sorted(int(t[1:]) for t in toks if t.startswith("L")))
            comps.append((dets, obs))
            ndet = max([ndet, *(d + 1 for d in dets)])
            nobs = max([nobs, *(o + 1 for o in obs)])
        dets_all: tuple[int, ...] = ()
        obs_all: tuple[int, ...] = ()
        for d, o in comps:
            dets_all = _xor_sets(dets_all, d)
            obs_all = _xor_sets(obs_all, o)
        if any(len(d) > 2 for d, _ in comps):
            graphlike = False
        mechs.append(ErrorMechanism(float(arg), dets_all, obs_all, tuple(comps) if len(comps) > 1 else ()))
    basis = tuple(bases.get(d, "Z") for d in range(ndet)) if bases else ()
    crd = tuple(coords.get(d, ()) for d in range(ndet)) if coords else ()
    return DetectorErrorModel(tuple(mechs), ndet, nobs, graphlike, basis, crd)


# --------------------------------------------------------------- distance

def shortest_graphlike_error(dem: DetectorErrorModel, observable: int = 0) -> list[Symptom]:
    """Fewest graphlike components whose detectors cancel and which flip ``observable``.

    Breadth-first search over ``(node, observable parity)`` from the boundary
    node back to the boundary with odd parity; each component is a unit edge.
    """
    bnode = dem.num_detectors
    adj: dict[int, list[tuple[int, int, Symptom]]] = {}
    for m in dem.mechanisms:
        for dets, obs in m.parts():
            if len(dets) > 2:
                raise DemError("model is not graphlike")
            flip = 1 if observable in obs else 0
            if not dets:
                if flip:
                    return [(dets, obs)]
                continue
            a = dets[0]
            b = dets[1] if len(dets) == 2 else bnode
            adj.setdefault(a, []).append((b, flip, (dets, obs)))
            adj.setdefault(b, []).append((a, flip, (dets, obs)))
    start = (bnode, 0)
    prev: dict[tuple[int, int], tuple[tuple[int, int], Symptom] | None] = {start: None}
    queue = deque([start])
    goal = (bnode, 1)
    while queue:
        node, par = queue.popleft()
        if (node, par) == goal:
            break
        for nb, flip, sym in adj.get(node, ()):
            st = (nb, par ^ flip)
            if st not in prev:
                prev[st] = ((node, par), sym)
                queue.append(st)
    if goal not in prev:
        return []
    path = []
    st = goal
    while prev[st] is not None:
        st, sym = prev[st]  # type: ignore[misc]
        path.append(sym)
    return path[::-1]
