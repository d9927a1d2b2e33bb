"""Stabilizer circuit representation with stim-style text and Crumble fragment I/O.

A :class:`Circuit` is an immutable list of :class:`Instruction` values over
declared qubits.  Record references (``rec[-k]``) are kept as written and are
also resolved to absolute measurement indices when the circuit is built.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

__all__ = [
    "CircuitError",
    "Diagnostic",
    "QubitDecl",
    "Instruction",
    "Circuit",
    "GATE_KINDS",
    "parse_stim_text",
    "parse_crumble",
    "serialize",
    "validate",
    "format_number",
]

GATE_KINDS = ("R", "RX", "M", "MX", "CX")
ANNOTATION_KINDS = ("TICK", "DETECTOR", "OBSERVABLE_INCLUDE", "POLYGON")
MEASURE_KINDS = ("M", "MX")
RESET_KINDS = ("R", "RX")

_ALIASES = {
    "R": "R", "RZ": "R", "RX": "RX",
    "M": "M", "MZ": "M", "MX": "MX",
    "CX": "CX", "CNOT": "CX", "ZCX": "CX",
    "TICK": "TICK", "DETECTOR": "DETECTOR", "OBSERVABLE_INCLUDE": "OBSERVABLE_INCLUDE",
    "POLYGON": "POLYGON",
}


class CircuitError(ValueError):
    """Raised for malformed circuit text or structurally invalid circuits."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        loc = ""
        if line is not None:
            loc = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(loc + message)
        self.line = line
        self.column = column


@dataclass(frozen=True)
class Diagnostic:
    instruction: int
    reason: str


@dataclass(frozen=True)
class QubitDecl:
    index: int
    coord: tuple[float, ...]


@dataclass(frozen=True)
class Instruction:
    """One circuit instruction.

    ``targets`` holds qubit indices for gates and polygons, and negative record
    offsets for ``DETECTOR`` / ``OBSERVABLE_INCLUDE``.  ``args`` holds the
    parenthesised numbers (detector coordinates, observable index, colours).
    """

    kind: str
    targets: tuple[int, ...] = ()
    args: tuple[float, ...] = ()

    @property
    def is_gate(self) -> bool:
        return self.kind in GATE_KINDS

    @property
    def is_measurement(self) -> bool:
        return self.kind in MEASURE_KINDS

    @property
    def is_reset(self) -> bool:
        return self.kind in RESET_KINDS

    def pairs(self) -> list[tuple[int, int]]:
        t = self.targets
        return [(t[i], t[i + 1]) for i in range(0, len(t) - 1, 2)]


@dataclass(frozen=True)
class Circuit:
    """Immutable circuit.

    Derived fields (``num_measurements``, resolved detector and observable
    records) are computed once at construction.  Construction does not reject
    out-of-range records; use :func:`validate` for full diagnostics.
    """

    qubits: tuple[QubitDecl, ...] = ()
    instructions: tuple[Instruction, ...] = ()
    num_measurements: int = field(init=False)
    detector_records: tuple[tuple[int, ...], ...] = field(init=False)
    detector_coords: tuple[tuple[float, ...], ...] = field(init=False)
    observable_records: tuple[tuple[int, ...], ...] = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "qubits", tuple(self.qubits))
        object.__setattr__(self, "instructions", tuple(self.instructions))
        n = 0
        dets: list[tuple[int, ...]] = []
        coords: list[tuple[float, ...]] = []
        obs: dict[int, set[int]] = {}
        for ins in self.instructions:
            if ins.is_measurement:
                n += len(ins.targets)
            elif ins.kind == "DETECTOR":
                dets.append(tuple(sorted(n + t for t in ins.targets)))
                coords.append(ins.args)
            elif ins.kind == "OBSERVABLE_INCLUDE":
                k = int(ins.args[0]) if ins.args else 0
                acc = obs.setdefault(k, set())
                for t in ins.targets:
                    acc ^= {n + t}
        nobs = max(obs) + 1 if obs else 0
        object.__setattr__(self, "num_measurements", n)
        object.__setattr__(self, "detector_records", tuple(dets))
        object.__setattr__(self, "detector_coords", tuple(coords))
        object.__setattr__(
            self, "observable_records",
            tuple(tuple(sorted(obs.get(k, ()))) for k in range(nobs)),
        )

    @property
    def num_qubits(self) -> int:
        used = max((t for ins in self.instructions if ins.is_gate for t in ins.targets), default=-1)
        return max(max((q.index for q in self.qubits), default=-1), used) + 1

    @property
    def num_detectors(self) -> int:
        return len(self.detector_records)

    @property
    def num_observables(self) -> int:
        return len(self.observable_records)

    def coords(self) -> dict[int, tuple[float, ...]]:
        return {q.index: q.coord for q in self.qubits}

    def layers(self) -> list[list[Instruction]]:
        """Split the instruction stream at TICKs (annotations stay in their layer)."""
        out: list[list[Instruction]] = [[]]
        for ins in self.instructions:
            if ins.kind == "TICK":
                out.append([])
            else:
                out[-1].append(ins)
        return out

    def measurement_table(self) -> list[tuple[int, str, int]]:
        """One ``(qubit, basis, measurement-layer)`` entry per record.

        The layer index counts only TICK layers that contain a measurement.
        """
        table: list[tuple[int, str, int]] = []
        layer = -1
        fresh = True
        for ins in self.instructions:
            if ins.kind == "TICK":
                fresh = True
            elif ins.is_measurement:
                if fresh:
                    layer += 1
                    fresh = False
                basis = "Z" if ins.kind == "M" else "X"
                table.extend((q, basis, layer) for q in ins.targets)
        return table

    def __iter__(self) -> Iterator[Instruction]:
        return iter(self.instructions)

    def __len__(self) -> int:
        return len(self.instructions)


# --------------------------------------------------------------------- numbers

def format_number(v: float) -> str:
    """Shortest exact text for a coordinate or tag (``2`` not ``2.0``)."""
    f = float(v)
    if f.is_integer():
        return str(int(f))
    return repr(f)


def _parse_number(tok: str, line: int | None, col: int | None) -> float:
    try:
        return float(tok)
    except ValueError:
        raise CircuitError(f"bad number {tok!r}", line, col) from None


# ------------------------------------------------------------------- stim text

_LINE_RE = re.compile(r"^([A-Za-z_][A-Za-z0-9_]*)\s*(?:\(([^)]*)\))?\s*(.*)$")
_REC_RE = re.compile(r"^rec\[(-\d+)\]$")


def _canon_kind(name: str, line: int | None, col: int | None) -> str:
    kind = _ALIASES.get(name.upper())
    if kind is None:
        raise CircuitError(f"unknown instruction {name!r}", line, col)
    return kind


def _check_kind_targets(kind: str, targets: Sequence[int], is_rec: Sequence[bool],
                        line: int | None, col: int | None) -> None:
    if kind in ("DETECTOR", "OBSERVABLE_INCLUDE"):
        if not all(is_rec):
            raise CircuitError(f"{kind} accepts record targets only", line, col)
    elif any(is_rec):
        raise CircuitError(f"{kind} does not accept record targets", line, col)
    if kind == "TICK" and targets:
        raise CircuitError("TICK takes no targets", line, col)


def _resolve_check(n_meas: int, ins: Instruction, line: int | None, col: int | None) -> None:
    for t in ins.targets:
        if t >= 0 or -t > n_meas:
            raise CircuitError(f"record reference rec[{t}] out of range ({n_meas} prior measurements)", line, col)


def parse_stim_text(text: str) -> Circuit:
    """Parse newline-delimited stim-style text."""
    qubits: dict[int, tuple[float, ...]] = {}
    instrs: list[Instruction] = []
    n_meas = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        m = _LINE_RE.match(body)
        if not m:
            raise CircuitError("syntax error", lineno, 1)
        name, argtxt, rest = m.group(1), m.group(2), m.group(3)
        args: tuple[float, ...] = ()
        if argtxt is not None and argtxt.strip():
            args = tuple(_parse_number(a.strip(), lineno, m.start(2) + 1) for a in argtxt.split(","))
        toks = rest.split()
        if name.upper() == "QUBIT_COORDS":
            for tok in toks:
                if not tok.isdigit():
                    raise CircuitError(f"bad qubit target {tok!r}", lineno, body.find(tok) + 1)
                qubits[int(tok)] = args
            continue
        kind = _canon_kind(name, lineno, 1)
        targets: list[int] = []
        is_rec: list[bool] = []
        for tok in toks:
            col = body.find(tok) + 1
            rm = _REC_RE.match(tok)
            if rm:
                targets.append(int(rm.group(1)))
                is_rec.append(True)
            elif tok.isdigit():
                targets.append(int(tok))
                is_rec.append(False)
            else:
                raise CircuitError(f"bad target {tok!r}", lineno, col)
        _check_kind_targets(kind, targets, is_rec, lineno, 1)
        ins = Instruction(kind, tuple(targets), args)
        if kind in ("DETECTOR", "OBSERVABLE_INCLUDE"):
            _resolve_check(n_meas, ins, lineno, 1)
        if ins.is_measurement:
            n_meas += len(targets)
        instrs.append(ins)
    decls = tuple(QubitDecl(i, c) for i, c in sorted(qubits.items()))
    return Circuit(decls, tuple(instrs))


# --------------------------------------------------------------------- crumble

_Q_RE = re.compile(r"^Q\(([^)]*)\)(\d+)$")
_TAGGED_RE = re.compile(r"^([A-Z_]+)\(([^)]*)\)(.*)$")
_PLAIN_RE = re.compile(r"^([A-Z_]+)((?:_[^;_]+)*)$")

_CRUMBLE_TAGS = {"DT": "DETECTOR", "OI": "OBSERVABLE_INCLUDE", "POLYGON": "POLYGON"}


def parse_crumble(fragment: str) -> Circuit:
    """Parse the body of a Crumble ``circuit=`` URL fragment."""
    text = fragment.strip()
    if text.startswith("#"):
        text = text[1:]
    if text.startswith("circuit="):
        text = text[len("circuit="):]
    qubits: dict[int, tuple[float, ...]] = {}
    instrs: list[Instruction] = []
    n_meas = 0
    if not text:
        return Circuit()
    pos = 0
    for k, tok in enumerate(text.split(";")):
        col = pos + 1
        pos += len(tok) + 1
        if not tok:
            raise CircuitError("dangling separator", None, col)
        qm = _Q_RE.match(tok)
        if qm:
            coord = tuple(_parse_number(c, None, col) for c in qm.group(1).split(","))
            qubits[int(qm.group(2))] = coord
            continue
        tm = _TAGGED_RE.match(tok)
        if tm and tm.group(1) in _CRUMBLE_TAGS:
            kind = _CRUMBLE_TAGS[tm.group(1)]
            args = tuple(_parse_number(a, None, col) for a in tm.group(2).split(",")) if tm.group(2) else ()
            body = tm.group(3)
            targets: list[int] = []
            is_rec: list[bool] = []
            if body:
                parts = body.split("_")
                if any(p == "" for p in parts):
                    raise CircuitError(f"dangling separator in {tok!r}", None, col)
                for p in parts:
                    rm = _REC_RE.match(p)
                    if rm:
                        targets.append(int(rm.group(1)))
                        is_rec.append(True)
                    elif p.isdigit():
                        targets.append(int(p))
                        is_rec.append(False)
                    else:
                        raise CircuitError(f"malformed target {p!r}", None, col)
            _check_kind_targets(kind, targets, is_rec, None, col)
            ins = Instruction(kind, tuple(targets), args)
            if kind in ("DETECTOR", "OBSERVABLE_INCLUDE"):
                _resolve_check(n_meas, ins, None, col)
            instrs.append(ins)
            continue
        pm = _PLAIN_RE.match(tok)
        if not pm:
            raise CircuitError(f"malformed token {tok!r}", None, col)
        kind = _canon_kind(pm.group(1), None, col)
        parts = [p for p in pm.group(2).split("_")[1:]]
        if any(not p.isdigit() for p in parts):
            raise CircuitError(f"malformed token {tok!r}", None, col)
        targets = [int(p) for p in parts]
        _check_kind_targets(kind, targets, [False] * len(targets), None, col)
        ins = Instruction(kind, tuple(targets), ())
        if ins.is_measurement:
            n_meas += len(targets)
        instrs.append(ins)
    if text.endswith(";"):
        raise CircuitError("dangling separator", None, len(text))
    decls = tuple(QubitDecl(i, c) for i, c in sorted(qubits.items()))
    return Circuit(decls, tuple(instrs))


# ------------------------------------------------------------------- serialize

def _args_text(args: Iterable[float], sep: str) -> str:
    return "(" + sep.join(format_number(a) for a in args) + ")"


def _stim_line(ins: Instruction) -> str:
    head = ins.kind
    if ins.args:
        head += _args_text(ins.args, ", ")
    if ins.kind in ("DETECTOR", "OBSERVABLE_INCLUDE"):
        tail = [f"rec[{t}]" for t in ins.targets]
    else:
        tail = [str(t) for t in ins.targets]
    return " ".join([head, *tail]) if tail else head


def _crumble_token(ins: Instruction) -> str:
    if ins.kind in ("DETECTOR", "OBSERVABLE_INCLUDE", "POLYGON"):
        tag = {"DETECTOR": "DT", "OBSERVABLE_INCLUDE": "OI", "POLYGON": "POLYGON"}[ins.kind]
        if ins.kind == "POLYGON":
            body = "_".join(str(t) for t in ins.targets)
        else:
            body = "_".join(f"rec[{t}]" for t in ins.targets)
        return tag + _args_text(ins.args, ",") + body
    if not ins.targets:
        return ins.kind
    return ins.kind + "_" + "_".join(str(t) for t in ins.targets)


def serialize(circuit: Circuit, format: str = "stim-text") -> str:
    """Render ``circuit`` as ``"stim-text"`` or ``"crumble"``."""
    if format in ("stim", "stim-text"):
        lines = [f"QUBIT_COORDS{_args_text(q.coord, ', ')} {q.index}" for q in circuit.qubits]
        lines += [_stim_line(ins) for ins in circuit.instructions]
        return "\n".join(lines) + ("\n" if lines else "")
    if format == "crumble":
        toks = [f"Q{_args_text(q.coord, ',')}{q.index}" for q in circuit.qubits]
        toks += [_crumble_token(ins) for ins in circuit.instructions]
        return ";".join(toks)
    raise ValueError(f"unknown format {format!r}")


# -------------------------------------------------------------------- validate

def validate(circuit: Circuit) -> list[Diagnostic]:
    """Check the structural invariants; an empty list means the circuit is valid."""
    diags: list[Diagnostic] = []
    declared = {q.index for q in circuit.qubits}
    seen_decl: set[int] = set()
    for q in circuit.qubits:
        if q.index in seen_decl:
            diags.append(Diagnostic(-1, f"qubit {q.index} declared twice"))
        seen_decl.add(q.index)
    n_meas = 0
    busy: set[int] = set()
    for i, ins in enumerate(circuit.instructions):
        if ins.kind == "TICK":
            busy = set()
            continue
        if ins.kind in ("DETECTOR", "OBSERVABLE_INCLUDE"):
            for t in ins.targets:
                if t >= 0:
                    diags.append(Diagnostic(i, f"record offset {t} is not negative"))
                elif -t > n_meas:
                    diags.append(Diagnostic(i, f"rec[{t}] out of range ({n_meas} prior measurements)"))
            continue
        if ins.kind == "POLYGON":
            continue
        if ins.kind == "CX" and len(ins.targets) % 2:
            diags.append(Diagnostic(i, "CX has an odd number of targets"))
        if ins.kind == "CX":
            for a, b in ins.pairs():
                if a == b:
                    diags.append(Diagnostic(i, f"CX control equals target ({a})"))
        if len(set(ins.targets)) != len(ins.targets):
            diags.append(Diagnostic(i, "qubit targeted twice within one instruction"))
        for t in ins.targets:
            if t not in declared:
                diags.append(Diagnostic(i, f"qubit {t} is not declared"))
        clash = busy.intersection(ins.targets)
        if clash:
            diags.append(Diagnostic(i, f"qubits {sorted(clash)} already used in this layer"))
        busy.update(ins.targets)
        if ins.is_measurement:
            n_meas += len(ins.targets)
    return diags
