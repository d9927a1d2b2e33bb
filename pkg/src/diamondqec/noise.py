"""SI1000 circuit noise.

Rules, applied per TICK layer and stacked when several match:

* two-qubit gate: two-qubit depolarizing after the gate
* one-qubit gate: one-qubit depolarizing after the gate (unused by these circuits)
* reset: a flip in the reset basis after the reset
* measurement: classical result flip, then one-qubit depolarizing on the qubit
* idle: one-qubit depolarizing on qubits untouched in a gate layer
* resonator idle: one-qubit depolarizing on qubits untouched in a layer that
  measures or resets other qubits (these qubits do not also get plain idle)

Layers before the first and after the last gate-bearing layer carry no noise.
Empty layers between them are time steps in which every qubit idles.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterator, Mapping

from .circuit import Circuit, _args_text, _stim_line, format_number

__all__ = [
    "SI1000_FACTORS",
    "NoiseParams",
    "Channel",
    "NoisyCircuit",
    "apply_si1000",
    "channel_census",
    "load_factors",
    "noisy_to_text",
]

SI1000_FACTORS: dict[str, float] = {
    "two-qubit-gate": 1.0,
    "one-qubit-gate": 0.1,
    "reset-flip": 2.0,
    "measure-flip": 5.0,
    "measure-depolarize": 1.0,
    "idle": 0.1,
    "resonator-idle": 2.0,
}


@dataclass(frozen=True)
class NoiseParams:
    p: float
    factors: Mapping[str, float] = field(default_factory=lambda: dict(SI1000_FACTORS))

    def __post_init__(self) -> None:
        if not 0 <= self.p < 0.5:
            raise ValueError(f"p must lie in [0, 0.5), got {self.p}")
        merged = dict(SI1000_FACTORS)
        for k, v in dict(self.factors).items():
            if k not in SI1000_FACTORS:
                raise ValueError(f"unknown noise factor {k!r}")
            merged[k] = float(v)
        object.__setattr__(self, "factors", merged)
        for k in merged:
            q = self.prob(k)
            if not 0 <= q <= 1:
                raise ValueError(f"{k} probability {q} outside [0, 1]")

    def prob(self, site: str) -> float:
        return self.p * self.factors[site]


def load_factors(path: str) -> dict[str, float]:
    """Read a flat ``key = value`` (or JSON object) factor file."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if text.lstrip().startswith("{"):
        return {str(k): float(v) for k, v in json.loads(text).items()}
    out: dict[str, float] = {}
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, val = line.replace(":", "=").partition("=")
        out[key.strip()] = float(val)
    return out


@dataclass(frozen=True)
class Channel:
    """A noise channel applied right after instruction ``position``.

    ``kind`` is one of DEPOLARIZE1, DEPOLARIZE2 (targets are flattened pairs),
    X_ERROR, Z_ERROR, FLIP (``records`` holds absolute measurement indices).
    ``site`` names the SI1000 rule that produced it.
    """

    position: int
    kind: str
    targets: tuple[int, ...]
    probability: float
    site: str
    records: tuple[int, ...] = ()

    @property
    def size(self) -> int:
        if self.kind == "DEPOLARIZE2":
            return len(self.targets) // 2
        if self.kind == "FLIP":
            return len(self.records)
        return len(self.targets)


@dataclass(frozen=True)
class NoisyCircuit:
    base: Circuit
    channels: tuple[Channel, ...]
    params: NoiseParams | None = None

    def program(self) -> Iterator[tuple[str, object]]:
        """Interleave instructions and channels: yields ``("op", Instruction)`` or ``("noise", Channel)``."""
        by_pos: dict[int, list[Channel]] = {}
        for ch in self.channels:
            by_pos.setdefault(ch.position, []).append(ch)
        for i, ins in enumerate(self.base.instructions):
            yield "op", ins
            for ch in by_pos.get(i, ()):
                yield "noise", ch


def apply_si1000(circuit: Circuit, params: NoiseParams | float) -> NoisyCircuit:
    if not isinstance(params, NoiseParams):
        params = NoiseParams(float(params))
    qubits = sorted({q.index for q in circuit.qubits} |
                    {t for ins in circuit.instructions if ins.is_gate for t in ins.targets})
    # group instruction indices into TICK layers
    layers: list[list[int]] = [[]]
    for i, ins in enumerate(circuit.instructions):
        if ins.kind == "TICK":
            layers.append([])
        else:
            layers[-1].append(i)
    gated = [k for k, lay in enumerate(layers) if any(circuit.instructions[i].is_gate for i in lay)]
    first, last = (gated[0], gated[-1]) if gated else (0, -1)
    # position of the TICK that opens each layer, used for noise in empty layers
    tick_pos = [-1]
    for i, ins in enumerate(circuit.instructions):
        if ins.kind == "TICK":
            tick_pos.append(i)

    chans: list[Channel] = []
    n_meas = 0
    for k, lay in enumerate(layers):
        touched: set[int] = set()
        collapsing = False
        end = tick_pos[k]
        for i in lay:
            ins = circuit.instructions[i]
            if not ins.is_gate:
                continue
            end = i
            touched.update(ins.targets)
            if ins.kind == "CX":
                chans.append(Channel(i, "DEPOLARIZE2", ins.targets, params.prob("two-qubit-gate"), "two-qubit-gate"))
            elif ins.kind in ("R", "RX"):
                collapsing = True
                kind = "X_ERROR" if ins.kind == "R" else "Z_ERROR"
                chans.append(Channel(i, kind, ins.targets, params.prob("reset-flip"), "reset-flip"))
            else:
                collapsing = True
                recs = tuple(range(n_meas, n_meas + len(ins.targets)))
                n_meas += len(ins.targets)
                chans.append(Channel(i, "FLIP", ins.targets, params.prob("measure-flip"), "measure-flip", recs))
                chans.append(Channel(i, "DEPOLARIZE1", ins.targets, params.prob("measure-depolarize"),
                                     "measure-depolarize"))
        if not first <= k <= last:
            continue
        idle = tuple(q for q in qubits if q not in touched)
        if idle:
            site = "resonator-idle" if collapsing else "idle"
            chans.append(Channel(end, "DEPOLARIZE1", idle, params.prob(site), site))
    # stable order: by position, then the order in which rules were applied
    order = sorted(range(len(chans)), key=lambda j: (chans[j].position, j))
    return NoisyCircuit(circuit, tuple(chans[j] for j in order), params)


def channel_census(noisy: NoisyCircuit) -> dict[str, int]:
    """Count elementary channel applications (one per qubit, pair or record) per SI1000 site."""
    c: Counter[str] = Counter()
    for ch in noisy.channels:
        c[ch.site] += ch.size
    return dict(sorted(c.items()))


def noisy_to_text(noisy: NoisyCircuit) -> str:
    """Stim-compatible text of the noisy circuit.

    Measurement flips become the measurement's probability argument
    (``M(p)``); polygon annotations are dropped since Stim has no such
    instruction.
    """
    flips = {ch.position: ch.probability for ch in noisy.channels if ch.kind == "FLIP"}
    after: dict[int, list[Channel]] = {}
    for ch in noisy.channels:
        if ch.kind != "FLIP":
            after.setdefault(ch.position, []).append(ch)
    lines = []
    for q in sorted(noisy.base.qubits, key=lambda q: q.index):
        lines.append(f"QUBIT_COORDS{_args_text(q.coord, ', ')} {q.index}")
    for i, ins in enumerate(noisy.base.instructions):
        if ins.kind == "POLYGON":
            continue
        line = _stim_line(ins)
        if flips.get(i, 0) > 0:
            line = f"{ins.kind}({format_number(flips[i])})" + line[len(ins.kind):]
        lines.append(line)
        for ch in after.get(i, ()):
            if ch.probability > 0:
                lines.append(f"{ch.kind}({format_number(ch.probability)}) " + " ".join(map(str, ch.targets)))
    return "\n".join(lines) + "\n"
