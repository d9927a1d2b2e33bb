"""Stabilizer tableau simulation with symbolic measurement outcomes.

Each random measurement introduces a fresh boolean variable; every later
outcome is an affine GF(2) expression ``const ^ XOR(vars)``.  A detector is
deterministic exactly when its expression has no variables, which makes the
check exact rather than statistical.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from ..circuit import Circuit

__all__ = ["Tableau", "TableauReport", "tableau_run", "reference_sample", "pauli_string"]


def _phase_sum(x1, z1, x2, z2) -> np.ndarray:
    """Sum over columns of the Aaronson-Gottesman ``g`` function, per row.

    ``(x1, z1)`` is the multiplier, ``(x2, z2)`` the accumulator; arrays are
    int8 with shape (rows, n).
    """
    g = np.where(
        (x1 == 1) & (z1 == 1), z2 - x2,
        np.where((x1 == 1) & (z1 == 0), z2 * (2 * x2 - 1),
                 np.where((x1 == 0) & (z1 == 1), x2 * (1 - 2 * z2), 0)),
    )
    return g.sum(axis=-1)


class Tableau:
    """CHP tableau over ``n`` qubits, initialised to ``|0...0>``."""

    def __init__(self, n: int):
        self.n = n
        self.x = np.zeros((2 * n, n), dtype=np.int8)
        self.z = np.zeros((2 * n, n), dtype=np.int8)
        self.x[np.arange(n), np.arange(n)] = 1
        self.z[n + np.arange(n), np.arange(n)] = 1
        self.r = np.zeros(2 * n, dtype=np.int8)
        self.v: list[int] = [0] * (2 * n)
        self.num_vars = 0

    # gates -------------------------------------------------------------
    def h(self, a: int) -> None:
        self.r ^= self.x[:, a] & self.z[:, a]
        self.x[:, a], self.z[:, a] = self.z[:, a].copy(), self.x[:, a].copy()

    def cx(self, a: int, b: int) -> None:
        xa, zb = self.x[:, a], self.z[:, b]
        self.r ^= xa & zb & (self.x[:, b] ^ self.z[:, a] ^ 1)
        self.x[:, b] ^= xa
        self.z[:, a] ^= zb

    def apply_x(self, a: int, const: int, var: int) -> None:
        """Conditionally apply X_a when the expression ``const ^ var`` is 1."""
        rows = np.nonzero(self.z[:, a])[0]
        if const:
            self.r[rows] ^= 1
        if var:
            for i in rows:
                self.v[i] ^= var

    # measurement -------------------------------------------------------
    def measure_z(self, a: int, new_var: bool = True) -> tuple[int, int]:
        """Measure Z_a; returns ``(const, varmask)`` of the outcome."""
        n = self.n
        stab_hits = np.nonzero(self.x[n:, a])[0]
        if stab_hits.size:
            p = n + int(stab_hits[0])
            rows = np.nonzero(self.x[:, a])[0]
            rows = rows[rows != p]
            if rows.size:
                xs, zs = self.x[rows], self.z[rows]
                tot = 2 * self.r[rows].astype(np.int64) + 2 * int(self.r[p]) + _phase_sum(
                    self.x[p][None, :], self.z[p][None, :], xs, zs)
                self.r[rows] = ((tot % 4) // 2).astype(np.int8)
                self.x[rows] ^= self.x[p]
                self.z[rows] ^= self.z[p]
                vp = self.v[p]
                if vp:
                    for i in rows:
                        self.v[i] ^= vp
            q = p - n
            self.x[q], self.z[q], self.r[q], self.v[q] = self.x[p], self.z[p], self.r[p], self.v[p]
            self.x[p] = 0
            self.z[p] = 0
            self.z[p, a] = 1
            self.r[p] = 0
            var = 1 << self.num_vars
            self.num_vars += 1
            self.v[p] = var
            return 0, var
        sel = np.nonzero(self.x[:n, a])[0] + n
        if sel.size == 0:
            return 0, 0
        xs, zs = self.x[sel], self.z[sel]
        px = np.bitwise_xor.accumulate(xs, axis=0)
        pz = np.bitwise_xor.accumulate(zs, axis=0)
        prevx = np.vstack([np.zeros((1, n), dtype=np.int8), px[:-1]])
        prevz = np.vstack([np.zeros((1, n), dtype=np.int8), pz[:-1]])
        tot = 2 * int(self.r[sel].astype(np.int64).sum()) + int(_phase_sum(xs, zs, prevx, prevz).sum())
        const = (tot % 4) // 2
        var = 0
        for i in sel:
            var ^= self.v[i]
        return const, var

    def measure_x(self, a: int) -> tuple[int, int]:
        self.h(a)
        out = self.measure_z(a)
        self.h(a)
        return out

    def reset_z(self, a: int) -> None:
        c, v = self.measure_z(a)
        self.apply_x(a, c, v)

    def reset_x(self, a: int) -> None:
        self.h(a)
        self.reset_z(a)
        self.h(a)

    def stabilizers(self) -> list[tuple[str, int, int]]:
        """Current stabilizer generators as ``(pauli string, sign const, sign vars)``."""
        n = self.n
        return [(pauli_string(self.x[i], self.z[i]), int(self.r[i]), self.v[i]) for i in range(n, 2 * n)]


def pauli_string(x: Sequence[int], z: Sequence[int]) -> str:
    return "".join("IXZY"[int(a) + 2 * int(b)] for a, b in zip(x, z))


@dataclass
class TableauReport:
    measurements: list[tuple[int, int]]
    detector_deterministic: list[bool]
    detector_values: list[int]
    observable_deterministic: list[bool]
    observable_values: list[int]
    snapshots: dict[int, list[tuple[str, int, int]]] = field(default_factory=dict)
    num_random: int = 0

    @property
    def all_deterministic(self) -> bool:
        return all(self.detector_deterministic) and all(self.observable_deterministic)

    def nondeterministic_detectors(self) -> list[int]:
        return [i for i, ok in enumerate(self.detector_deterministic) if not ok]


def _parity(exprs: Sequence[tuple[int, int]], recs: Iterable[int]) -> tuple[int, int]:
    c = v = 0
    for k in recs:
        c ^= exprs[k][0]
        v ^= exprs[k][1]
    return c, v


def tableau_run(circuit: Circuit, snapshot_ticks: Iterable[int] = ()) -> TableauReport:
    """Noiseless symbolic execution.

    ``snapshot_ticks`` lists TICK ordinals (0-based, counting TICK instructions)
    at which to record the stabilizer group.
    """
    n = circuit.num_qubits
    tab = Tableau(n)
    want = set(snapshot_ticks)
    snaps: dict[int, list[tuple[str, int, int]]] = {}
    exprs: list[tuple[int, int]] = []
    ticks = 0
    for ins in circuit.instructions:
        k = ins.kind
        if k == "CX":
            for a, b in ins.pairs():
                tab.cx(a, b)
        elif k == "M":
            exprs.extend(tab.measure_z(q) for q in ins.targets)
        elif k == "MX":
            exprs.extend(tab.measure_x(q) for q in ins.targets)
        elif k == "R":
            for q in ins.targets:
                tab.reset_z(q)
        elif k == "RX":
            for q in ins.targets:
                tab.reset_x(q)
        elif k == "TICK":
            if ticks in want:
                snaps[ticks] = tab.stabilizers()
            ticks += 1
        elif k in ("DETECTOR", "OBSERVABLE_INCLUDE", "POLYGON"):
            pass
        else:
            raise ValueError(f"unsupported instruction {k}")
    dets = [_parity(exprs, recs) for recs in circuit.detector_records]
    obs = [_parity(exprs, recs) for recs in circuit.observable_records]
    return TableauReport(
        measurements=exprs,
        detector_deterministic=[v == 0 for _, v in dets],
        detector_values=[c for c, _ in dets],
        observable_deterministic=[v == 0 for _, v in obs],
        observable_values=[c for c, _ in obs],
        snapshots=snaps,
        num_random=tab.num_vars,
    )


def reference_sample(circuit: Circuit, seed: int = 0, report: TableauReport | None = None) -> np.ndarray:
    """One noiseless measurement record; random outcomes drawn from ``seed``."""
    rep = report if report is not None else tableau_run(circuit)
    rng = np.random.default_rng(seed)
    coins = rng.integers(0, 2, size=max(rep.num_random, 1))
    out = np.zeros(len(rep.measurements), dtype=np.uint8)
    for i, (c, v) in enumerate(rep.measurements):
        bit = c
        k = 0
        while v:
            if v & 1:
                bit ^= int(coins[k])
            v >>= 1
            k += 1
        out[i] = bit
    return out
