"""Bit-packed Pauli-frame sampling.

Shots are processed in fixed blocks of ``BLOCK_SHOTS``; inside a block each
qubit's X and Z frame components are rows of ``uint64`` words (64 shots per
word).  Block ``b`` draws all of its randomness from a Philox generator keyed
by ``(seed, b)`` in a fixed channel order, so the bits of a shot depend only on
the seed and the shot index: not on how many shots were requested or how many
threads ran.
"""

from __future__ import annotations

import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..circuit import Circuit
from ..noise import NoisyCircuit
from .tableau import reference_sample, tableau_run

__all__ = [
    "BLOCK_SHOTS",
    "SampleBatch",
    "CompiledSampler",
    "sample",
    "detection_fraction",
    "default_threads",
    "write_batch",
    "read_batch",
]

BLOCK_SHOTS = 8192
_WORDS = BLOCK_SHOTS // 64
_ONE = np.uint64(1)


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get("DIAMONDQEC_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class SampleBatch:
    """Sampled detector and observable bits.

    ``detectors`` has shape ``(shots, ceil(num_detectors / 8))``; ``observables``
    likewise.  Bits are packed little-endian within each byte: detector ``k``
    of a shot lives in byte ``k // 8`` at bit ``k % 8``.
    """

    shots: int
    num_detectors: int
    num_observables: int
    detectors: np.ndarray
    observables: np.ndarray
    seed: int

    def detector_bits(self) -> np.ndarray:
        return np.unpackbits(self.detectors, axis=1, count=self.num_detectors, bitorder="little").astype(bool)

    def observable_bits(self) -> np.ndarray:
        return np.unpackbits(self.observables, axis=1, count=self.num_observables, bitorder="little").astype(bool)


def _positions(rng: np.random.Generator, n: int, p: float) -> np.ndarray:
    """Indices in ``range(n)`` hit by independent Bernoulli(p) trials."""
    if p <= 0 or n == 0:
        return np.empty(0, dtype=np.int64)
    if p >= 1:
        return np.arange(n, dtype=np.int64)
    if p > 0.05:
        return np.flatnonzero(rng.random(n) < p)
    chunks = []
    pos = -1
    while True:
        m = int(n * p * 1.1) + 16
        gaps = rng.geometric(p, size=m)
        cum = pos + np.cumsum(gaps)
        chunks.append(cum[cum < n])
        if cum[-1] >= n:
            break
        pos = int(cum[-1])
    return np.concatenate(chunks)


class CompiledSampler:
    """A noisy circuit lowered to array operations, reusable across calls."""

    def __init__(self, noisy: NoisyCircuit, reference_seed: int = 0):
        circuit: Circuit = noisy.base
        self.noisy = noisy
        self.nq = max(circuit.num_qubits, 1)
        self.nmeas = circuit.num_measurements
        self.ndet = circuit.num_detectors
        self.nobs = circuit.num_observables
        self.ops: list[tuple] = []
        meas = 0
        for kind, item in noisy.program():
            if kind == "op":
                k = item.kind
                t = np.asarray(item.targets, dtype=np.int64)
                if k == "CX":
                    self.ops.append(("CX", t[0::2], t[1::2]))
                elif k in ("M", "MX"):
                    self.ops.append((k, t, np.arange(meas, meas + len(t))))
                    meas += len(t)
                elif k in ("R", "RX"):
                    self.ops.append((k, t))
            else:
                ch = item
                if ch.probability <= 0:
                    continue
                if ch.kind == "FLIP":
                    self.ops.append(("FLIP", np.asarray(ch.records, dtype=np.int64), ch.probability))
                else:
                    self.ops.append((ch.kind, np.asarray(ch.targets, dtype=np.int64), ch.probability))
        rep = tableau_run(circuit)
        ref = reference_sample(circuit, reference_seed, rep)
        self.det_ref = np.array([int(ref[list(r)].sum() % 2) if r else 0 for r in circuit.detector_records], dtype=np.uint8)
        self.obs_ref = np.array([int(ref[list(r)].sum() % 2) if r else 0 for r in circuit.observable_records], dtype=np.uint8)
        self.det_recs = [np.asarray(r, dtype=np.int64) for r in circuit.detector_records]
        self.obs_recs = [np.asarray(r, dtype=np.int64) for r in circuit.observable_records]

    # ------------------------------------------------------------------
    def _flip(self, arr: np.ndarray, rows: np.ndarray, pos: np.ndarray) -> None:
        r = rows[pos // BLOCK_SHOTS]
        s = pos % BLOCK_SHOTS
        np.bitwise_xor.at(arr, (r, s >> 6), _ONE << (s & 63).astype(np.uint64))

    def run_block(self, seed: int, block: int) -> tuple[np.ndarray, np.ndarray]:
        """Detector and observable words (``(count, _WORDS)`` uint64) for one block."""
        rng = np.random.Generator(np.random.Philox(key=np.array([seed & (2**64 - 1), block], dtype=np.uint64)))
        x = np.zeros((self.nq, _WORDS), dtype=np.uint64)
        z = np.zeros((self.nq, _WORDS), dtype=np.uint64)
        rec = np.zeros((max(self.nmeas, 1), _WORDS), dtype=np.uint64)
        S = BLOCK_SHOTS
        for op in self.ops:
            k = op[0]
            if k == "CX":
                c, t = op[1], op[2]
                x[t] ^= x[c]
                z[c] ^= z[t]
            elif k == "M":
                rec[op[2]] = x[op[1]]
                z[op[1]] = rng.integers(0, 2**64, size=(len(op[1]), _WORDS), dtype=np.uint64, endpoint=False)
            elif k == "MX":
                rec[op[2]] = z[op[1]]
                x[op[1]] = rng.integers(0, 2**64, size=(len(op[1]), _WORDS), dtype=np.uint64, endpoint=False)
            elif k == "R":
                x[op[1]] = 0
                z[op[1]] = rng.integers(0, 2**64, size=(len(op[1]), _WORDS), dtype=np.uint64, endpoint=False)
            elif k == "RX":
                z[op[1]] = 0
                x[op[1]] = rng.integers(0, 2**64, size=(len(op[1]), _WORDS), dtype=np.uint64, endpoint=False)
            elif k == "X_ERROR":
                self._flip(x, op[1], _positions(rng, len(op[1]) * S, op[2]))
            elif k == "Z_ERROR":
                self._flip(z, op[1], _positions(rng, len(op[1]) * S, op[2]))
            elif k == "FLIP":
                self._flip(rec, op[1], _positions(rng, len(op[1]) * S, op[2]))
            elif k == "DEPOLARIZE1":
                pos = _positions(rng, len(op[1]) * S, op[2])
                if pos.size:
                    pauli = rng.integers(1, 4, size=pos.size)
                    self._flip(x, op[1], pos[(pauli & 1) == 1])
                    self._flip(z, op[1], pos[(pauli & 2) == 2])
            elif k == "DEPOLARIZE2":
                t = op[1]
                a, b = t[0::2], t[1::2]
                pos = _positions(rng, len(a) * S, op[2])
                if pos.size:
                    pauli = rng.integers(1, 16, size=pos.size)
                    self._flip(x, a, pos[(pauli & 1) == 1])
                    self._flip(z, a, pos[(pauli & 2) == 2])
                    self._flip(x, b, pos[(pauli & 4) == 4])
                    self._flip(z, b, pos[(pauli & 8) == 8])
            else:  # pragma: no cover - guarded by compile step
                raise ValueError(k)
        dets = np.zeros((self.ndet, _WORDS), dtype=np.uint64)
        for i, r in enumerate(self.det_recs):
            if r.size:
                dets[i] = np.bitwise_xor.reduce(rec[r], axis=0)
            if self.det_ref[i]:
                dets[i] = ~dets[i]
        obs = np.zeros((self.nobs, _WORDS), dtype=np.uint64)
        for i, r in enumerate(self.obs_recs):
            if r.size:
                obs[i] = np.bitwise_xor.reduce(rec[r], axis=0)
            if self.obs_ref[i]:
                obs[i] = ~obs[i]
        return dets, obs

    def sample(self, shots: int, seed: int, threads: int | None = None,
               first_block: int = 0) -> SampleBatch:
        if shots < 1:
            raise ValueError("shots must be >= 1")
        nblocks = -(-shots // BLOCK_SHOTS)
        threads = threads or default_threads()
        blocks = range(first_block, first_block + nblocks)
        if threads > 1 and nblocks > 1:
            with ThreadPoolExecutor(max_workers=threads) as ex:
                results = list(ex.map(lambda b: self.run_block(seed, b), blocks))
        else:
            results = [self.run_block(seed, b) for b in blocks]
        det = _to_shot_major([r[0] for r in results], shots)
        obs = _to_shot_major([r[1] for r in results], shots)
        return SampleBatch(shots, self.ndet, self.nobs, det, obs, seed)


def _to_shot_major(parts: list[np.ndarray], shots: int) -> np.ndarray:
    words = np.concatenate(parts, axis=1) if parts else np.zeros((0, 0), dtype=np.uint64)
    count = words.shape[0]
    if count == 0:
        return np.zeros((shots, 0), dtype=np.uint8)
    bits = np.unpackbits(words.astype("<u8").view(np.uint8), axis=1, bitorder="little")[:, :shots]
    return np.packbits(bits.T, axis=1, bitorder="little")


def sample(noisy: NoisyCircuit, shots: int, seed: int, threads: int | None = None) -> SampleBatch:
    return CompiledSampler(noisy).sample(shots, seed, threads)


def detection_fraction(batch: SampleBatch) -> tuple[np.ndarray, float]:
    """Per-detector event rate and the mean over all detectors."""
    if batch.num_detectors == 0:
        return np.zeros(0), 0.0
    counts = np.zeros(batch.num_detectors, dtype=np.int64)
    step = 1 << 16
    for s in range(0, batch.shots, step):
        counts += np.unpackbits(batch.detectors[s:s + step], axis=1, count=batch.num_detectors,
                                bitorder="little").sum(axis=0, dtype=np.int64)
    rates = counts / batch.shots
    return rates, float(rates.mean())


_MAGIC = b"DQSB"


def write_batch(path: str, batch: SampleBatch) -> None:
    """Header ``DQSB`` + little-endian u64 (shots, detectors, observables, seed), then packed rows."""
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<4Q", batch.shots, batch.num_detectors, batch.num_observables,
                             batch.seed & (2**64 - 1)))
        fh.write(np.ascontiguousarray(batch.detectors).tobytes())
        fh.write(np.ascontiguousarray(batch.observables).tobytes())


def read_batch(path: str) -> SampleBatch:
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise ValueError("not a sample batch file")
        shots, nd, no, seed = struct.unpack("<4Q", fh.read(32))
        bd, bo = -(-nd // 8), -(-no // 8)
        det = np.frombuffer(fh.read(shots * bd), dtype=np.uint8).reshape(shots, bd).copy()
        obs = np.frombuffer(fh.read(shots * bo), dtype=np.uint8).reshape(shots, bo).copy()
    return SampleBatch(shots, nd, no, det, obs, seed)
