"""Logical-error-rate sweeps."""

from __future__ import annotations

import csv
import hashlib
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from statistics import NormalDist
from typing import Mapping, Sequence

import numpy as np

from ..decoder import Decoder, TwoPassDecoder, build_matching_graph
from ..dem import decompose_graphlike, extract_dem
from ..generate import ExperimentSpec, build_memory_circuit
from ..noise import NoiseParams, apply_si1000
from ..sim import BLOCK_SHOTS, CompiledSampler

__all__ = [
    "DECODER_MODES",
    "SweepConfig",
    "LerPoint",
    "wilson_interval",
    "point_seed",
    "run_point",
    "run_sweep",
    "load_config",
    "write_ler_csv",
    "read_ler_csv",
    "LER_COLUMNS",
]

DECODER_MODES = ("single", "two-pass")
ROUNDS_PER_D = {"diamond": 4, "standard": 1}
_Z95 = NormalDist().inv_cdf(0.975)
_CHUNK = 8 * BLOCK_SHOTS


def wilson_interval(errors: int, shots: int, z: float = _Z95) -> tuple[float, float]:
    """Wilson score interval for a binomial rate."""
    if shots <= 0:
        raise ValueError("shots must be positive")
    if not 0 <= errors <= shots:
        raise ValueError("errors must lie in [0, shots]")
    ph = errors / shots
    z2 = z * z
    den = 1 + z2 / shots
    mid = (ph + z2 / (2 * shots)) / den
    half = z * np.sqrt(ph * (1 - ph) / shots + z2 / (4 * shots * shots)) / den
    return max(0.0, float(mid - half)), min(1.0, float(mid + half))


@dataclass(frozen=True)
class SweepConfig:
    families: Mapping[str, tuple[int, ...]]
    p_grid: tuple[float, ...]
    shots: int = 100_000
    seed: int = 0
    decoder: str = "single"
    engine: str = "pymatching"
    basis: str = "X"
    rounds_per_d: Mapping[str, int] = field(default_factory=lambda: dict(ROUNDS_PER_D))
    threads: int | None = None
    workers: int = 1
    out_dir: str | None = None

    def __post_init__(self) -> None:
        fams = {str(k): tuple(int(d) for d in v) for k, v in dict(self.families).items()}
        for f in fams:
            if f not in ROUNDS_PER_D:
                raise ValueError(f"unknown family {f!r}")
        object.__setattr__(self, "families", fams)
        grid = tuple(float(p) for p in self.p_grid)
        if not grid:
            raise ValueError("empty p grid")
        if list(grid) != sorted(grid):
            raise ValueError("p grid must be sorted ascending")
        object.__setattr__(self, "p_grid", grid)
        if self.shots < 1000:
            raise ValueError("at least 1000 shots per point are required")
        if self.decoder not in DECODER_MODES:
            raise ValueError(f"decoder must be one of {DECODER_MODES}")
        rpd = dict(ROUNDS_PER_D)
        rpd.update({str(k): int(v) for k, v in dict(self.rounds_per_d).items()})
        object.__setattr__(self, "rounds_per_d", rpd)

    def tasks(self) -> list[tuple[str, int, float]]:
        return [(f, d, p) for f in sorted(self.families) for d in sorted(self.families[f]) for p in self.p_grid]


@dataclass(frozen=True)
class LerPoint:
    family: str
    distance: int
    p: float
    shots: int
    errors: int
    rounds: int = 0
    basis: str = "X"
    decoder: str = "single"
    seed: int = 0
    detection_fraction: float = 0.0
    detector_fractions: tuple[float, ...] = field(default=(), compare=False, repr=False)
    seconds: float = field(default=0.0, compare=False)

    @property
    def ler(self) -> float:
        return self.errors / self.shots

    @property
    def ci(self) -> tuple[float, float]:
        return wilson_interval(self.errors, self.shots)


def point_seed(seed: int, family: str, d: int, p: float, basis: str = "X", rounds: int = 0) -> int:
    """Per-point seed: independent of sweep order, thread count and grid contents."""
    key = f"{seed}|{family}|{d}|{p!r}|{basis}|{rounds}".encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "little")


def run_point(family: str, d: int, p: float, shots: int, seed: int, *, decoder: str = "single",
              engine: str = "pymatching", basis: str = "X", rounds: int | None = None,
              variant: str | None = None, threads: int | None = None,
              params: NoiseParams | None = None) -> LerPoint:
    """Generate, add noise, sample, decode and count one point.

    ``seed`` is used as given (see ``point_seed`` for sweep-level derivation).
    """
    t0 = time.perf_counter()
    spec = ExperimentSpec(family=family, distance=d, rounds=rounds, basis=basis, variant=variant).resolved()
    circuit = build_memory_circuit(spec)
    noisy = apply_si1000(circuit, params if params is not None else NoiseParams(p))
    dem = decompose_graphlike(extract_dem(noisy))
    graph = build_matching_graph(dem)
    if decoder == "two-pass":
        dec: Decoder | TwoPassDecoder = TwoPassDecoder(graph, engine)
    elif decoder == "single":
        dec = Decoder(graph, engine)
    else:
        raise ValueError(f"decoder must be one of {DECODER_MODES}")
    sampler = CompiledSampler(noisy)
    errors = 0
    counts = np.zeros(circuit.num_detectors, dtype=np.int64)
    done = 0
    while done < shots:
        n = min(_CHUNK, shots - done)
        batch = sampler.sample(n, seed, threads, first_block=done // BLOCK_SHOTS)
        dets = batch.detector_bits().astype(np.uint8)
        obs = batch.observable_bits().astype(np.uint8)
        counts += dets.sum(axis=0, dtype=np.int64)
        pred = dec.decode_batch(dets)
        errors += int(np.any(pred != obs, axis=1).sum())
        done += n
    fr = counts / shots
    mean = float(counts.sum() / (shots * max(len(counts), 1)))
    return LerPoint(family, d, float(p), shots, errors, spec.rounds, basis, decoder, seed, mean,
                    tuple(float(x) for x in fr), time.perf_counter() - t0)


def run_sweep(config: SweepConfig, progress=None) -> list[LerPoint]:
    """All (family, distance, p) points of ``config``, ordered by that key."""
    cfg = config

    def one(task: tuple[str, int, float]) -> LerPoint:
        fam, d, p = task
        rounds = cfg.rounds_per_d[fam] * d
        seed = point_seed(cfg.seed, fam, d, p, cfg.basis, rounds)
        pt = run_point(fam, d, p, cfg.shots, seed, decoder=cfg.decoder, engine=cfg.engine,
                       basis=cfg.basis, rounds=rounds, threads=cfg.threads)
        if progress is not None:
            progress(pt)
        return pt

    tasks = cfg.tasks()
    if cfg.workers > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as ex:
            points = list(ex.map(one, tasks))
    else:
        points = [one(t) for t in tasks]
    return sorted(points, key=lambda pt: (pt.family, pt.distance, pt.p))


# ------------------------------------------------------------------ config

def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.replace(" ", "").split(",") if x)


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.replace(" ", "").split(",") if x)


def load_config(path: str | None = None, overrides: Mapping[str, object] | None = None) -> SweepConfig:
    """Read a flat ``key = value`` sweep file; ``overrides`` (same keys) win.

    Keys: ``families`` (comma list), ``distances`` (applies to every family),
    ``<family>.distances``, ``p`` (comma list), ``shots``, ``seed``,
    ``decoder``, ``engine``, ``basis``, ``<family>.rounds_per_d``,
    ``threads``, ``workers``, ``out``.
    """
    raw: dict[str, str] = {}
    if path:
        with open(path, encoding="utf-8") as fh:
            for n, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                key, sep, val = line.partition("=")
                if not sep:
                    raise ValueError(f"{path}:{n}: expected key = value")
                raw[key.strip()] = val.strip()
    for k, v in (overrides or {}).items():
        if v is not None:
            raw[k] = v if isinstance(v, str) else ",".join(map(str, v)) if isinstance(v, (list, tuple)) else str(v)
    fams = [f.strip() for f in raw.pop("families", "diamond,standard").split(",") if f.strip()]
    common = _ints(raw.pop("distances", "3,5,7"))
    families = {f: _ints(raw.pop(f"{f}.distances")) if f"{f}.distances" in raw else common for f in fams}
    rpd = {}
    for f in ROUNDS_PER_D:
        key = f"{f}.rounds_per_d"
        if key in raw:
            rpd[f] = int(raw.pop(key))
    cfg = SweepConfig(
        families=families,
        p_grid=_floats(raw.pop("p", "0.001,0.002,0.005,0.01")),
        shots=int(float(raw.pop("shots", "100000"))),
        seed=int(raw.pop("seed", "0")),
        decoder=raw.pop("decoder", "single"),
        engine=raw.pop("engine", "pymatching"),
        basis=raw.pop("basis", "X"),
        rounds_per_d=rpd,
        threads=int(raw.pop("threads")) if "threads" in raw else None,
        workers=int(raw.pop("workers", "1")),
        out_dir=raw.pop("out", None),
    )
    for k in list(raw):
        if k.endswith(".distances"):
            raw.pop(k)
    if raw:
        raise ValueError(f"unknown config keys: {sorted(raw)}")
    return cfg


# --------------------------------------------------------------------- CSV

LER_COLUMNS = ("family", "distance", "rounds", "basis", "p", "shots", "errors", "ler",
               "ci_low", "ci_high", "detection_fraction", "decoder", "seed")


def write_ler_csv(path: str, points: Sequence[LerPoint]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LER_COLUMNS)
        for pt in points:
            lo, hi = pt.ci
            w.writerow([pt.family, pt.distance, pt.rounds, pt.basis, repr(pt.p), pt.shots, pt.errors,
                        repr(pt.ler), repr(lo), repr(hi), repr(pt.detection_fraction), pt.decoder, pt.seed])


def read_ler_csv(path: str) -> list[LerPoint]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return [LerPoint(r["family"], int(r["distance"]), float(r["p"]), int(r["shots"]), int(r["errors"]),
                     int(r["rounds"]), r["basis"], r["decoder"], int(r["seed"]), float(r["detection_fraction"]))
            for r in rows]

