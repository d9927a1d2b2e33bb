"""Thresholds, LER models, line-budget crossovers and distance ratios."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np

from ..lattice import count_lines
from .sweep import LerPoint

__all__ = [
    "AnalysisError",
    "ThresholdEstimate",
    "LerModel",
    "CrossoverRow",
    "CrossoverCurve",
    "estimate_threshold",
    "fit_ler_model",
    "crossover_analysis",
    "distance_ratio",
    "max_distance",
    "lines",
    "ASYMPTOTIC_RATIO",
]

ASYMPTOTIC_RATIO = math.sqrt(6 / 3.5)
_DMAX = 2000


class AnalysisError(ValueError):
    pass


# --------------------------------------------------------------- threshold

@dataclass(frozen=True)
class ThresholdEstimate:
    family: str
    threshold: float
    low: float
    high: float
    crossings: tuple[tuple[int, int, float], ...]


def _pair_crossings(a: dict[float, float], b: dict[float, float]) -> list[float]:
    """Crossings of two log-log piecewise-linear curves (``a`` the smaller distance)."""
    ps = sorted(set(a) & set(b))
    xs = [math.log(p) for p in ps]
    fs = [math.log(a[p]) - math.log(b[p]) for p in ps]
    out = []
    for i in range(len(ps)):
        if fs[i] == 0 and (i == 0 or fs[i - 1] > 0):
            out.append(xs[i])
        if i + 1 < len(ps) and fs[i] > 0 > fs[i + 1]:
            out.append(xs[i] + fs[i] * (xs[i + 1] - xs[i]) / (fs[i] - fs[i + 1]))
    return out


def estimate_threshold(points: Iterable[LerPoint], min_errors: int = 1) -> ThresholdEstimate:
    """Median crossing over consecutive-distance pairs.

    Each pair's curves are compared on their shared p values with at least
    ``min_errors`` errors on both; the smaller distance must go from above
    (small p) to below (large p) the larger one.  A pair with several such
    sign changes contributes their median.
    """
    pts = list(points)
    fams = {pt.family for pt in pts}
    if len(fams) != 1:
        raise AnalysisError("threshold estimation needs points from exactly one family")
    curves: dict[int, dict[float, float]] = {}
    for pt in sorted(pts, key=lambda q: (q.distance, q.p)):
        if pt.errors >= max(min_errors, 1):
            curves.setdefault(pt.distance, {})[pt.p] = pt.ler
    ds = sorted({pt.distance for pt in pts})
    if len(ds) < 2:
        raise AnalysisError("need at least two distances")
    crossings = []
    for d1, d2 in zip(ds, ds[1:]):
        xs = _pair_crossings(curves.get(d1, {}), curves.get(d2, {}))
        if xs:
            crossings.append((d1, d2, math.exp(float(np.median(xs)))))
    if not crossings:
        raise AnalysisError("no crossing in the sampled range")
    logs = [math.log(c[2]) for c in crossings]
    return ThresholdEstimate(fams.pop(), math.exp(float(np.median(logs))),
                             min(c[2] for c in crossings), max(c[2] for c in crossings), tuple(crossings))


# ---------------------------------------------------------------- LER model

@dataclass(frozen=True)
class LerModel:
    """``log LER = a + b * d * log(p / p_ref)``."""

    family: str
    a: float
    b: float
    p_ref: float
    residual: float = 0.0
    points: int = 0

    def log_ler(self, d: int, p):
        return self.a + self.b * d * np.log(np.asarray(p, dtype=float) / self.p_ref)

    def ler(self, d: int, p):
        return np.exp(self.log_ler(d, p))


def fit_ler_model(points: Iterable[LerPoint], p_ref: float, min_errors: int = 10) -> LerModel:
    """Weighted least squares over sub-``p_ref`` points with at least ``min_errors`` errors.

    Weights are ``sqrt(errors)``, the inverse standard error of ``log LER``.
    """
    pts = [pt for pt in points if pt.p < p_ref and pt.errors >= min_errors]
    fams = {pt.family for pt in pts}
    if len(fams) > 1:
        raise AnalysisError("fit one family at a time")
    if len(pts) < 2 or len({pt.distance * math.log(pt.p / p_ref) for pt in pts}) < 2:
        raise AnalysisError("not enough usable points below the reference rate")
    x = np.array([pt.distance * math.log(pt.p / p_ref) for pt in pts])
    y = np.array([math.log(pt.ler) for pt in pts])
    w = np.sqrt([pt.errors for pt in pts])
    A = np.stack([np.ones_like(x), x], axis=1)
    coef, *_ = np.linalg.lstsq(A * w[:, None], y * w, rcond=None)
    res = y - A @ coef
    rms = float(np.sqrt(np.mean(res ** 2)))
    return LerModel(fams.pop(), float(coef[0]), float(coef[1]), float(p_ref), rms, len(pts))


# -------------------------------------------------------------- line budget

@lru_cache(maxsize=None)
def lines(family: str, d: int) -> int:
    """Fewest control lines of a distance-``d`` layout (over the even variants for the diamond)."""
    if family == "diamond" and d % 2 == 0:
        return min(count_lines(family, d, v).total for v in ("even-A", "even-B"))
    return count_lines(family, d).total


def max_distance(family: str, budget: float) -> int | None:
    """Largest ``d >= 2`` whose layout fits in ``budget`` lines, or ``None``."""
    best = None
    for d in range(2, _DMAX):
        if lines(family, d) <= budget:
            best = d
        elif d > 3 and lines(family, d - 1) > budget:
            break
    return best


def distance_ratio(budgets: Iterable[float]) -> list[tuple[float, float | None]]:
    """``(budget, d_dia / d_std)``; ``None`` when no standard layout fits."""
    out = []
    for b in budgets:
        if b <= 0:
            raise AnalysisError("budgets must be positive")
        dd = max_distance("diamond", b)
        ds = max_distance("standard", b)
        if dd is None and ds is None:
            raise AnalysisError(f"budget {b} is below both minimal layouts")
        out.append((float(b), dd / ds if dd is not None and ds is not None else None))
    return out


# ----------------------------------------------------------------- crossover

@dataclass(frozen=True)
class CrossoverRow:
    """One budget of a crossover curve.

    ``status`` is ``crossing`` (diamond wins below ``crossover_p``),
    ``crossing-above`` (diamond wins above it), ``diamond-always`` (no standard
    layout fits, or the diamond wins over the whole modeled range;
    ``crossover_p`` is then the top of the range), ``standard-always`` (no
    diamond layout fits), ``unbounded`` (no switch-over inside the modeled
    range) or ``no-layout``.
    """

    budget: float
    d_std: int | None
    d_dia: int | None
    crossover_p: float | None
    status: str


@dataclass(frozen=True)
class CrossoverCurve:
    rows: tuple[CrossoverRow, ...]
    p_grid: tuple[float, ...]
    ratio: tuple[tuple[float, ...], ...]
    p_range: tuple[float, float]


def crossover_analysis(models: Mapping[str, LerModel], budgets: Sequence[float],
                       p_range: tuple[float, float] = (1e-5, 1e-2),
                       p_grid: Sequence[float] | None = None) -> CrossoverCurve:
    """Per budget: best distance per family and the p below which the diamond layout wins."""
    dia, std = models["diamond"], models["standard"]
    lo, hi = p_range
    if not 0 < lo < hi:
        raise AnalysisError("bad p range")
    grid = tuple(p_grid) if p_grid is not None else tuple(np.geomspace(lo, hi, 41).tolist())
    rows = []
    ratio = []
    for b in budgets:
        dd = max_distance("diamond", b)
        ds = max_distance("standard", b)
        if dd is None and ds is None:
            rows.append(CrossoverRow(float(b), None, None, None, "no-layout"))
            ratio.append(tuple(math.nan for _ in grid))
            continue
        if ds is None:
            rows.append(CrossoverRow(float(b), None, dd, hi, "diamond-always"))
            ratio.append(tuple(0.0 for _ in grid))
            continue
        if dd is None:
            rows.append(CrossoverRow(float(b), ds, None, None, "standard-always"))
            ratio.append(tuple(math.inf for _ in grid))
            continue
        # log LER_dia - log LER_std = c0 + c1 * log p
        c1 = dia.b * dd - std.b * ds
        c0 = (dia.a - dia.b * dd * math.log(dia.p_ref)) - (std.a - std.b * ds * math.log(std.p_ref))
        ratio.append(tuple(float(np.exp(c0 + c1 * math.log(p))) for p in grid))
        if c1 == 0:
            status = "diamond-always" if c0 < 0 else "standard-always"
            rows.append(CrossoverRow(float(b), ds, dd, hi if c0 < 0 else None, status))
            continue
        p_star = math.exp(-c0 / c1)
        if lo <= p_star <= hi:
            rows.append(CrossoverRow(float(b), ds, dd, p_star, "crossing" if c1 > 0 else "crossing-above"))
        elif (c0 + c1 * math.log(hi)) < 0 and (c0 + c1 * math.log(lo)) < 0:
            rows.append(CrossoverRow(float(b), ds, dd, hi, "diamond-always"))
        else:
            rows.append(CrossoverRow(float(b), ds, dd, None, "unbounded"))
    return CrossoverCurve(tuple(rows), grid, tuple(ratio), (float(lo), float(hi)))
