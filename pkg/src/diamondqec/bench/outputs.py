"""CSV, JSON and SVG outputs.  Every file is a pure function of its inputs."""

from __future__ import annotations

import csv
import json
import math
import os
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .analysis import ASYMPTOTIC_RATIO, CrossoverCurve, ThresholdEstimate  # noqa: E402
from .sweep import LerPoint, write_ler_csv  # noqa: E402

__all__ = ["emit_outputs", "plot_ler", "plot_crossover", "plot_ratio", "KINDS"]

KINDS = ("ler", "threshold", "crossover", "ratio")
_COLORS = {"diamond": "tab:blue", "standard": "tab:red"}


def _save(fig, path: str) -> None:
    with matplotlib.rc_context({"svg.hashsalt": "diamondqec", "svg.fonttype": "none"}):
        fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_ler(points: Sequence[LerPoint], path: str) -> None:
    """Log-log LER against p, one curve per (family, distance)."""
    fig, ax = plt.subplots(figsize=(6, 4.5))
    keys = sorted({(pt.family, pt.distance) for pt in points})
    ds = sorted({d for _, d in keys})
    for fam, d in keys:
        cur = sorted((pt for pt in points if (pt.family, pt.distance) == (fam, d)), key=lambda q: q.p)
        cur = [pt for pt in cur if pt.errors > 0]
        if not cur:
            continue
        ps = [pt.p for pt in cur]
        ys = [pt.ler for pt in cur]
        lo = [pt.ler - pt.ci[0] for pt in cur]
        hi = [pt.ci[1] - pt.ler for pt in cur]
        shade = 0.35 + 0.65 * (ds.index(d) + 1) / len(ds)
        ax.errorbar(ps, ys, yerr=[lo, hi], marker="o" if fam == "diamond" else "s", ms=3,
                    color=_COLORS.get(fam, "k"), alpha=shade, label=f"{fam} d={d}")
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("physical error rate p (SI1000)")
    ax.set_ylabel("logical error rate per block")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(fontsize=7)
    fig.tight_layout()
    _save(fig, path)


def plot_crossover(curve: CrossoverCurve, path: str) -> None:
    """Distances against budget (top) and the switch-over rate with the LER ratio field (bottom)."""
    import numpy as np

    budgets = [r.budget for r in curve.rows]
    fig, (top, bot) = plt.subplots(2, 1, figsize=(6, 6), sharex=True)
    top.step(budgets, [r.d_dia or 0 for r in curve.rows], where="post", color=_COLORS["diamond"], label="diamond")
    top.step(budgets, [r.d_std or 0 for r in curve.rows], where="post", color=_COLORS["standard"], label="standard")
    top.set_ylabel("distance")
    top.legend(fontsize=7)
    field = np.array(curve.ratio, dtype=float).T
    with np.errstate(divide="ignore", invalid="ignore"):
        logr = np.log10(field)
    logr = np.clip(np.nan_to_num(logr, nan=0.0, posinf=3.0, neginf=-3.0), -3, 3)
    if len(budgets) > 1:
        bot.pcolormesh(budgets, curve.p_grid, logr, cmap="RdBu_r", vmin=-3, vmax=3, shading="nearest")
    xs = [r.budget for r in curve.rows if r.crossover_p is not None]
    ys = [r.crossover_p for r in curve.rows if r.crossover_p is not None]
    bot.step(xs, ys, where="post", color="grey", lw=2)
    bot.set_yscale("log")
    bot.set_ylim(*curve.p_range)
    bot.set_xlabel("control lines")
    bot.set_ylabel("p")
    fig.tight_layout()
    _save(fig, path)


def plot_ratio(rows: Sequence[tuple[float, float | None]], path: str) -> None:
    fig, ax = plt.subplots(figsize=(6, 3.5))
    xs = [b for b, r in rows if r is not None]
    ys = [r for _, r in rows if r is not None]
    ax.plot(xs, ys, ".", ms=3, color="k")
    ax.axhline(ASYMPTOTIC_RATIO, color="grey", ls="--", lw=1)
    ax.set_xscale("log")
    ax.set_xlabel("control lines")
    ax.set_ylabel("d_diamond / d_standard")
    fig.tight_layout()
    _save(fig, path)


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return "nan" if math.isnan(x) else repr(x)
    return str(x)


def emit_outputs(results, kind: str, out_dir: str, stem: str | None = None) -> list[str]:
    """Write ``<stem>.csv`` (or ``.json``) and an SVG for ``results``; returns the paths."""
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}")
    if results is None or (isinstance(results, (list, tuple)) and not results):
        raise ValueError("nothing to write")
    if isinstance(results, CrossoverCurve) and not results.rows:
        raise ValueError("nothing to write")
    os.makedirs(out_dir, exist_ok=True)
    stem = stem or kind
    base = os.path.join(out_dir, stem)
    if kind == "ler":
        pts = sorted(results, key=lambda pt: (pt.family, pt.distance, pt.p))
        write_ler_csv(base + ".csv", pts)
        plot_ler(pts, base + ".svg")
        return [base + ".csv", base + ".svg"]
    if kind == "threshold":
        est: Sequence[ThresholdEstimate] = results
        doc = [{"family": e.family, "threshold": e.threshold, "low": e.low, "high": e.high,
                "crossings": [list(c) for c in e.crossings]} for e in est]
        with open(base + ".json", "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=1, sort_keys=True)
            fh.write("\n")
        return [base + ".json"]
    if kind == "crossover":
        curve: CrossoverCurve = results
        with open(base + ".csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["budget", "d_std", "d_dia", "crossover_p", "status"])
            for r in curve.rows:
                w.writerow([_fmt(r.budget), _fmt(r.d_std), _fmt(r.d_dia), _fmt(r.crossover_p), r.status])
        with open(base + "_ratio.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["budget", "p", "ler_ratio"])
            for r, row in zip(curve.rows, curve.ratio):
                for p, v in zip(curve.p_grid, row):
                    w.writerow([_fmt(r.budget), _fmt(p), _fmt(v)])
        plot_crossover(curve, base + ".svg")
        return [base + ".csv", base + "_ratio.csv", base + ".svg"]
    rows = list(results)
    with open(base + ".csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["budget", "ratio"])
        for b, r in rows:
            w.writerow([_fmt(b), _fmt(r)])
    plot_ratio(rows, base + ".svg")
    return [base + ".csv", base + ".svg"]
