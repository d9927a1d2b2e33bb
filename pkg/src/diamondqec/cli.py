"""Command-line interface.

``DIAMONDQEC_THREADS`` sets the default sampler thread count.
"""

from __future__ import annotations

import json
import sys

import click
import numpy as np

from . import __version__
from .circuit import Circuit, parse_crumble, parse_stim_text, serialize
from .dem import decompose_graphlike, dem_from_text, dem_to_text, extract_dem
from .generate import ExperimentSpec, build_memory_circuit
from .noise import NoiseParams, apply_si1000, channel_census, load_factors, noisy_to_text


def _read_circuit(path: str) -> Circuit:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    stripped = text.lstrip()
    if path.endswith(".crumble") or stripped.startswith(("#circuit=", "circuit=", "Q(")):
        return parse_crumble(text)
    return parse_stim_text(text)


def _noisy(circuit_path: str, p: float, factors: str | None):
    params = NoiseParams(p, load_factors(factors) if factors else {})
    return apply_si1000(_read_circuit(circuit_path), params)


def _write(out: str | None, text: str) -> None:
    if out in (None, "-"):
        click.echo(text, nl=False)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _budgets(spec: str) -> list[float]:
    """``a:b:step`` (inclusive) or a comma list."""
    if ":" in spec:
        a, b, step = (float(x) for x in spec.split(":"))
        n = int(round((b - a) / step))
        return [a + k * step for k in range(n + 1)]
    return [float(x) for x in spec.split(",") if x]


@click.group()
@click.version_option(__version__)
def main() -> None:
    """Diamond and standard surface-code memory benchmarks."""


@main.command()
@click.option("--family", type=click.Choice(["diamond", "standard"]), default="diamond")
@click.option("--distance", "-d", type=int, default=5)
@click.option("--rounds", type=int, default=None, help="Default: 4d (diamond) or d (standard).")
@click.option("--basis", type=click.Choice(["X", "Z"]), default="X")
@click.option("--variant", default=None, help="odd, even-A or even-B.")
@click.option("--format", "fmt", type=click.Choice(["stim-text", "crumble"]), default="stim-text")
@click.option("--out", "-o", default=None)
def gen(family, distance, rounds, basis, variant, fmt, out):
    """Generate a noiseless memory-experiment circuit."""
    c = build_memory_circuit(ExperimentSpec(family, distance, rounds, basis, variant))
    text = serialize(c, fmt)
    _write(out, text if text.endswith("\n") else text + "\n")


@main.command()
@click.option("--circuit", "circuit_path", required=True)
@click.option("--p", type=float, required=True)
@click.option("--factors", default=None, help="key = value file overriding SI1000 factors.")
@click.option("--census", is_flag=True, help="Print channel counts instead of the circuit.")
@click.option("--out", "-o", default=None)
def noise(circuit_path, p, factors, census, out):
    """Add SI1000 noise; writes Stim-compatible text."""
    noisy = _noisy(circuit_path, p, factors)
    if census:
        _write(out, json.dumps(channel_census(noisy), indent=1) + "\n")
    else:
        _write(out, noisy_to_text(noisy))


@main.command()
@click.option("--circuit", "circuit_path", required=True)
@click.option("--p", type=float, required=True)
@click.option("--factors", default=None)
@click.option("--shots", type=int, required=True)
@click.option("--seed", type=int, default=0)
@click.option("--threads", type=int, default=None)
@click.option("--out", "-o", required=True, help="Binary sample file.")
def sample(circuit_path, p, factors, shots, seed, threads, out):
    """Sample detector and observable bits."""
    from .sim import CompiledSampler, detection_fraction, write_batch

    batch = CompiledSampler(_noisy(circuit_path, p, factors)).sample(shots, seed, threads)
    write_batch(out, batch)
    _, mean = detection_fraction(batch)
    click.echo(f"shots={shots} detectors={batch.num_detectors} detection_fraction={mean:.6g}", err=True)


@main.command()
@click.option("--circuit", "circuit_path", required=True)
@click.option("--p", type=float, required=True)
@click.option("--factors", default=None)
@click.option("--decompose/--no-decompose", default=True)
@click.option("--out", "-o", default=None)
def dem(circuit_path, p, factors, decompose, out):
    """Extract the detector error model."""
    model = extract_dem(_noisy(circuit_path, p, factors))
    if decompose:
        model = decompose_graphlike(model)
    _write(out, dem_to_text(model))


@main.command()
@click.option("--dem", "dem_path", required=True)
@click.option("--shots", "shots_path", required=True, help="Sample file written by 'sample'.")
@click.option("--two-pass", is_flag=True)
@click.option("--engine", type=click.Choice(["pymatching", "blossom"]), default="pymatching")
@click.option("--out", "-o", required=True, help="Predictions: one row of observable bits per shot.")
def decode(dem_path, shots_path, two_pass, engine, out):
    """Decode sampled shots against a graphlike model."""
    from .decoder import Decoder, TwoPassDecoder, build_matching_graph
    from .sim import read_batch

    with open(dem_path, encoding="utf-8") as fh:
        model = dem_from_text(fh.read())
    graph = build_matching_graph(model)
    dec = TwoPassDecoder(graph, engine) if two_pass else Decoder(graph, engine)
    batch = read_batch(shots_path)
    pred = dec.decode_batch(batch.detector_bits().astype(np.uint8))
    with open(out, "w", encoding="utf-8") as fh:
        for row in pred:
            fh.write("".join(str(int(b)) for b in row) + "\n")
    errors = int(np.any(pred != batch.observable_bits(), axis=1).sum())
    click.echo(f"shots={batch.shots} errors={errors} ler={errors / batch.shots:.6g}", err=True)


@main.command()
@click.option("--config", "config_path", default=None, help="Flat key = value sweep file.")
@click.option("--families", default=None)
@click.option("--distances", default=None)
@click.option("--p", "p_grid", default=None, help="Comma list, ascending.")
@click.option("--shots", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--decoder", type=click.Choice(["single", "two-pass"]), default=None)
@click.option("--threads", type=int, default=None)
@click.option("--workers", type=int, default=None)
@click.option("--out", "out_dir", default=None)
def ler(config_path, families, distances, p_grid, shots, seed, decoder, threads, workers, out_dir):
    """Run a logical-error-rate sweep; writes ler.csv and ler.svg."""
    from .bench import emit_outputs, load_config, run_sweep

    cfg = load_config(config_path, {"families": families, "distances": distances, "p": p_grid,
                                    "shots": shots, "seed": seed, "decoder": decoder,
                                    "threads": threads, "workers": workers, "out": out_dir})

    def report(pt):
        click.echo(f"{pt.family} d={pt.distance} p={pt.p:g} errors={pt.errors}/{pt.shots} "
                   f"ler={pt.ler:.4g} det={pt.detection_fraction:.4f} ({pt.seconds:.1f}s)", err=True)

    points = run_sweep(cfg, progress=report)
    for path in emit_outputs(points, "ler", cfg.out_dir or "."):
        click.echo(path)


@main.command()
@click.option("--csv", "csv_path", required=True)
@click.option("--out", "out_dir", default=None)
def threshold(csv_path, out_dir):
    """Estimate each family's threshold from a sweep CSV."""
    from .bench import AnalysisError, emit_outputs, estimate_threshold, read_ler_csv

    pts = read_ler_csv(csv_path)
    ests = []
    for fam in sorted({pt.family for pt in pts}):
        try:
            e = estimate_threshold([pt for pt in pts if pt.family == fam])
        except AnalysisError as exc:
            click.echo(f"{fam}: {exc}", err=True)
            continue
        ests.append(e)
        click.echo(f"{fam}: threshold={e.threshold:.4g} range=[{e.low:.4g}, {e.high:.4g}]")
    if len(ests) == 2:
        by = {e.family: e.threshold for e in ests}
        click.echo(f"standard/diamond ratio={by['standard'] / by['diamond']:.3f}")
    if out_dir and ests:
        emit_outputs(ests, "threshold", out_dir)


@main.command()
@click.option("--csv", "csv_path", required=True)
@click.option("--budgets", default="20:3000:10", help="a:b:step or comma list.")
@click.option("--p-min", type=float, default=1e-5)
@click.option("--p-max", type=float, default=None, help="Default: the lower fitted threshold.")
@click.option("--out", "out_dir", default=".")
def crossover(csv_path, budgets, p_min, p_max, out_dir):
    """Fit per-family LER models and find where the diamond layout wins per line budget."""
    from .bench import crossover_analysis, emit_outputs, estimate_threshold, fit_ler_model, read_ler_csv

    pts = read_ler_csv(csv_path)
    models = {}
    for fam in ("diamond", "standard"):
        fam_pts = [pt for pt in pts if pt.family == fam]
        th = estimate_threshold(fam_pts).threshold
        models[fam] = fit_ler_model(fam_pts, th)
        m = models[fam]
        click.echo(f"{fam}: a={m.a:.4f} b={m.b:.4f} p_ref={m.p_ref:.4g} rms={m.residual:.3f} n={m.points}")
    hi = p_max or min(m.p_ref for m in models.values())
    curve = crossover_analysis(models, _budgets(budgets), (p_min, hi))
    for path in emit_outputs(curve, "crossover", out_dir):
        click.echo(path)


@main.command()
@click.option("--budgets", default="10:100000:10", help="a:b:step or comma list.")
@click.option("--out", "out_dir", default=".")
def ratio(budgets, out_dir):
    """Ratio of achievable distances (diamond over standard) per line budget."""
    from .bench import distance_ratio, emit_outputs

    bs = [b for b in _budgets(budgets) if b >= 9]
    rows = distance_ratio(bs)
    last = rows[-1]
    click.echo(f"budget={last[0]:g} ratio={last[1]}")
    for path in emit_outputs(rows, "ratio", out_dir):
        click.echo(path)


@main.command()
@click.option("--csv", "csv_path", required=True)
@click.option("--out", "-o", required=True, help="SVG path.")
def plot(csv_path, out):
    """Plot LER curves from a sweep CSV."""
    from .bench import read_ler_csv
    from .bench.outputs import plot_ler

    plot_ler(read_ler_csv(csv_path), out)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
