import math
import os

import numpy as np
import pytest
from click.testing import CliRunner

from diamondqec.bench import (
    ASYMPTOTIC_RATIO,
    AnalysisError,
    LerModel,
    LerPoint,
    SweepConfig,
    crossover_analysis,
    distance_ratio,
    emit_outputs,
    estimate_threshold,
    fit_ler_model,
    load_config,
    max_distance,
    point_seed,
    read_ler_csv,
    run_point,
    run_sweep,
    wilson_interval,
    write_ler_csv,
)
from diamondqec.cli import main
from diamondqec.lattice import count_lines

# --------------------------------------------------------------------- stats


def test_wilson_coverage():
    rng = np.random.default_rng(2024)
    rate, n, trials = 0.1, 500, 1000
    hits = 0
    for _ in range(trials):
        k = int(rng.binomial(n, rate))
        lo, hi = wilson_interval(k, n)
        hits += lo <= rate <= hi
    assert 0.93 <= hits / trials <= 0.97


def test_wilson_edges():
    assert wilson_interval(0, 100)[0] == 0.0
    assert wilson_interval(100, 100)[1] == 1.0
    lo, hi = wilson_interval(10, 100)
    assert lo < 0.1 < hi
    for bad in ((1, 0), (5, 3), (-1, 10)):
        with pytest.raises(ValueError):
            wilson_interval(*bad)


# ----------------------------------------------------------------- threshold

def synthetic(family, p0=0.005, ds=(3, 5, 7), grid=(0.003, 0.004, 0.0045, 0.0055, 0.006, 0.007)):
    shots = 10 ** 15
    return [LerPoint(family, d, p, shots, int(round(0.1 * (p / p0) ** d * shots))) for d in ds for p in grid]


def test_synthetic_threshold_is_exact():
    est = estimate_threshold(synthetic("standard"))
    assert est.threshold == pytest.approx(0.005, rel=1e-9)
    assert len(est.crossings) == 2
    assert est.low == pytest.approx(0.005, rel=1e-9) and est.high == pytest.approx(0.005, rel=1e-9)


def test_threshold_order_invariant():
    pts = synthetic("diamond", p0=0.0021, grid=(0.001, 0.0015, 0.002, 0.0025, 0.003))
    a = estimate_threshold(pts)
    rng = np.random.default_rng(0)
    for _ in range(5):
        b = estimate_threshold([pts[i] for i in rng.permutation(len(pts))])
        assert b == a


def test_threshold_errors():
    with pytest.raises(AnalysisError):
        estimate_threshold(synthetic("standard", ds=(3,)))
    with pytest.raises(AnalysisError):
        estimate_threshold(synthetic("standard") + synthetic("diamond"))
    with pytest.raises(AnalysisError):
        estimate_threshold(synthetic("standard", grid=(0.001, 0.002, 0.003)))


def test_fit_recovers_model():
    p_ref = 0.006
    shots = 10 ** 12
    pts = [LerPoint("standard", d, p, shots, int(0.08 * (p / p_ref) ** (0.6 * d) * shots))
           for d in (3, 5, 7) for p in (0.001, 0.002, 0.003, 0.004)]
    m = fit_ler_model(pts, p_ref)
    assert m.a == pytest.approx(math.log(0.08), abs=1e-5)
    assert m.b == pytest.approx(0.6, abs=1e-6)
    assert m.residual < 1e-5 and m.points == 12
    with pytest.raises(AnalysisError):
        fit_ler_model(pts[:1], p_ref)


# ----------------------------------------------------------------- sweeps

def test_p_zero_has_zero_ler():
    pt = run_point("diamond", 3, 0.0, 2000, 1)
    assert pt.errors == 0 and pt.ler == 0.0 and pt.detection_fraction == 0.0
    assert pt.rounds == 12


def test_sub_threshold_orderings():
    p, shots = 3e-3, 20_000
    s3 = run_point("standard", 3, p, shots, point_seed(0, "standard", 3, p))
    s5 = run_point("standard", 5, p, shots, point_seed(0, "standard", 5, p))
    d3 = run_point("diamond", 3, p, shots, point_seed(0, "diamond", 3, p))
    assert s5.ler < s3.ler
    assert d3.ler > s3.ler
    assert d3.detection_fraction > s3.detection_fraction


def test_point_seed_is_stable():
    a = point_seed(7, "diamond", 5, 0.002)
    assert a == point_seed(7, "diamond", 5, 0.002)
    assert a != point_seed(7, "diamond", 5, 0.0021) != point_seed(8, "diamond", 5, 0.002)
    assert 0 <= a < 2 ** 64


@pytest.mark.parametrize("kwargs", [dict(p_grid=(0.002, 0.001)), dict(shots=10), dict(decoder="bp"),
                                    dict(families={"hex": (3,)}), dict(p_grid=())])
def test_sweep_config_validation(kwargs):
    base = dict(families={"standard": (3,)}, p_grid=(0.001,), shots=1000)
    base.update(kwargs)
    with pytest.raises(ValueError):
        SweepConfig(**base)


def test_sweep_csv_is_byte_stable_across_threads(tmp_path):
    base = dict(families={"standard": (3,), "diamond": (3,)}, p_grid=(0.002, 0.004), shots=3000, seed=5)
    a = run_sweep(SweepConfig(**base, threads=1, workers=1))
    b = run_sweep(SweepConfig(**base, threads=4, workers=3))
    pa, pb = tmp_path / "a.csv", tmp_path / "b.csv"
    write_ler_csv(str(pa), a)
    write_ler_csv(str(pb), b)
    assert pa.read_bytes() == pb.read_bytes()
    assert [pt.rounds for pt in a] == [12, 12, 3, 3]


def test_csv_roundtrip(tmp_path):
    pts = [LerPoint("diamond", 5, 0.002, 100_000, 1234, 20, "X", "two-pass", 99, 0.0871234),
           LerPoint("standard", 3, 1e-3, 2000, 0, 3, "Z", "single", 1, 0.0)]
    path = tmp_path / "p.csv"
    write_ler_csv(str(path), pts)
    assert read_ler_csv(str(path)) == pts


def test_config_loader(tmp_path):
    cfg_file = tmp_path / "sweep.cfg"
    cfg_file.write_text("# sweep\nfamilies = diamond, standard\ndistances = 3,5\nstandard.distances = 3\n"
                        "p = 0.001, 0.002\nshots = 2e4\nseed = 4\ndecoder = two-pass\n")
    cfg = load_config(str(cfg_file), {"shots": 5000})
    assert cfg.families == {"diamond": (3, 5), "standard": (3,)}
    assert cfg.p_grid == (0.001, 0.002) and cfg.shots == 5000 and cfg.seed == 4
    assert cfg.decoder == "two-pass" and cfg.rounds_per_d == {"diamond": 4, "standard": 1}
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = blue\n")
    with pytest.raises(ValueError):
        load_config(str(bad))
    bad.write_text("no equals sign\n")
    with pytest.raises(ValueError):
        load_config(str(bad))


# --------------------------------------------------------------- line budget

def line_table(family, dmax=200):
    out = {}
    for d in range(2, dmax + 1):
        vs = [None] if family == "standard" or d % 2 else ["even-A", "even-B"]
        out[d] = min(count_lines(family, d, v).total for v in vs)
    return out


def brute_max_distance(table, budget):
    fits = [d for d, n in table.items() if n <= budget]
    return max(fits) if fits else None


def test_distance_ratio_asymptote():
    ((b, r),) = distance_ratio([1e5])
    assert b == 1e5
    assert abs(r - 1.309) / 1.309 < 0.03
    assert ASYMPTOTIC_RATIO == pytest.approx(1.309, abs=1e-3)


def test_distance_ratio_small_budgets():
    assert distance_ratio([10]) == [(10.0, None)]
    with pytest.raises(AnalysisError):
        distance_ratio([5])
    with pytest.raises(AnalysisError):
        distance_ratio([-1])


def test_distance_ratio_matches_brute_force():
    tables = {f: line_table(f) for f in ("diamond", "standard")}
    # keep both families inside the enumerated range
    budgets = sorted({int(b) for b in np.geomspace(15, tables["diamond"][200], 150)})
    for b, r in distance_ratio(budgets):
        dd, ds = brute_max_distance(tables["diamond"], b), brute_max_distance(tables["standard"], b)
        assert (max_distance("diamond", b), max_distance("standard", b)) == (dd, ds)
        assert r == pytest.approx(dd / ds)


# ----------------------------------------------------------------- crossover

MODELS = {
    "standard": LerModel("standard", math.log(0.1), 0.55, 0.0075),
    "diamond": LerModel("diamond", math.log(0.1), 0.5, 0.0028),
}


def test_crossover_diamond_only_budget():
    curve = crossover_analysis(MODELS, [12], (1e-6, 1e-2))
    (row,) = curve.rows
    assert (row.d_std, row.d_dia, row.status) == (None, 2, "diamond-always")
    assert all(v == 0.0 for v in curve.ratio[0])


def test_crossover_jumps_alternate():
    budgets = list(range(40, 6000, 5))
    curve = crossover_analysis(MODELS, budgets, (1e-12, 1e-2))
    rows = [r for r in curve.rows if r.status == "crossing"]
    assert len(rows) > len(budgets) * 0.9
    ups = downs = 0
    for a, b in zip(rows, rows[1:]):
        if (a.d_std, a.d_dia) == (b.d_std, b.d_dia):
            assert a.crossover_p == b.crossover_p
            continue
        if b.d_dia > a.d_dia and b.d_std == a.d_std:
            assert b.crossover_p > a.crossover_p
            ups += 1
        elif b.d_std > a.d_std and b.d_dia == a.d_dia:
            assert b.crossover_p < a.crossover_p
            downs += 1
    assert ups > 5 and downs > 5
    # at the switch-over rate both fitted models agree
    for r in rows:
        dia = MODELS["diamond"].log_ler(r.d_dia, r.crossover_p)
        std = MODELS["standard"].log_ler(r.d_std, r.crossover_p)
        assert dia == pytest.approx(std, abs=1e-9)


def test_jump_period_follows_line_spacing():
    budgets = np.arange(2000, 400_000, 50)
    ds = np.array([max_distance("standard", b) for b in budgets])
    dd = np.array([max_distance("diamond", b) for b in budgets])
    jumps_s = np.flatnonzero(np.diff(ds))
    jumps_d = np.flatnonzero(np.diff(dd))
    # consecutive jumps are evenly spaced in sqrt(budget): sqrt(6) and sqrt(3.5) per unit of d
    gap_s = np.diff(np.sqrt(budgets[jumps_s]))
    gap_d = np.diff(np.sqrt(budgets[jumps_d]))
    assert np.median(gap_s) == pytest.approx(math.sqrt(6), rel=0.02)
    assert np.median(gap_d) == pytest.approx(math.sqrt(3.5), rel=0.02)
    assert len(jumps_d) / len(jumps_s) == pytest.approx(ASYMPTOTIC_RATIO, rel=0.03)


def test_crossover_unbounded_and_bad_range():
    curve = crossover_analysis(MODELS, [500], (1e-3, 2e-3))
    assert curve.rows[0].status in ("unbounded", "diamond-always")
    with pytest.raises(AnalysisError):
        crossover_analysis(MODELS, [500], (1e-3, 1e-4))


# ------------------------------------------------------------------- outputs

def test_emit_outputs_byte_stable(tmp_path):
    pts = synthetic("standard") + synthetic("diamond", p0=0.002)
    pts = [LerPoint(pt.family, pt.distance, pt.p, 10 ** 6, min(pt.errors // 10 ** 9, 10 ** 6)) for pt in pts]
    a = emit_outputs(pts, "ler", str(tmp_path / "a"))
    b = emit_outputs(list(reversed(pts)), "ler", str(tmp_path / "b"))
    for x, y in zip(a, b):
        assert open(x, "rb").read() == open(y, "rb").read()
    svg = open(a[1], encoding="utf-8").read()
    for fam in ("standard", "diamond"):
        for d in (3, 5, 7):
            assert f"{fam} d={d}" in svg
    assert read_ler_csv(a[0]) == sorted(pts, key=lambda pt: (pt.family, pt.distance, pt.p))


def test_emit_other_kinds(tmp_path):
    curve = crossover_analysis(MODELS, [12, 100, 500, 2000], (1e-8, 1e-2))
    paths = emit_outputs(curve, "crossover", str(tmp_path))
    assert [os.path.basename(p) for p in paths] == ["crossover.csv", "crossover_ratio.csv", "crossover.svg"]
    assert open(paths[0]).read().splitlines()[0] == "budget,d_std,d_dia,crossover_p,status"
    paths = emit_outputs(distance_ratio([10, 100, 1000]), "ratio", str(tmp_path))
    assert open(paths[0]).read().splitlines()[1] == "10.0,"
    (js,) = emit_outputs([estimate_threshold(synthetic("standard"))], "threshold", str(tmp_path))
    assert '"threshold": 0.005' in open(js).read()


def test_emit_rejects_empty(tmp_path):
    with pytest.raises(ValueError):
        emit_outputs([], "ler", str(tmp_path))
    with pytest.raises(ValueError):
        emit_outputs([1], "histogram", str(tmp_path))


# ----------------------------------------------------------------------- CLI

def test_cli_pipeline(tmp_path):
    r = CliRunner()
    circ = tmp_path / "c.stim"
    res = r.invoke(main, ["gen", "--family", "diamond", "-d", "3", "--basis", "Z", "-o", str(circ)])
    assert res.exit_code == 0, res.output
    res = r.invoke(main, ["noise", "--circuit", str(circ), "--p", "0.001", "--census"])
    assert res.exit_code == 0 and "two-qubit-gate" in res.output
    batch = tmp_path / "s.bin"
    res = r.invoke(main, ["sample", "--circuit", str(circ), "--p", "0.003", "--shots", "2000", "--seed", "3",
                          "--out", str(batch)])
    assert res.exit_code == 0, res.output
    dem = tmp_path / "m.dem"
    res = r.invoke(main, ["dem", "--circuit", str(circ), "--p", "0.003", "-o", str(dem)])
    assert res.exit_code == 0 and dem.read_text().startswith("# detectors")
    pred = tmp_path / "pred.txt"
    res = r.invoke(main, ["decode", "--dem", str(dem), "--shots", str(batch), "--two-pass", "-o", str(pred)])
    assert res.exit_code == 0, res.output
    assert len(pred.read_text().split()) == 2000


def test_cli_sweep_and_analysis(tmp_path):
    r = CliRunner()
    out = tmp_path / "sw"
    res = r.invoke(main, ["ler", "--families", "standard", "--distances", "2,3", "--p", "0.004,0.02",
                          "--shots", "1000", "--out", str(out)])
    assert res.exit_code == 0, res.output
    assert (out / "ler.csv").exists() and (out / "ler.svg").exists()
    csv_path = tmp_path / "syn.csv"
    write_ler_csv(str(csv_path), synthetic("standard", p0=0.007, grid=(0.001, 0.002, 0.004, 0.006, 0.008))
                  + synthetic("diamond", p0=0.0025, grid=(0.0005, 0.001, 0.0015, 0.002, 0.003)))
    res = r.invoke(main, ["threshold", "--csv", str(csv_path)])
    assert res.exit_code == 0 and "ratio=2.800" in res.output
    res = r.invoke(main, ["crossover", "--csv", str(csv_path), "--budgets", "20:2000:20", "--out", str(tmp_path)])
    assert res.exit_code == 0, res.output
    res = r.invoke(main, ["ratio", "--budgets", "100000", "--out", str(tmp_path)])
    assert res.exit_code == 0 and "ratio=1.3" in res.output
