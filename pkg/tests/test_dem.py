import random

import networkx as nx
import numpy as np
import pytest

from diamondqec.circuit import parse_stim_text
from diamondqec.dem import (
    DemError,
    DetectorErrorModel,
    ErrorMechanism,
    decompose_graphlike,
    dem_from_text,
    dem_to_text,
    depolarize_independent,
    extract_dem,
    shortest_graphlike_error,
    xor_prob,
)
from diamondqec.generate import ExperimentSpec, build_memory_circuit
from diamondqec.noise import Channel, NoisyCircuit, apply_si1000, noisy_to_text
from diamondqec.sim import sample


def xor_parts(m):
    dets, obs = set(), set()
    for d, o in m.parts():
        dets ^= set(d)
        obs ^= set(o)
    return tuple(sorted(dets)), tuple(sorted(obs))


def noisy(family, d, basis="X", p=2e-3, rounds=None):
    return apply_si1000(build_memory_circuit(ExperimentSpec(family, d, rounds, basis)), p)


def test_xor_prob():
    assert xor_prob(0.1, 0.1) == pytest.approx(2 * 0.1 * 0.9)
    assert xor_prob(0.0, 0.3) == pytest.approx(0.3)
    assert xor_prob(0.5, 0.2) == pytest.approx(0.5)


@pytest.mark.parametrize("p, k", [(1e-3, 3), (0.05, 3), (1e-3, 15), (0.2, 15)])
def test_depolarize_independent_reproduces_marginals(p, k):
    q = depolarize_independent(p, k)
    dist = np.zeros(k + 1)
    # every non-identity Pauli as an independent flip with probability q; Paulis compose by XOR
    state = {0: 1.0}
    for e in range(1, k + 1):
        nxt = {}
        for s, ps in state.items():
            nxt[s] = nxt.get(s, 0.0) + ps * (1 - q)
            nxt[s ^ e] = nxt.get(s ^ e, 0.0) + ps * q
        state = nxt
    for s, ps in state.items():
        dist[s] = ps
    assert dist[1:] == pytest.approx(np.full(k, p / k), rel=1e-9)
    assert depolarize_independent(0.0, 3) == 0.0


def test_equal_symptoms_merge():
    base = parse_stim_text("QUBIT_COORDS(0, 0) 0\nR 0\nTICK\nM 0\nDETECTOR rec[-1]")
    nc = NoisyCircuit(base, (Channel(0, "X_ERROR", (0,), 0.01, "reset-flip"),
                             Channel(0, "X_ERROR", (0,), 0.01, "idle")))
    (m,) = extract_dem(nc).mechanisms
    assert m.detectors == (0,) and m.probability == pytest.approx(2 * 0.01 * 0.99)


def test_zero_noise_is_empty():
    dem = extract_dem(noisy("diamond", 3, p=0.0))
    assert len(dem) == 0 and dem.num_detectors > 0


def test_nondeterministic_detector_rejected():
    base = parse_stim_text("QUBIT_COORDS(0, 0) 0\nRX 0\nTICK\nM 0\nDETECTOR rec[-1]")
    with pytest.raises(DemError):
        extract_dem(NoisyCircuit(base, (Channel(0, "Z_ERROR", (0,), 0.01, "reset-flip"),)))


@pytest.mark.parametrize("family, d, basis", [("diamond", 3, "X"), ("diamond", 4, "Z"), ("standard", 3, "Z")])
def test_matches_stim_error_model(family, d, basis):
    stim = pytest.importorskip("stim")
    nc = noisy(family, d, basis)
    ours = {(m.detectors, m.observables): m.probability for m in extract_dem(nc).mechanisms}
    ref: dict = {}
    for ins in stim.Circuit(noisy_to_text(nc)).detector_error_model(decompose_errors=False).flattened():
        if ins.type != "error":
            continue
        t = ins.targets_copy()
        key = (tuple(sorted(x.val for x in t if x.is_relative_detector_id())),
               tuple(sorted(x.val for x in t if x.is_logical_observable_id())))
        p = ins.args_copy()[0]
        ref[key] = p if key not in ref else xor_prob(ref[key], p)
    assert set(ours) == set(ref)
    for k, p in ref.items():
        assert ours[k] == pytest.approx(p, rel=1e-9)


def test_channel_order_does_not_matter():
    nc = noisy("diamond", 3, "Z")
    chans = list(nc.channels)
    random.Random(3).shuffle(chans)
    a = extract_dem(nc)
    b = extract_dem(NoisyCircuit(nc.base, tuple(sorted(chans, key=lambda c: c.position)), nc.params))
    assert [m.symptom for m in a.mechanisms] == [m.symptom for m in b.mechanisms]
    for x, y in zip(a.mechanisms, b.mechanisms):
        assert x.probability == pytest.approx(y.probability, rel=1e-12)


def test_mid_circuit_data_flip_d5():
    c = build_memory_circuit(ExperimentSpec("diamond", 5, 20, "Z"))
    ins = c.instructions
    # empty layers sit between rounds: put an X flip on every data qubit there
    slots = [i for i in range(len(ins) - 1) if ins[i].kind == "TICK" and ins[i + 1].kind == "TICK"]
    pos = slots[len(slots) // 2]
    bases = None
    data = [q.index for q in c.qubits if q.coord[0] % 2 == 1]
    for q in data:
        nc = NoisyCircuit(c, (Channel(pos, "X_ERROR", (q,), 0.01, "idle"),))
        dem = extract_dem(nc)
        bases = dem.detector_basis
        (m,) = dem.mechanisms
        assert 1 <= len(m.detectors) <= 2
        assert all(bases[k] == "Z" for k in m.detectors)
        # the sampler agrees when the flip is certain
        sure = NoisyCircuit(c, (Channel(pos, "X_ERROR", (q,), 1.0, "idle"),))
        assert tuple(np.flatnonzero(sample(sure, 1, 0).detector_bits()[0])) == m.detectors


def test_sampled_mechanisms_propagate_d5():
    c = build_memory_circuit(ExperimentSpec("diamond", 5, 8, "X"))
    nc = apply_si1000(c, 1e-3)
    rng = random.Random(8)
    chans = [ch for ch in nc.channels if ch.kind != "FLIP"]
    for ch in rng.sample(chans, 40):
        q = rng.choice(ch.targets)
        kind = rng.choice(["X_ERROR", "Z_ERROR"])
        one = Channel(ch.position, kind, (q,), 0.01, ch.site)
        mech = extract_dem(NoisyCircuit(c, (one,))).mechanisms
        want = (mech[0].detectors, mech[0].observables) if mech else ((), ())
        sure = NoisyCircuit(c, (Channel(ch.position, kind, (q,), 1.0, ch.site),))
        b = sample(sure, 1, 0)
        got = (tuple(np.flatnonzero(b.detector_bits()[0])), tuple(np.flatnonzero(b.observable_bits()[0])))
        assert got == want


# ----------------------------------------------------------- decomposition

@pytest.mark.parametrize("basis", ["X", "Z"])
def test_diamond_d3_decomposes_completely(basis):
    dem = decompose_graphlike(extract_dem(noisy("diamond", 3, basis)))
    assert dem.graphlike
    split = 0
    for m in dem.mechanisms:
        assert all(len(d) <= 2 for d, _ in m.parts())
        assert xor_parts(m) == m.symptom
        split += bool(m.components)
    assert split > 0


def test_y_type_split_links_two_bases():
    dem = decompose_graphlike(extract_dem(noisy("diamond", 3, "X")))
    basis = dem.detector_basis
    mixed = [m for m in dem.mechanisms if m.components and {basis[k] for k in m.detectors} == {"X", "Z"}]
    assert mixed
    for m in mixed:
        assert len(m.components) >= 2
        for dets, _ in m.components:
            assert len({basis[k] for k in dets}) == 1
        assert xor_parts(m) == m.symptom


def test_decompose_is_idempotent_on_graphlike():
    dem = extract_dem(noisy("standard", 3, "Z"))
    ms = [m for m in dem.mechanisms if len(m.detectors) <= 2]
    g = DetectorErrorModel(tuple(ms), dem.num_detectors, dem.num_observables, False, dem.detector_basis,
                           dem.detector_coords)
    once = decompose_graphlike(g)
    assert once.mechanisms == g.mechanisms and once.graphlike
    assert decompose_graphlike(once) == once


def test_undecomposable_is_reported():
    dem = DetectorErrorModel((ErrorMechanism(0.01, (0, 1, 2)),), 3, 0, False, ("Z", "Z", "Z"))
    with pytest.raises(DemError, match="D\\[0, 1, 2\\]"):
        decompose_graphlike(dem)
    loose = decompose_graphlike(dem, strict=False)
    assert not loose.graphlike


def test_text_roundtrip():
    dem = decompose_graphlike(extract_dem(noisy("diamond", 3, "Z")))
    text = dem_to_text(dem)
    assert text.splitlines()[1].startswith("error(")
    back = dem_from_text(text)
    assert back == dem
    assert dem_to_text(back) == text


def test_text_rejects_unknown_lines():
    with pytest.raises(DemError):
        dem_from_text("shift_detectors 1\n")


# ------------------------------------------------------------------ distance

def odd_cycle_length(dem, observable=0):
    """Second route: shortest closed walk with odd observable parity, over every start node."""
    g = nx.Graph()
    bnode = dem.num_detectors
    for m in dem.mechanisms:
        for dets, obs in m.parts():
            a = dets[0] if dets else bnode
            b = dets[1] if len(dets) == 2 else bnode
            f = int(observable in obs)
            for par in (0, 1):
                g.add_edge((a, par), (b, par ^ f))
    best = None
    for v in {n for n, _ in g.nodes}:
        if (v, 0) in g and (v, 1) in g and nx.has_path(g, (v, 0), (v, 1)):
            length = nx.shortest_path_length(g, (v, 0), (v, 1))
            best = length if best is None else min(best, length)
    return best


@pytest.mark.parametrize("family", ["diamond", "standard"])
@pytest.mark.parametrize("d", [3, 5])
@pytest.mark.parametrize("basis", ["X", "Z"])
def test_circuit_distance_equals_d(family, d, basis):
    dem = decompose_graphlike(extract_dem(noisy(family, d, basis)))
    path = shortest_graphlike_error(dem)
    assert len(path) == d
    dets, obs = set(), set()
    for ds, os_ in path:
        dets ^= set(ds)
        obs ^= set(os_)
    assert not dets and 0 in obs
    assert odd_cycle_length(dem) == d
