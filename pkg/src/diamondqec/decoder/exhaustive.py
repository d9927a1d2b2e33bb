"""Maximum-likelihood decoding by enumerating every mechanism subset."""

from __future__ import annotations

import math

import numpy as np

from ..dem import DetectorErrorModel

__all__ = ["MAX_MECHANISMS", "exhaustive_decode", "observable_class_probabilities"]

MAX_MECHANISMS = 25
_CHUNK_BITS = 14


def observable_class_probabilities(dem: DetectorErrorModel, syndrome) -> dict[int, float]:
    """Total probability of each observable mask among subsets producing ``syndrome``."""
    mechs = dem.mechanisms
    m = len(mechs)
    if m > MAX_MECHANISMS:
        raise ValueError(f"{m} mechanisms exceed the exhaustive limit of {MAX_MECHANISMS}")
    syn = np.asarray(syndrome, dtype=np.uint8).reshape(-1)
    if syn.size != dem.num_detectors:
        raise ValueError("syndrome length does not match the model")
    involved = sorted({d for mech in mechs for d in mech.detectors})
    if syn.any() and not set(np.flatnonzero(syn).tolist()) <= set(involved):
        return {}
    col = {d: i for i, d in enumerate(involved)}
    nd = len(involved)
    if nd + dem.num_observables > 62:
        raise ValueError("too many detectors and observables for the exhaustive decoder")
    target = 0
    for d in np.flatnonzero(syn):
        target |= 1 << col[int(d)]
    masks = []
    for mech in mechs:
        v = 0
        for d in mech.detectors:
            v ^= 1 << col[d]
        for o in mech.observables:
            v ^= 1 << (nd + o)
        masks.append(v)
    logp1 = [math.log(x.probability) if x.probability > 0 else -math.inf for x in mechs]
    logp0 = [math.log1p(-x.probability) for x in mechs]

    lo = min(m, _CHUNK_BITS)
    idx = np.arange(1 << lo, dtype=np.int64)
    sym_lo = np.zeros(1 << lo, dtype=np.int64)
    lp_lo = np.zeros(1 << lo, dtype=np.float64)
    for b in range(lo):
        on = (idx >> b) & 1 == 1
        sym_lo ^= np.where(on, masks[b], 0)
        lp_lo += np.where(on, logp1[b], logp0[b])
    det_mask = (1 << nd) - 1
    out: dict[int, float] = {}
    for hi in range(1 << (m - lo)):
        s_hi = 0
        lp_hi = 0.0
        for b in range(m - lo):
            if hi >> b & 1:
                s_hi ^= masks[lo + b]
                lp_hi += logp1[lo + b]
            else:
                lp_hi += logp0[lo + b]
        sym = sym_lo ^ s_hi
        hit = (sym & det_mask) == target
        if not hit.any():
            continue
        classes = sym[hit] >> nd
        probs = np.exp(lp_lo[hit] + lp_hi)
        for c in np.unique(classes):
            out[int(c)] = out.get(int(c), 0.0) + float(probs[classes == c].sum())
    return out


def exhaustive_decode(dem: DetectorErrorModel, syndrome) -> np.ndarray:
    """Observable bits of the most likely class; ties go to the smaller mask."""
    probs = observable_class_probabilities(dem, syndrome)
    if not probs:
        raise ValueError("syndrome cannot occur under this model")
    best = min(probs, key=lambda c: (-probs[c], c))
    return np.array([(best >> i) & 1 for i in range(dem.num_observables)], dtype=np.uint8)
