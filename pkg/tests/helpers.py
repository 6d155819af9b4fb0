"""Shared test fixtures: canned models, a seeded random-model generator, and a
brute-force resonance oracle written independently of the library internals.

The oracle does its own arithmetic over pairs (a, b) meaning a + b*pi with
Fraction components, transcribing the assembly lambda_alpha + delta directly
from raw element data: nested loops over elements, selection masks, bundle
indices and alpha boxes.  No ElementContext, no merge machinery.
"""

from __future__ import annotations

import math
import random
from collections import Counter
from fractions import Fraction
from itertools import combinations, product

from ruelle_lab import modelfile
from ruelle_lab.model import FlowModel

# ---------------------------------------------------------------------------
# pi-pair arithmetic (independent of ruelle_lab.exactnum)

ZERO = (Fraction(0), Fraction(0))


def padd(x, y):
    return (x[0] + y[0], x[1] + y[1])


def pneg(x):
    return (-x[0], -x[1])


def pscale(x, q):
    return (x[0] * q, x[1] * q)


def pfloat(x):
    return float(x[0]) + float(x[1]) * math.pi


def two_pi_over(period):
    """2*pi/P for P = (a, b) with exactly one nonzero component."""
    a, b = period
    if b == 0:
        return (Fraction(0), 2 / a)
    if a == 0:
        return (Fraction(2) / b, Fraction(0))
    raise ValueError("mixed periods unsupported by the naive oracle")


# ---------------------------------------------------------------------------
# canned model documents


def doc_sink_1d():
    return {
        "dim": 1,
        "rank": 1,
        "fixed_points": [{"name": "sink", "eigenvalues": [{"chi": -1.0}]}],
    }


def doc_saddle_2d():
    return {
        "dim": 2,
        "rank": 1,
        "fixed_points": [
            {"name": "saddle",
             "eigenvalues": [{"chi": {"num": -1, "den": 1}},
                              {"chi": {"num": 2, "den": 1}}]}
        ],
    }


def doc_single_orbit(period_pi_num=2, chi_num=1):
    """One closed orbit, period (p/1)*pi, one unstable transverse exponent."""
    return {
        "dim": 2,
        "rank": 1,
        "orbits": [{
            "name": "orbit",
            "period": {"num": period_pi_num, "den": 1, "times_pi": True},
            "eigenvalues": [{"chi": {"num": chi_num, "den": 1}}],
        }],
    }


def doc_twisted_orbit():
    """Twisted pair: multipliers (-1/2, -3) realized as two twisted slots."""
    return {
        "dim": 3,
        "rank": 1,
        "orbits": [{
            "name": "twisted",
            "period": {"num": 1, "den": 1},
            "eigenvalues": [
                {"chi": -math.log(2.0), "twist": {"num": 1, "den": 2}},
                {"chi": math.log(3.0), "twist": {"num": 1, "den": 2}},
            ],
            "orientability_index": {"num": 1, "den": 2},
        }],
    }


def load(doc, mode="float") -> FlowModel:
    return modelfile.model_from_dict(doc, mode=mode)


# ---------------------------------------------------------------------------
# seeded random models (rational data, parity-consistent, unitary)


def _rand_fraction(rng, lo=5, hi=16):
    # desk-scale exponents: large enough that a T=50 box holds only a few
    # lattice layers per direction (exact enumeration stays fast)
    num = rng.randint(lo, hi)
    den = 2 if (num >= 9 and rng.random() < 0.3) else 1
    return Fraction(num, den)


def _rational_node(q: Fraction):
    return {"num": q.numerator, "den": q.denominator}


def _random_fixed_point(rng, n, name):
    eigs = []
    remaining = n
    while remaining:
        stable = rng.random() < 0.5
        chi = _rand_fraction(rng) * (-1 if stable else 1)
        if remaining >= 2 and rng.random() < 0.35:
            om = _rand_fraction(rng, 1, 6)
            eigs.append({"chi": _rational_node(chi), "omega": _rational_node(om)})
            eigs.append({"chi": _rational_node(chi), "omega": _rational_node(-om)})
            remaining -= 2
        else:
            eigs.append({"chi": _rational_node(chi)})
            remaining -= 1
    return {"name": name, "eigenvalues": eigs}


def _random_orbit(rng, n, name, rank):
    eigs = []
    twisted_parity = 0
    real_slots = []
    remaining = n - 1
    while remaining:
        stable = rng.random() < 0.5
        chi = _rand_fraction(rng) * (-1 if stable else 1)
        if remaining >= 2 and rng.random() < 0.3:
            turns = Fraction(rng.randint(1, 3), rng.choice([2, 3, 4]))
            eigs.append({"chi": _rational_node(chi),
                         "omega": {"turns": _rational_node(turns)}})
            eigs.append({"chi": _rational_node(chi),
                         "omega": {"turns": _rational_node(-turns)}})
            remaining -= 2
        else:
            entry = {"chi": _rational_node(chi)}
            if rng.random() < 0.4:
                entry["twist"] = {"num": 1, "den": 2}
                twisted_parity ^= 1
            real_slots.append(entry)
            eigs.append(entry)
            remaining -= 1
    if twisted_parity and real_slots:
        # realizable monodromies have an even twisted-slot count
        slot = real_slots[-1]
        if "twist" in slot:
            del slot["twist"]
        else:
            slot["twist"] = {"num": 1, "den": 2}
    neg_unstable = sum(
        1 for e in eigs
        if e.get("twist") and Fraction(e["chi"]["num"], e["chi"]["den"]) > 0
    )
    eps = Fraction(1, 2) if neg_unstable % 2 else Fraction(0)
    # short periods keep the vertical lattice step 2*pi/P coarse, so boxes
    # with |Im| <= 50 hold a bounded number of rungs per band
    period = rng.choice([
        {"num": 1, "den": 2},
        {"num": 1, "den": 1},
        {"num": 3, "den": 2},
        {"num": 1, "den": 2, "times_pi": True},
        {"num": 1, "den": 4, "times_pi": True},
    ])
    gammas = [
        _rational_node(Fraction(rng.randint(0, 5), rng.choice([4, 6, 8])))
        for _ in range(rank)
    ]
    return {
        "name": name,
        "period": period,
        "eigenvalues": eigs,
        "orientability_index": _rational_node(eps),
    }, gammas


def random_model_doc(seed: int, n_max: int = 4, max_elements: int = 3):
    rng = random.Random(seed)
    n = rng.randint(2, n_max)
    rank = rng.choice([1, 1, 2])
    n_el = rng.randint(1, max_elements)
    fixed, orbits, exponents = [], [], {}
    for i in range(n_el):
        if rng.random() < 0.5:
            fixed.append(_random_fixed_point(rng, n, f"fp{i}"))
        else:
            orb, gammas = _random_orbit(rng, n, f"orb{i}", rank)
            orbits.append(orb)
            exponents[orb["name"]] = gammas
    doc = {
        "dim": n,
        "rank": rank,
        "fixed_points": fixed,
        "orbits": orbits,
        "connection": {"orbit_exponents": exponents},
    }
    # a valid chain of quiver edges ordered by unstable dimension
    dims = []
    for f in fixed:
        dims.append((f["name"], sum(1 for e in f["eigenvalues"]
                                    if Fraction(e["chi"]["num"], e["chi"]["den"]) > 0)))
    for o in orbits:
        dims.append((o["name"], 1 + sum(1 for e in o["eigenvalues"]
                                        if Fraction(e["chi"]["num"], e["chi"]["den"]) > 0)))
    dims.sort(key=lambda p: p[1])
    edges = []
    for (lo, dl), (hi, dh) in zip(dims, dims[1:]):
        if rng.random() < 0.6 and dl <= dh:
            edges.append([lo, hi])
    doc["quiver_edges"] = edges
    return doc


# ---------------------------------------------------------------------------
# brute-force resonance oracle (independent transcription)


def _doc_scalar(node):
    """Parse a model-file number into a pi-pair."""
    if isinstance(node, dict):
        if "num" in node:
            q = Fraction(node["num"], node["den"])
            return (Fraction(0), q) if node.get("times_pi") else (q, Fraction(0))
    return (Fraction(node), Fraction(0))


def _doc_entries(elem, is_orbit, period=None):
    """(chi, omega, twist, stable) tuples with pi-pair scalars."""
    out = []
    for e in elem["eigenvalues"]:
        chi = _doc_scalar(e["chi"])
        om = ZERO
        if "omega" in e:
            node = e["omega"]
            if isinstance(node, dict) and "turns" in node:
                t = node["turns"]
                tq = Fraction(t["num"], t["den"]) if isinstance(t, dict) else Fraction(t)
                om = pscale(two_pi_over(period), tq)
            else:
                om = _doc_scalar(node)
        tw = Fraction(0)
        if "twist" in e:
            tw = Fraction(e["twist"]["num"], e["twist"]["den"])
        stable = pfloat(chi) < 0
        out.append((chi, om, tw, stable))
    return out


def naive_resonances(doc, k, t_re, t_im):
    """Counter {(re_pair, im_pair): multiplicity} from raw nested loops."""
    rank = doc["rank"]
    results = Counter()

    for elem in doc.get("fixed_points", []):
        entries = _doc_entries(elem, False)
        _accumulate(results, entries, None, [ZERO] * rank, rank, k, t_re, t_im,
                    is_orbit=False, eps=None)
    for elem in doc.get("orbits", []):
        period = _doc_scalar(elem["period"])
        entries = _doc_entries(elem, True, period)
        gammas = [
            _doc_scalar(g)
            for g in doc.get("connection", {}).get("orbit_exponents", {})
            .get(elem["name"], [0] * rank)
        ]
        _accumulate(results, entries, period, gammas, rank, k, t_re, t_im,
                    is_orbit=True, eps=None)
    return results


def _accumulate(results, entries, period, gammas, rank, k, t_re, t_im,
                is_orbit, eps):
    step = two_pi_over(period) if is_orbit else None
    # selection pool: entries plus the flow slot for orbits
    pool = list(entries) + ([(ZERO, ZERO, Fraction(0), False)] if is_orbit else [])
    base_re = ZERO
    for chi, om, tw, stable in entries:
        if stable:
            base_re = padd(base_re, chi)

    # alpha bounds: sum alpha_e |chi_e| <= t_re + |base| + max mask size
    bounds = []
    for chi, om, tw, stable in entries:
        rate = abs(pfloat(chi))
        max_shift = sum(abs(pfloat(c)) for c, *_ in pool)
        bounds.append(int((t_re + abs(pfloat(base_re)) + max_shift) / rate) + 2)

    for mask in combinations(range(len(pool)), k):
        for j in range(rank):
            beta_re, beta_im = ZERO, ZERO
            for idx in mask:
                chi, om, tw, stable = pool[idx]
                beta_re = padd(beta_re, chi)
                beta_im = padd(beta_im, om)
                if is_orbit and tw:
                    beta_im = padd(beta_im, pscale(step, tw))
            d_re, d_im = pneg(beta_re), pneg(beta_im)
            if is_orbit:
                d_im = padd(d_im, pneg(pscale(step, gammas[j][0])))
                # complex gamma would add to d_re; generator keeps gammas real
            for alpha in product(*(range(b + 1) for b in bounds)):
                lam_re, lam_im = base_re, ZERO
                for a, (chi, om, tw, stable) in zip(alpha, entries):
                    if not a:
                        continue
                    if stable:
                        lam_re = padd(lam_re, pscale(chi, a))
                        lam_im = padd(lam_im, pscale(om, a))
                    else:
                        lam_re = padd(lam_re, pscale(chi, -a))
                        lam_im = padd(lam_im, pscale(om, -a))
                    if is_orbit and tw:
                        # twisting phases attach to stable and unstable
                        # selections alike (oracle-confirmed half shift)
                        lam_im = padd(lam_im, pscale(step, -tw * a))
                z_re = padd(lam_re, d_re)
                if pfloat(z_re) < -t_re - 1e-12:
                    continue
                z_im0 = padd(lam_im, d_im)
                if is_orbit:
                    lo = math.ceil((-t_im - pfloat(z_im0)) / pfloat(step) - 1e-9)
                    hi = math.floor((t_im - pfloat(z_im0)) / pfloat(step) + 1e-9)
                    for m in range(lo, hi + 1):
                        z_im = padd(z_im0, pscale(step, m))
                        results[(z_re, z_im)] += 1
                else:
                    if abs(pfloat(z_im0)) <= t_im + 1e-12:
                        results[(z_re, z_im0)] += 1


def library_multiset(resonances):
    """Counter {(re_pair, im_pair): mult} from exact-mode library output."""
    out = Counter()
    for r in resonances:
        key = ((r.z.re.a, r.z.re.b), (r.z.im.a, r.z.im.b))
        out[key] += r.multiplicity
    return out
