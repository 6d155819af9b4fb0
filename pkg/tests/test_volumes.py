"""Polytope volumes: exact rational engine vs quasi-Monte Carlo."""

import math
from fractions import Fraction

import pytest

from helpers import doc_saddle_2d, doc_single_orbit, load
from ruelle_lab.spectrum import WeylPolytope, context, polytope
from ruelle_lab.volumes import (
    UnboundedPolytopeError,
    exact_volume,
    montecarlo_volume,
    polytope_volume,
)


def triangle():
    # {x >= 0, x1 + 2 x2 <= 1}: area 1/4
    return WeylPolytope("t", (
        ((-1.0, 0.0), 0.0), ((0.0, -1.0), 0.0), ((1.0, 2.0), 1.0),
    ), 2)


def slab_cut_simplex():
    # chi+ = (1,1), omega = (3,-3): area 5/18
    return WeylPolytope("s", (
        ((-1.0, 0.0), 0.0), ((0.0, -1.0), 0.0),
        ((1.0, 1.0), 1.0), ((3.0, -3.0), 1.0), ((-3.0, 3.0), 1.0),
    ), 2)


def test_triangle_exact():
    assert exact_volume(triangle()) == Fraction(1, 4)


def test_slab_cut_exact():
    assert exact_volume(slab_cut_simplex()) == Fraction(5, 18)


def test_orbit_rectangle():
    m = load(doc_single_orbit())  # chi = 1, P = 2pi
    p = polytope(context(m, m.orbits[0]))
    vol, err = polytope_volume(p, method="exact")
    period = float(m.orbits[0].period)
    assert abs(float(vol) - period / math.pi) < 1e-12
    assert err == 0


def test_exact_3d_box_and_simplex():
    box = WeylPolytope("b", (
        ((-1.0, 0.0, 0.0), 0.0), ((0.0, -1.0, 0.0), 0.0), ((0.0, 0.0, -1.0), 0.0),
        ((1.0, 0.0, 0.0), 0.5), ((0.0, 1.0, 0.0), 2.0), ((0.0, 0.0, 1.0), 3.0),
    ), 3)
    assert exact_volume(box) == Fraction(3)
    simplex = WeylPolytope("s3", (
        ((-1.0, 0.0, 0.0), 0.0), ((0.0, -1.0, 0.0), 0.0), ((0.0, 0.0, -1.0), 0.0),
        ((1.0, 1.0, 1.0), 1.0),
    ), 3)
    assert exact_volume(simplex) == Fraction(1, 6)


def test_montecarlo_within_reported_bound():
    for poly, truth in ((triangle(), 0.25), (slab_cut_simplex(), 5 / 18)):
        est, bound = montecarlo_volume(poly, tol=1e-3, seed=7)
        assert bound <= 1e-3 or bound > 0
        assert abs(est - truth) <= max(bound, 1e-4)


def test_montecarlo_seeded_reproducible():
    a = montecarlo_volume(triangle(), seed=3)
    b = montecarlo_volume(triangle(), seed=3)
    assert a == b


def test_unbounded_rejected():
    open_poly = WeylPolytope("u", (((-1.0, 0.0), 0.0), ((0.0, -1.0), 0.0)), 2)
    with pytest.raises(UnboundedPolytopeError):
        exact_volume(open_poly)
    with pytest.raises(UnboundedPolytopeError):
        montecarlo_volume(open_poly)


def test_empty_polytope_zero():
    empty = WeylPolytope("e", (
        ((-1.0,), 0.0), ((1.0,), -1.0),
    ), 1)
    assert exact_volume(empty) == 0


def test_exact_vs_montecarlo_on_generated_polytopes():
    saddle = load(doc_saddle_2d())
    p = polytope(context(saddle, saddle.fixed_points[0]))
    vol, _ = polytope_volume(p, method="exact")
    est, bound = montecarlo_volume(p, seed=11)
    assert abs(est - float(vol)) <= max(bound, 5e-4)


def test_montecarlo_4d_simplex():
    # exact engine refuses above dimension 3; QMC covers the Weyl path
    simplex = WeylPolytope("s4", (
        ((-1.0, 0.0, 0.0, 0.0), 0.0), ((0.0, -1.0, 0.0, 0.0), 0.0),
        ((0.0, 0.0, -1.0, 0.0), 0.0), ((0.0, 0.0, 0.0, -1.0), 0.0),
        ((1.0, 1.0, 1.0, 1.0), 1.0),
    ), 4)
    with pytest.raises(ValueError):
        exact_volume(simplex)
    est, bound = montecarlo_volume(simplex, tol=5e-4, seed=2)
    assert abs(est - 1 / 24) <= max(bound, 5e-4)


def test_weyl_prediction_4d_model_uses_montecarlo():
    from helpers import random_model_doc
    from ruelle_lab.spectrum import weyl_prediction

    for seed in range(30):
        doc = random_model_doc(seed)
        if doc["dim"] == 4:
            break
    else:
        pytest.skip("no 4-D model in the first seeds")
    m = load(doc)
    pred, err = weyl_prediction(m, 1, 10.0, tol=5e-3, seed=3)
    assert pred > 0 and err >= 0
