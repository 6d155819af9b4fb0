"""Resonant-state germs: pairings, eigen checks, duals, consistency."""

import cmath
import math
from fractions import Fraction

import numpy as np
import pytest

from helpers import doc_saddle_2d, doc_sink_1d, doc_twisted_orbit, load
from ruelle_lab.calculus import Poly
from ruelle_lab.model import (
    ClosedOrbitElement,
    ConnectionData,
    EigenDatum,
    FixedPointElement,
    FlowModel,
    validate_model,
)
from ruelle_lab.spectrum import context, shift_set
from ruelle_lab.states import (
    Chart,
    StateError,
    TestForm,
    TransportedForm,
    build_state,
    check_eigen,
    dual_state,
    pair,
    pullback_pair,
    wedge_mass,
)

NODES = 48


def sink_chart():
    m = load(doc_sink_1d())
    return Chart(m, m.fixed_points[0])


from ruelle_lab.states import coupling_form as coupled_form  # noqa: E402


# ---------------------------------------------------------------------------
# fixed-point pair examples


def test_pair_dirac_against_gaussian():
    ch = sink_chart()
    u = build_state(ch, (0,), (), 1, 0)
    assert u.eigenvalue == -1 + 0j
    psi = TestForm.gaussian(ch, word=(0,))
    assert abs(pair(u, psi) - 1.0) < 1e-14


def test_pair_dirac_derivative():
    ch = sink_chart()
    u = build_state(ch, (1,), (), 1, 0)
    psi = TestForm(Poly.monomial((1,)), (0,))
    assert abs(pair(u, psi) - (-1.0)) < 1e-14


def test_pair_monomial_second_moment():
    m = load(doc_saddle_2d())
    ch = Chart(m, m.fixed_points[0])
    u = build_state(ch, (0, 1), (), 1, 0)
    assert u.eigenvalue == -3 + 0j
    psi = TestForm(Poly.monomial((0, 1)), (0, 1))
    assert abs(pair(u, psi) - math.sqrt(math.pi) / 2) < 1e-12


def test_degree_mismatch_rejected():
    ch = sink_chart()
    with pytest.raises(StateError):
        build_state(ch, (0,), (0,), 1, 0)  # word degree 1, k = 0
    m = load(doc_saddle_2d())
    ch2 = Chart(m, m.fixed_points[0])
    with pytest.raises(StateError):
        build_state(ch2, (0, 0), (0, 1), 1, 1)  # degree 2 word with k = 1
    with pytest.raises(StateError):
        build_state(ch2, (0,), (), 1, 0)  # alpha length mismatch
    with pytest.raises(StateError):
        build_state(ch2, (0, -1), (), 1, 0)
    u = build_state(ch2, (0, 0), (0,), 1, 1)
    psi_bad = TestForm.gaussian(ch2, word=(0, 1))
    with pytest.raises(StateError):
        pair(u, psi_bad)


# ---------------------------------------------------------------------------
# pullbacks and the eigen-equation


def test_pullback_scaling_1d():
    ch = sink_chart()
    u = build_state(ch, (0,), (), 1, 0)
    psi = TestForm.gaussian(ch, word=(0,))
    got = pullback_pair(u, psi, 1.0)
    assert abs(got - math.exp(-1)) < 1e-12
    assert pullback_pair(u, psi, 0.0) == pair(u, psi)


def test_pullback_scaling_2d():
    m = load(doc_saddle_2d())
    ch = Chart(m, m.fixed_points[0])
    u = build_state(ch, (0, 1), (), 1, 0)
    psi = TestForm(Poly.monomial((0, 1)), (0, 1))
    base = pair(u, psi)
    assert abs(pullback_pair(u, psi, 1.0) - math.exp(-3) * base) < 1e-12


def test_check_eigen_plane_pair():
    fp = FixedPointElement("r", (
        EigenDatum(-1.0, 2.0), EigenDatum(-1.0, -2.0), EigenDatum(1.5),
    ))
    m = FlowModel(dim=3, connection=ConnectionData(1, {}), fixed_points=(fp,))
    assert validate_model(m).ok
    ch = Chart(m, fp)
    for word, alpha in (((0,), (0, 0, 0)), ((0, 1), (1, 0, 2)),
                        ((2,), (0, 1, 0)), ((), (1, 1, 1))):
        u = build_state(ch, alpha, word, 1, len(word))
        psi = coupled_form(ch, u)
        v = pair(u, psi)
        assert abs(v) > 1e-10, (word, alpha)
        res = check_eigen(u, psi, [0.3, 0.7, 1.1])
        assert res < 1e-10, (word, alpha, res)


def test_check_eigen_empty_grid_zero():
    ch = sink_chart()
    u = build_state(ch, (0,), (), 1, 0)
    psi = TestForm.gaussian(ch, word=(0,))
    assert check_eigen(u, psi, []) == 0.0


def test_perturbed_lambda_detected():
    ch = sink_chart()
    u = build_state(ch, (0,), (0,), 1, 1)  # eigenvalue 0
    psi = TestForm.gaussian(ch, word=())
    from dataclasses import replace

    bad = replace(u, eigenvalue=u.eigenvalue + 1e-3)
    res = check_eigen(bad, psi, [1.0, 2.0, 3.0])
    assert res > 1e-3
    explicit = replace(u, eigenvalue=u.eigenvalue + 0.1)
    res2 = check_eigen(explicit, psi, [1.0])
    base = pair(u, psi)
    expect = abs(cmath.exp(0.0) - cmath.exp(0.1)) * abs(base) / (1 + abs(base))
    assert abs(res2 - expect) < 1e-9


# ---------------------------------------------------------------------------
# orbit states


def twisted_chart():
    m = load(doc_twisted_orbit())
    return Chart(m, m.orbits[0])


def test_orbit_on_axis_state():
    ch = twisted_chart()
    u = build_state(ch, (0, 0), (0,), 1, 1)
    assert abs(u.eigenvalue - (-1j * math.pi)) < 1e-12
    psi = TestForm.gaussian(ch, word=(1, 2))
    v = pair(u, psi, nodes=NODES)
    assert abs(v) > 0.1
    assert check_eigen(u, psi, [0.4, 1.3], nodes=NODES) < 1e-12


def test_orbit_twisted_monomial_state():
    ch = twisted_chart()
    u = build_state(ch, (0, 1), (0,), 1, 1)
    expect = -math.log(3) - 2j * math.pi
    assert abs(u.eigenvalue - expect) < 1e-12
    psi = coupled_form(ch, u)
    assert abs(pair(u, psi, nodes=NODES)) > 1e-6
    assert check_eigen(u, psi, [0.5, 1.2], nodes=NODES) < 1e-12


def test_orbit_bundle_phase():
    doc = doc_twisted_orbit()
    doc["connection"] = {"orbit_exponents": {"twisted": [{"num": 1, "den": 4}]}}
    m = load(doc)
    ch = Chart(m, m.orbits[0])
    u = build_state(ch, (0, 0), (0,), 1, 1)
    # delta now includes -2*i*pi*gamma/P = -i*pi/2
    assert abs(u.eigenvalue - (-1j * math.pi - 0.5j * math.pi)) < 1e-12
    psi = TestForm.gaussian(ch, word=(1, 2))
    assert check_eigen(u, psi, [0.7, 1.9], nodes=NODES) < 1e-11


def test_periodicity_origin_shift():
    ch = twisted_chart()
    u = build_state(ch, (0, 1), (0,), 1, 1, alpha_n=1)
    psi = coupled_form(ch, u)
    a = pair(u, psi, nodes=NODES, origin=0.0)
    b = pair(u, psi, nodes=NODES, origin=ch.period / 3)
    c = pair(u, psi, nodes=NODES, origin=ch.period)
    assert abs(a - b) < 1e-10 and abs(a - c) < 1e-10


def test_semigroup_composition():
    ch = twisted_chart()
    u = build_state(ch, (0, 0), (0,), 1, 1)
    psi = TestForm.gaussian(ch, word=(1, 2))
    direct = pullback_pair(u, psi, 0.9, nodes=NODES)
    base = TransportedForm(ch, psi)
    composed = pair(u, base.shifted(0.5).shifted(0.4), nodes=NODES)
    gamma_phase = 1.0  # trivial holonomy here
    assert abs(direct - composed * gamma_phase) < 1e-10


def test_pair_linearity_in_test_form():
    ch = sink_chart()
    u = build_state(ch, (1,), (), 1, 0)
    p1, p2 = Poly.monomial((1,)), Poly.monomial((3,))
    s = pair(u, TestForm(p1 + p2.scale(2.5), (0,)))
    a = pair(u, TestForm(p1, (0,)))
    b = pair(u, TestForm(p2, (0,)))
    assert abs(s - (a + 2.5 * b)) < 1e-12


def test_conjugation_symmetry():
    fp = FixedPointElement("r", (EigenDatum(-1.0, 2.0), EigenDatum(-1.0, -2.0)))
    m = FlowModel(dim=2, connection=ConnectionData(1, {}), fixed_points=(fp,))
    ch = Chart(m, fp)
    u = build_state(ch, (1, 0), (), 1, 0)
    uc = build_state(ch, (0, 1), (), 1, 0)  # conjugate multi-index
    psi = TestForm(Poly.linear([1.0, 1j], 2), (0, 1))
    psic = TestForm(Poly.linear([1.0, -1j], 2), (0, 1))
    # conjugating all data swaps dz and dzbar inside the test word, so the
    # canonical reordering contributes one transposition sign
    assert abs(pair(u, psi) + pair(uc, psic).conjugate()) < 1e-12
    assert abs(u.eigenvalue - uc.eigenvalue.conjugate()) < 1e-12
    assert check_eigen(u, psi, [0.4, 0.9]) < 1e-12
    assert check_eigen(uc, psic, [0.4, 0.9]) < 1e-12


# ---------------------------------------------------------------------------
# frame/shift consistency


def test_word_scaling_matches_shift_set():
    fp = FixedPointElement("r", (
        EigenDatum(-2.0), EigenDatum(-1.0, 1.5), EigenDatum(-1.0, -1.5),
        EigenDatum(3.0),
    ))
    m = FlowModel(dim=4, connection=ConnectionData(1, {}), fixed_points=(fp,))
    ch = Chart(m, fp)
    ctx = context(m, fp)
    t = 0.37
    lt = np.asarray(ch.exp_a(t)).T
    from itertools import combinations

    for k in range(5):
        data = shift_set(ctx, k)
        for word in combinations(range(4), k):
            datum = next(d for d in data
                         if any(mask == word for _j, mask in d.witnesses))
            beta = -complex(datum.delta)
            rows = [ch.covector(ch.slots[i]) for i in word]
            comp = [ch.covector(ch.slots[i]) for i in range(4) if i not in word]
            before = np.linalg.det(np.array(rows + comp)) if rows + comp else 1.0
            after_rows = [lt @ r for r in rows]
            after = np.linalg.det(np.array(after_rows + comp)) if rows + comp else 1.0
            assert abs(after / before - cmath.exp(t * beta)) < 1e-10, (k, word)


# ---------------------------------------------------------------------------
# duals and wedge mass


def test_fixed_point_mass_one():
    m = load(doc_saddle_2d())
    ch = Chart(m, m.fixed_points[0])
    u = build_state(ch, (0, 0), (0,), 1, 1)
    d = dual_state(u)
    assert abs(wedge_mass(u, d) - 1.0) < 1e-14


def test_orbit_mass_is_period():
    for doc, expect in ((doc_twisted_orbit(), 1.0), (None, 2 * math.pi)):
        if doc is None:
            orb = ClosedOrbitElement("c", 2 * math.pi, (EigenDatum(1.0),),
                                     Fraction(0))
            m = FlowModel(dim=2, connection=ConnectionData(1, {"c": (0j,)}),
                          orbits=(orb,))
        else:
            m = load(doc)
        ch = Chart(m, m.orbits[0])
        word = tuple(
            s.index for s in ch.slots if s.kind != "theta" and s.stable
        )
        u = build_state(ch, tuple([0] * len(ch.ctx.alpha_entries)), word,
                        1, len(word))
        d = dual_state(u)
        got = wedge_mass(u, d, nodes=64)
        assert abs(got - expect) < 1e-8, got


def test_dual_requires_principal():
    ch = sink_chart()
    u = build_state(ch, (2,), (), 1, 0)
    with pytest.raises(StateError):
        dual_state(u)


def test_eigenvalue_matches_spectrum_module():
    m = load(doc_twisted_orbit())
    ch = Chart(m, m.orbits[0])
    ctx = context(m, m.orbits[0])
    from itertools import combinations

    for k in range(4):
        for word in combinations(range(3), k):
            u = build_state(ch, (1, 2), word, 1, k, alpha_n=-1)
            lam = ctx.lam((1, 2), -1)
            delta = ctx.delta(1, word)
            assert abs(u.eigenvalue - complex(lam + delta)) < 1e-12


def test_chart_accepts_exact_models():
    m = load(doc_twisted_orbit(), "exact")
    ch = Chart(m, m.orbits[0])
    u = build_state(ch, (0, 0), (0,), 1, 1)
    assert abs(u.eigenvalue - (-1j * math.pi)) < 1e-12


def test_coefficient_orbit_frame_end_to_end():
    # integrate a twisted constant coefficient, build the element from its
    # decomposition, attach the integrated frame, and verify a germ honestly
    import numpy as np
    from ruelle_lab.floquet import PeriodicCoefficient, FloquetFrame
    from ruelle_lab.states import CoefficientOrbitFrame

    j = np.array([[0.0, -1.0], [1.0, 0.0]])
    coeff = PeriodicCoefficient.constant(
        math.pi * j + np.diag([0.4, 0.4]), 1.0)
    frame = CoefficientOrbitFrame(coeff, tol=1e-11)
    fl = FloquetFrame(coeff, 1e-11)
    elem = fl.decomposition.to_element("c")
    m = FlowModel(dim=3, connection=ConnectionData(1, {"c": (0j,)}),
                  orbits=(elem,))
    assert validate_model(m).ok
    ch = Chart(m, elem, frame=frame)
    # both transverse multipliers are -e^{0.4}: unstable twisted pair
    u = build_state(ch, (0, 0), (2,), 1, 1)  # word = theta slot
    from ruelle_lab.states import coupling_form

    psi = coupling_form(ch, u)
    v = pair(u, psi, nodes=64)
    assert abs(v) > 1e-6
    assert check_eigen(u, psi, [0.3, 0.8], nodes=64) < 1e-8
    # a state with a twisted monomial exponent
    u2 = build_state(ch, (1, 0), (2,), 1, 1, alpha_n=0)
    psi2 = coupling_form(ch, u2)
    if abs(pair(u2, psi2, nodes=64)) > 1e-9:
        assert check_eigen(u2, psi2, [0.5], nodes=64) < 1e-8


def test_canonical_basis_change_block_form():
    import numpy as np
    from ruelle_lab.states import canonical_basis_change

    rng = np.random.default_rng(7)
    s_rand = rng.normal(size=(3, 3))
    target = np.zeros((3, 3))
    target[0, 0] = 0.5   # stable real multiplier
    theta = 2.0
    target[1:, 1:] = 3.0 * np.array([[math.cos(theta), -math.sin(theta)],
                                     [math.sin(theta), math.cos(theta)]])
    m = s_rand @ target @ np.linalg.inv(s_rand)
    s = canonical_basis_change(m)
    back = np.linalg.inv(s) @ m @ s
    assert abs(back[0, 0] - 0.5) < 1e-9
    assert abs(back[1, 1] - back[2, 2]) < 1e-9
    assert abs(back[1, 2] + back[2, 1]) < 1e-9
    # dz = e1 + i e2 pairs with the +omega eigenvalue 3 e^{i theta}
    block = back[1:, 1:]
    lam = block[0, 0] + 1j * block[1, 0]
    assert abs(lam - 3.0 * cmath.exp(1j * theta)) < 1e-9


def test_chart_rejects_mismatched_frame():
    m = load(doc_twisted_orbit())
    good = Chart(m, m.orbits[0])
    other = ClosedOrbitElement(
        "c", 1.0, (EigenDatum(-1.0), EigenDatum(2.0)), Fraction(0))
    m2 = FlowModel(dim=3, connection=ConnectionData(1, {"c": (0j,)}),
                   orbits=(other,))
    with pytest.raises(StateError):
        Chart(m2, other, frame=good.frame)
