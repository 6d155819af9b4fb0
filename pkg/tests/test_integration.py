"""End-to-end: integrated Floquet data through the whole prediction pipeline."""

import math

import numpy as np
import pytest

from ruelle_lab import oracle as orc
from ruelle_lab.floquet import (
    FloquetFrame,
    PeriodicCoefficient,
    connection_monodromy,
)
from ruelle_lab.model import ConnectionData, FlowModel, validate_model
from ruelle_lab.spectrum import Box, enumerate_imaginary, resonances
from ruelle_lab.states import Chart, CoefficientOrbitFrame, TestForm


@pytest.fixture(scope="module")
def integrated_model():
    """An orbit whose spectral data comes from honest ODE integration.

    Transverse dynamics: a twisted pair (rotation by pi per period plus
    diagonal growth); connection: a constant anti-Hermitian coefficient whose
    holonomy phase is pi/3 around the orbit.
    """
    j = np.array([[0.0, -1.0], [1.0, 0.0]])

    def a_fn(th):
        return math.pi * j + np.diag([0.6, 0.6]) \
            + 0.1 * math.sin(2 * math.pi * th) * np.eye(2)

    coeff = PeriodicCoefficient.from_callable(a_fn, 1.0, 2)
    frame = FloquetFrame(coeff, 1e-11)
    elem = frame.decomposition.to_element("loop")

    conn_coeff = PeriodicCoefficient.constant(
        np.array([[-2j * math.pi / 6]]), 1.0)
    _, gammas = connection_monodromy(conn_coeff, 1e-11)
    model = FlowModel(
        dim=3,
        connection=ConnectionData(1, {"loop": tuple(gammas)}),
        orbits=(elem,),
    )
    assert validate_model(model).ok
    return coeff, model


def test_integrated_element_data(integrated_model):
    from fractions import Fraction

    coeff, model = integrated_model
    elem = model.orbits[0]
    # multipliers -exp(0.25): both unstable and twisted, orientable pair
    for e in elem.eigenvalues:
        assert abs(float(e.chi) - 0.6) < 1e-9
        assert e.twist == Fraction(1, 2)
    assert elem.orientability_index == 0
    gamma = complex(model.connection.gammas("loop")[0])
    assert abs(gamma - (1.0 / 6.0)) < 1e-9
    assert model.is_unitary


def test_integrated_axis_slice_matches(integrated_model):
    _, model = integrated_model
    # dim W^s = 1, so degrees 0 and 1 carry the axis lattice -2i pi (m + gamma)
    for k in (0, 1):
        axis = enumerate_imaginary(model, k, 15.0)
        slice_pts = [r for r in resonances(model, k, Box(1e-9, 15.0))
                     if abs(complex(r.z).real) < 1e-7]
        assert len(axis) == len(slice_pts)
        got = sorted(complex(r.z).imag for r in slice_pts)
        want = sorted(float(z.imag) for z, _ in
                      [(complex(z), m) for z, m in axis])
        assert np.allclose(got, want, atol=1e-8)
        # the phase offset is the holonomy: rungs at -2 pi (m + 1/6)
        fracs = {round((-v / (2 * math.pi)) % 1, 6) for v in got}
        assert fracs == {round(1 / 6, 6)}


def test_integrated_oracle_confirms(integrated_model):
    coeff, model = integrated_model
    elem = model.orbits[0]
    frame = CoefficientOrbitFrame(coeff, tol=1e-11)
    chart = Chart(model, elem, frame=frame)
    psi2 = TestForm.gaussian(chart, word=())
    psi1 = TestForm.gaussian(chart, word=(0, 1, 2))
    t = np.linspace(0.0, 12.0, 384)
    series = orc.correlation_series(chart, 0, psi1, psi2, t, nodes=32)
    est = orc.extract_poles(series, 10)
    preds = [complex(r.z) for r in resonances(model, 0, Box(14.0, 14.0))]

    # the dominant pole is the holonomy rung -2*i*pi*gamma/P, recovered sharply
    by_amp = sorted(zip(est.amplitudes, est.exponents),
                    key=lambda p: -abs(p[0]))
    lead = by_amp[0][1]
    assert abs(lead - complex(0, -2 * math.pi / 6)) < 1e-6
    # the second-strongest pole sits on the predicted twisted band; the -1.2
    # line has multiplicity three, which limits lateral pencil resolution, and
    # deeper fit terms blend neighboring lines
    amp2, pole2 = by_amp[1]
    assert min(abs(pole2 - p) for p in preds) < 0.1, pole2
    assert abs(pole2.imag - (-2 * math.pi / 6)) < 1e-4
