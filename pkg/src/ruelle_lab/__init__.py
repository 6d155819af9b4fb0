"""Resonance spectra of Morse-Smale flows from linearization data.

Given an abstract flow description (hyperbolic critical elements with their
linearized eigenvalues, periods, twisting indices, and flat-connection
holonomy exponents), this package computes the complete correlation-resonance
spectrum with multiplicities, the imaginary-axis spectrum and its counting
law, the vertical band structure, and polytope-volume counting asymptotics,
and verifies the predictions against independent numerical oracles (Floquet
ODE integration, matrix-pencil pole extraction of correlation functions, and
local eigenmode pairing identities).
"""

from .exactnum import Exact, ExactComplex
from .model import (
    ClosedOrbitElement,
    ConnectionData,
    EigenDatum,
    FixedPointElement,
    FlowModel,
    ValidationReport,
    element_dims,
    validate_model,
)
from .modelfile import load_model, model_from_dict, model_to_dict, save_model
from .spectrum import (
    Band,
    Box,
    Resonance,
    ShiftDatum,
    WeylPolytope,
    band_decomposition,
    context,
    count_imaginary,
    enumerate_imaginary,
    imaginary_axis,
    polytope,
    resonances,
    scalar_lattice,
    shift_set,
    weyl_count,
    weyl_prediction,
)

__version__ = "0.1.0"

__all__ = [
    "Band",
    "Box",
    "ClosedOrbitElement",
    "ConnectionData",
    "EigenDatum",
    "Exact",
    "ExactComplex",
    "FixedPointElement",
    "FlowModel",
    "Resonance",
    "ShiftDatum",
    "ValidationReport",
    "WeylPolytope",
    "band_decomposition",
    "context",
    "count_imaginary",
    "element_dims",
    "enumerate_imaginary",
    "imaginary_axis",
    "load_model",
    "model_from_dict",
    "model_to_dict",
    "polytope",
    "resonances",
    "save_model",
    "scalar_lattice",
    "shift_set",
    "validate_model",
    "weyl_count",
    "weyl_prediction",
]
