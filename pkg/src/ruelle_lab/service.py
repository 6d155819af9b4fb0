"""HTTP service wrapping the core package.

Every spectrum/floquet/oracle/states/quiver operation is exposed as a POST
endpoint taking the flow model inline (same schema as the model files, typed
with pydantic) plus operation parameters, and returning typed rows.  The CLI
and this service are both thin clients of the same core functions.

Run with:  uvicorn ruelle_lab.service:app
"""

from __future__ import annotations

import math
from typing import Literal, Optional, Union

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import modelfile, quiver as quiver_mod, spectrum
from .model import FlowModel, validate_model
from .modelfile import SchemaError
from .spectrum import Box, NonUnitaryError

app = FastAPI(
    title="ruelle-lab",
    description="Resonance spectra of Morse-Smale flows from linearization data",
)


# ---------------------------------------------------------------------------
# model schema (mirrors the model-file JSON)


class RationalSpec(BaseModel):
    num: int
    den: int
    times_pi: bool = False


class TurnsSpec(BaseModel):
    turns: Union[int, float, RationalSpec]


Number = Union[int, float, RationalSpec]


class ComplexSpec(BaseModel):
    re: Number = 0.0
    im: Number = 0.0


class EigenSpec(BaseModel):
    chi: Number
    omega: Optional[Union[RationalSpec, TurnsSpec, float, int]] = None
    twist: Optional[RationalSpec] = None


class FixedPointSpec(BaseModel):
    name: str
    eigenvalues: list[EigenSpec]


class OrbitSpec(BaseModel):
    name: str
    period: Number
    eigenvalues: list[EigenSpec]
    orientability_index: Optional[RationalSpec] = None


class ConnectionSpec(BaseModel):
    orbit_exponents: dict[str, list[Union[Number, ComplexSpec]]] = Field(
        default_factory=dict
    )


class ModelSpec(BaseModel):
    dim: int
    rank: int
    fixed_points: list[FixedPointSpec] = Field(default_factory=list)
    orbits: list[OrbitSpec] = Field(default_factory=list)
    connection: ConnectionSpec = Field(default_factory=ConnectionSpec)
    quiver_edges: list[tuple[str, str]] = Field(default_factory=list)


Mode = Literal["float", "exact"]


def _build_model(spec: ModelSpec, mode: Mode, require_valid: bool = True) -> FlowModel:
    try:
        model = modelfile.model_from_dict(
            spec.model_dump(exclude_none=True), mode=mode
        )
    except SchemaError as err:
        raise HTTPException(status_code=422, detail=str(err)) from None
    if require_valid:
        report = validate_model(model)
        if not report.ok:
            raise HTTPException(
                status_code=400,
                detail=[str(v) for v in report.violations],
            )
    return model


# ---------------------------------------------------------------------------
# validation


class ValidateRequest(BaseModel):
    model: ModelSpec
    mode: Mode = "float"


class ValidateResponse(BaseModel):
    ok: bool
    violations: list[str]


@app.post("/validate", response_model=ValidateResponse)
def validate_endpoint(req: ValidateRequest) -> ValidateResponse:
    model = _build_model(req.model, req.mode, require_valid=False)
    report = validate_model(model)
    return ValidateResponse(ok=report.ok, violations=[str(v) for v in report.violations])


# ---------------------------------------------------------------------------
# spectrum


class SpectrumRequest(BaseModel):
    model: ModelSpec
    k: int
    t_re: float
    t_im: Optional[float] = None
    mode: Mode = "float"


class ContributionRow(BaseModel):
    element: str
    alpha: list[int]
    alpha_n: Optional[int]
    bundle_j: int
    epsilon_mask: int


class ResonanceRow(BaseModel):
    re: float
    im: float
    multiplicity: int
    contributions: list[ContributionRow]


class SpectrumResponse(BaseModel):
    resonances: list[ResonanceRow]


@app.post("/spectrum", response_model=SpectrumResponse)
def spectrum_endpoint(req: SpectrumRequest) -> SpectrumResponse:
    model = _build_model(req.model, req.mode)
    box = Box(req.t_re, req.t_im if req.t_im is not None else req.t_re)
    rows = []
    for r in spectrum.resonances(model, req.k, box):
        rows.append(ResonanceRow(
            re=float(spectrum._c_re(r.z)),
            im=float(spectrum._c_im(r.z)),
            multiplicity=r.multiplicity,
            contributions=[
                ContributionRow(
                    element=c.element, alpha=list(c.alpha), alpha_n=c.alpha_n,
                    bundle_j=c.bundle,
                    epsilon_mask=sum(1 << i for i in c.mask),
                )
                for c in r.contributions
            ],
        ))
    return SpectrumResponse(resonances=rows)


# ---------------------------------------------------------------------------
# imaginary axis


class ImaginaryRequest(BaseModel):
    model: ModelSpec
    k: int
    t: float
    mode: Mode = "float"


class AxisPoint(BaseModel):
    im: float
    multiplicity: int


class ImaginaryResponse(BaseModel):
    points: list[AxisPoint]
    count: int
    prediction: float


@app.post("/imaginary", response_model=ImaginaryResponse)
def imaginary_endpoint(req: ImaginaryRequest) -> ImaginaryResponse:
    model = _build_model(req.model, req.mode)
    try:
        pts = spectrum.enumerate_imaginary(model, req.k, req.t)
        count, prediction = spectrum.count_imaginary(model, req.k, req.t)
    except NonUnitaryError as err:
        raise HTTPException(status_code=409, detail=str(err)) from None
    return ImaginaryResponse(
        points=[AxisPoint(im=float(spectrum._c_im(z)), multiplicity=m)
                for z, m in pts],
        count=count,
        prediction=prediction,
    )


# ---------------------------------------------------------------------------
# bands


class BandsRequest(BaseModel):
    model: ModelSpec
    k: int
    t_re: float
    t_im: Optional[float] = None
    mode: Mode = "float"


class BandRow(BaseModel):
    element: str
    offset_re: float
    offset_im: float
    step_im: float
    phase: float
    multiplicity: int


class BandsResponse(BaseModel):
    bands: list[BandRow]


@app.post("/bands", response_model=BandsResponse)
def bands_endpoint(req: BandsRequest) -> BandsResponse:
    model = _build_model(req.model, req.mode)
    box = Box(req.t_re, req.t_im if req.t_im is not None else req.t_re)
    rows = [
        BandRow(
            element=b.element,
            offset_re=float(spectrum._c_re(b.offset)),
            offset_im=float(spectrum._c_im(b.offset)),
            step_im=float(b.step) if b.step is not None else 0.0,
            phase=float(b.phase) if b.phase is not None else 0.0,
            multiplicity=b.multiplicity,
        )
        for b in spectrum.band_decomposition(model, req.k, box)
    ]
    return BandsResponse(bands=rows)


# ---------------------------------------------------------------------------
# Weyl counting


class WeylRequest(BaseModel):
    model: ModelSpec
    k: int
    t: float
    method: Literal["auto", "exact", "montecarlo"] = "auto"
    tol: float = 1e-3
    seed: int = 0
    mode: Mode = "float"


class WeylResponse(BaseModel):
    count: int
    prediction: float
    error_bound: float


@app.post("/weyl", response_model=WeylResponse)
def weyl_endpoint(req: WeylRequest) -> WeylResponse:
    model = _build_model(req.model, req.mode)
    try:
        count = spectrum.weyl_count(model, req.k, req.t)
        prediction, err = spectrum.weyl_prediction(
            model, req.k, req.t, method=req.method, tol=req.tol, seed=req.seed
        )
    except ValueError as err2:
        raise HTTPException(status_code=400, detail=str(err2)) from None
    return WeylResponse(count=count, prediction=prediction, error_bound=err)


# ---------------------------------------------------------------------------
# Floquet decomposition


class FloquetRequest(BaseModel):
    matrix: list[list[float]]
    period: float


class FloquetResponse(BaseModel):
    multipliers_re: list[float]
    multipliers_im: list[float]
    lyapunov: list[float]
    frequencies: list[float]
    twists: list[float]
    orientable_u: bool
    orientable_s: bool
    det_positive: bool
    generator: list[list[float]]


@app.post("/floquet/decompose", response_model=FloquetResponse)
def floquet_endpoint(req: FloquetRequest) -> FloquetResponse:
    from . import floquet as fl

    try:
        dec = fl.floquet_decompose(np.array(req.matrix, dtype=float), req.period)
    except fl.FloquetError as err:
        raise HTTPException(status_code=400, detail=str(err)) from None
    return FloquetResponse(
        multipliers_re=[z.real for z in dec.multipliers],
        multipliers_im=[z.imag for z in dec.multipliers],
        lyapunov=list(dec.lyapunov),
        frequencies=list(dec.frequencies),
        twists=[float(t) for t in dec.twists],
        orientable_u=dec.orientable_u,
        orientable_s=dec.orientable_s,
        det_positive=dec.det_positive,
        generator=dec.generator.tolist(),
    )


class HolonomyRequest(BaseModel):
    period: float
    thetas: list[float]
    matrices_re: list[list[list[float]]]
    matrices_im: list[list[list[float]]]
    tol: float = 1e-10


class HolonomyResponse(BaseModel):
    gammas_re: list[float]
    gammas_im: list[float]


@app.post("/floquet/holonomy", response_model=HolonomyResponse)
def holonomy_endpoint(req: HolonomyRequest) -> HolonomyResponse:
    from . import floquet as fl

    mats = np.array(req.matrices_re, dtype=float) + 1j * np.array(
        req.matrices_im, dtype=float
    )
    try:
        coeff = fl.PeriodicCoefficient.from_samples(req.thetas, mats, req.period)
        _, gammas = fl.connection_monodromy(coeff, req.tol)
    except fl.FloquetError as err:
        raise HTTPException(status_code=400, detail=str(err)) from None
    return HolonomyResponse(
        gammas_re=[g.real for g in gammas], gammas_im=[g.imag for g in gammas]
    )


# ---------------------------------------------------------------------------
# states and oracle


class StatesCheckRequest(BaseModel):
    model: ModelSpec
    k: int
    alpha_max: int = 1
    t_points: int = 3


class StateRow(BaseModel):
    element: str
    alpha: list[int]
    mask: int
    lambda_re: float
    lambda_im: float
    residual: float


class StatesCheckResponse(BaseModel):
    states: list[StateRow]
    max_residual: float


@app.post("/states/check", response_model=StatesCheckResponse)
def states_endpoint(req: StatesCheckRequest) -> StatesCheckResponse:
    from itertools import combinations
    from .cli import _alphas_up_to, _exciting_form
    from .states import Chart, StateError, build_state, check_eigen

    model = _build_model(req.model, "float")
    t_grid = [0.4 * (i + 1) for i in range(req.t_points)]
    rows = []
    for elem in model.elements:
        chart = Chart(model, elem)
        n_alpha = len(chart.ctx.alpha_entries)
        for word in combinations(range(len(chart.slots)), req.k):
            for alpha in _alphas_up_to(n_alpha, req.alpha_max):
                try:
                    state = build_state(chart, alpha, word, 1, req.k)
                except StateError:
                    continue
                psi = _exciting_form(chart, state)
                if psi is None:
                    continue
                res = check_eigen(state, psi, t_grid)
                rows.append(StateRow(
                    element=elem.name, alpha=list(alpha),
                    mask=sum(1 << i for i in word),
                    lambda_re=state.eigenvalue.real,
                    lambda_im=state.eigenvalue.imag,
                    residual=res,
                ))
    worst = max((r.residual for r in rows), default=0.0)
    return StatesCheckResponse(states=rows, max_residual=worst)


class OracleRequest(BaseModel):
    model: ModelSpec
    k: int
    element: Optional[str] = None
    order: int = 12
    leading: int = 2
    tol: float = 1e-2


class OracleRow(BaseModel):
    predicted_re: Optional[float]
    predicted_im: Optional[float]
    extracted_re: float
    extracted_im: float
    abs_err: Optional[float]
    amplitude: float


class OracleResponse(BaseModel):
    ok: bool
    rows: list[OracleRow]


@app.post("/oracle/verify", response_model=OracleResponse)
def oracle_endpoint(req: OracleRequest) -> OracleResponse:
    from . import oracle as orc
    from .states import Chart, TestForm

    model = _build_model(req.model, "float")
    names = [req.element] if req.element else [e.name for e in model.elements]
    rows: list[OracleRow] = []
    ok = True
    for name in names:
        try:
            elem = model.element(name)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown element {name}")
        chart = Chart(model, elem)
        word2 = tuple(range(req.k))
        word1 = chart.complement(word2)
        psi2 = TestForm.gaussian(chart, word=word2)
        psi1 = TestForm.gaussian(chart, word=word1)
        series = orc.correlation_series(chart, req.k, psi1, psi2)
        est = orc.leading_poles(orc.extract_poles(series, req.order), req.leading)
        t_max = max(abs(z) for z in est.exponents) + 1.0
        single = FlowModel(
            dim=model.dim, connection=model.connection,
            fixed_points=tuple(f for f in model.fixed_points if f.name == name),
            orbits=tuple(o for o in model.orbits if o.name == name),
            quiver_edges=(), mode=model.mode,
        )
        preds = [complex(r.z) for r in spectrum.resonances(
            single, req.k, Box(t_max, t_max))]
        report = orc.match_spectrum(est, preds, tol=req.tol)
        ok = ok and report.ok
        for row in report.matched:
            rows.append(OracleRow(
                predicted_re=row.predicted.real, predicted_im=row.predicted.imag,
                extracted_re=row.pole.real, extracted_im=row.pole.imag,
                abs_err=row.abs_err, amplitude=abs(row.amplitude),
            ))
        for row in report.unmatched:
            rows.append(OracleRow(
                predicted_re=None, predicted_im=None,
                extracted_re=row.pole.real, extracted_im=row.pole.imag,
                abs_err=None, amplitude=abs(row.amplitude),
            ))
    return OracleResponse(ok=ok, rows=rows)


# ---------------------------------------------------------------------------
# quiver


class QuiverRequest(BaseModel):
    model: ModelSpec
    mode: Mode = "float"


class QuiverResponse(BaseModel):
    hasse_edges: list[tuple[str, str]]


@app.post("/quiver/hasse", response_model=QuiverResponse)
def quiver_endpoint(req: QuiverRequest) -> QuiverResponse:
    model = _build_model(req.model, req.mode)
    q = quiver_mod.quiver_of_model(model)
    return QuiverResponse(hasse_edges=list(quiver_mod.hasse(q)))


@app.get("/health")
def health():
    return {"status": "ok", "version": "0.1.0", "pi": math.pi}
