"""Independent numerical verification of predicted spectra.

Correlation functions of the explicit linearized model flows are sampled in
closed form (Gaussian moments, plus theta quadrature on orbit charts), their
decay/oscillation exponents extracted by the matrix-pencil method, and the
result matched against a predicted resonance set.  Nothing here reuses the
lattice formulas: agreement is evidence, disagreement is a bug report.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import numpy.linalg as la

from .calculus import gauss_integral
from .states import Chart, TestForm, TransportedForm, _Row, _det_with_theta

DEFAULT_SAMPLES = 512
# samples here are closed-form evaluations (exact to roundoff), so the usable
# subspace reaches far below the usual noisy-data heuristic floor
RANK_FLOOR = 1e-13


class OracleError(RuntimeError):
    pass


class RankCollapseError(OracleError):
    pass


@dataclass(frozen=True)
class CorrelationSeries:
    t_grid: np.ndarray
    values: np.ndarray
    element: str
    degree: int

    def __post_init__(self):
        t = np.asarray(self.t_grid, dtype=float)
        if np.any(np.diff(t) <= 0):
            raise ValueError("t_grid must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("correlation values must be finite")


@dataclass(frozen=True)
class PoleEstimate:
    exponents: tuple[complex, ...]
    amplitudes: tuple[complex, ...]
    residual: float


def _form_rows(chart: Chart, psi: TestForm):
    rows = []
    for idx in psi.word:
        slot = chart.slots[idx]
        if slot.kind == "theta":
            rows.append(_Row(np.zeros(chart.d, dtype=complex), 1.0))
        else:
            rows.append(_Row(chart.covector(slot)))
    return rows


def _correlation_sample(chart: Chart, psi1: TestForm, moved: TransportedForm,
                        nodes: int) -> complex:
    """integral of psi1 wedge (transported psi2) over the model chart."""
    q1 = np.eye(chart.d) / psi1.width**2
    rows1 = _form_rows(chart, psi1)

    if not chart.is_orbit:
        data = moved.data_at(None)
        det_c, _ = _det_with_theta(rows1, data.rows, chart.d, False)
        poly = (psi1.poly * data.poly).scale(det_c)
        return complex(data.coeff * gauss_integral(poly, q1 + data.q))

    period = chart.period
    step = period / nodes
    total = 0j
    for i in range(nodes):
        theta = (i + 0.5) * step
        data = moved.data_at(theta)
        det_c, det_p = _det_with_theta(rows1, data.rows, chart.d, True)
        poly = (psi1.poly * data.poly).scale(det_c)
        if det_p is not None:
            poly = poly + psi1.poly * data.poly * det_p
        coeff = data.coeff
        if psi1.theta_mode:
            coeff *= cmath.exp(2j * math.pi * psi1.theta_mode * theta / period)
        total += coeff * gauss_integral(poly, q1 + data.q)
    return complex(total * step)


def correlation_series(chart: Chart, k: int, psi1: TestForm, psi2: TestForm,
                       t_grid: Optional[Sequence[float]] = None,
                       bundle: int = 1, nodes: int = 128) -> CorrelationSeries:
    """C(t) = integral psi1 wedge Phi_k^{-t*} psi2 on the linearized model flow.

    Degrees must be complementary (len(psi2.word) = k, psi1 the rest); the
    bundle index applies the holonomy phase on orbit charts.
    """
    if len(psi2.word) != k:
        raise ValueError(f"psi2 word degree {len(psi2.word)} != k = {k}")
    total_deg = len(psi1.word) + len(psi2.word)
    full = chart.d + (1 if chart.is_orbit else 0)
    if total_deg != full:
        raise ValueError(
            f"degrees {len(psi1.word)} + {k} do not wedge to dimension {full}"
        )
    if t_grid is None:
        rate = min(abs(s.mu.real) for s in chart.transverse_slots)
        t_grid = np.linspace(0.0, 20.0 / rate, DEFAULT_SAMPLES)
    t_grid = np.asarray(t_grid, dtype=float)

    gamma = 0j
    if chart.is_orbit:
        gamma = complex(chart.ctx.gammas[bundle - 1])

    values = np.empty(len(t_grid), dtype=complex)
    for i, t in enumerate(t_grid):
        moved = TransportedForm(chart, psi2, -t) if t else TransportedForm(chart, psi2)
        v = _correlation_sample(chart, psi1, moved, nodes)
        if chart.is_orbit and gamma != 0:
            v *= cmath.exp(-2j * math.pi * gamma * t / chart.period)
        values[i] = v
    return CorrelationSeries(t_grid, values, chart.elem.name, k)


def extract_poles(series: CorrelationSeries, model_order: int) -> PoleEstimate:
    """Matrix-pencil (Hankel SVD) estimate of exponents s with C(t) ~ sum a e^{st}.

    Singular values below RANK_FLOOR times the largest are truncated, so the
    requested order is an upper bound; the residual is the relative l2 misfit
    of the reconstructed series.
    """
    c = np.asarray(series.values, dtype=complex)
    t = np.asarray(series.t_grid, dtype=float)
    n = len(c)
    if model_order < 1:
        raise ValueError("model_order must be >= 1")
    if model_order > n // 2:
        raise ValueError("model_order must be at most half the sample count")
    dt = t[1] - t[0]
    if not np.allclose(np.diff(t), dt, rtol=1e-9, atol=1e-12):
        raise ValueError("extract_poles needs a uniform time grid")

    pencil = n // 2
    rows = n - pencil
    hank = np.empty((rows, pencil + 1), dtype=complex)
    for i in range(rows):
        hank[i] = c[i : i + pencil + 1]

    u, svals, _ = la.svd(hank, full_matrices=False)
    if svals[0] == 0:
        raise RankCollapseError("signal is numerically zero")
    rank = int(np.sum(svals > RANK_FLOOR * svals[0]))
    rank = min(rank, model_order)
    if rank == 0:
        raise RankCollapseError("signal is numerically zero")
    # left singular vectors inherit the un-conjugated Vandermonde structure
    u = u[:, :rank]
    u_up, u_dn = u[:-1, :], u[1:, :]
    zs = la.eigvals(la.pinv(u_up) @ u_dn)
    zs = zs[np.abs(zs) > 1e-14]
    exponents = np.log(zs) / dt

    basis = np.exp(np.outer(t, exponents))
    amps, *_ = la.lstsq(basis, c, rcond=None)
    fit = basis @ amps
    denom = la.norm(c)
    residual = float(la.norm(c - fit) / denom) if denom > 0 else 0.0

    order = np.argsort(-exponents.real)
    return PoleEstimate(
        tuple(complex(x) for x in exponents[order]),
        tuple(complex(a) for a in amps[order]),
        residual,
    )


def leading_poles(estimate: PoleEstimate, count: int,
                  amplitude_floor: float = 1e-6) -> PoleEstimate:
    """Restrict to the ``count`` slowest-decaying poles (by descending Re).

    Poles whose amplitude is negligible relative to the strongest one are
    subspace-noise artifacts and dropped first; deeper poles of a truncated
    infinite exponential sum absorb the tail and are not individually
    meaningful, so verification holds only the leading ones.
    """
    scale = max((abs(a) for a in estimate.amplitudes), default=0.0)
    kept = [
        (z, a) for z, a in zip(estimate.exponents, estimate.amplitudes)
        if abs(a) >= amplitude_floor * scale
    ]
    kept = kept[:count]
    return PoleEstimate(tuple(z for z, _ in kept),
                        tuple(a for _, a in kept), estimate.residual)


@dataclass(frozen=True)
class MatchRow:
    pole: complex
    amplitude: complex
    predicted: Optional[complex]
    abs_err: Optional[float]


@dataclass(frozen=True)
class MatchReport:
    matched: tuple[MatchRow, ...]
    unmatched: tuple[MatchRow, ...]     # extracted poles with no prediction in range
    missed: tuple[MatchRow, ...]        # unmatched poles above the amplitude floor

    @property
    def ok(self) -> bool:
        return not self.missed


def match_spectrum(estimate: PoleEstimate, predicted: Sequence[complex],
                   tol: float = 1e-3,
                   amplitude_floor: float = 1e-6) -> MatchReport:
    """Greedy nearest matching of extracted poles against predictions.

    A prediction with no pole partner is fine (the test form may simply not
    excite it); an extracted pole with amplitude above the floor and no
    predicted partner within ``tol`` falsifies the prediction set.
    """
    preds = [complex(z) for z in predicted]
    amp_scale = max((abs(a) for a in estimate.amplitudes), default=0.0)
    floor = amplitude_floor * amp_scale
    order = sorted(range(len(estimate.exponents)),
                   key=lambda i: -abs(estimate.amplitudes[i]))
    used = [False] * len(preds)
    matched, unmatched, missed = [], [], []
    for i in order:
        pole, amp = estimate.exponents[i], estimate.amplitudes[i]
        best, best_err = None, None
        for j, z in enumerate(preds):
            if used[j]:
                continue
            err = abs(pole - z)
            if err <= tol and (best_err is None or err < best_err):
                best, best_err = j, err
        if best is not None:
            used[best] = True
            matched.append(MatchRow(pole, amp, preds[best], best_err))
        else:
            row = MatchRow(pole, amp, None, None)
            unmatched.append(row)
            if abs(amp) >= floor:
                missed.append(row)
    return MatchReport(tuple(matched), tuple(unmatched), tuple(missed))
