"""Local resonant-state germs and their pairings against test forms.

A germ is (Dirac derivative on the stable coordinates) x (monomial on the
unstable ones) x (Grassmann word of covector slots) x (bundle frame index),
with a periodic phase for closed orbits.  Pairings against polynomial-Gaussian
test forms evaluate in closed form (Gaussian moments); orbit pairings add a
quadrature over the periodic variable.

The eigen-equation is checked non-circularly: ``pullback_pair`` transports the
*test form* through the explicit linearized flow (composition with the model
flow map, covector transport by its transposed differential, bundle phase) and
re-pairs, so agreement with ``exp(t * eigenvalue) * pair`` is a genuine
integration identity rather than a restatement of the formula.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .calculus import Poly, gauss_derivative, gauss_integral
from .model import HALF_TWIST, CriticalElement, FlowModel
from .spectrum import ElementContext, context as spectrum_context

DEFAULT_NODES = 128


class StateError(ValueError):
    pass


# ---------------------------------------------------------------------------
# charts: canonical coordinates, slots, model generators


@dataclass(frozen=True)
class Slot:
    """One covector slot in canonical order, tied to its eigenvalue entry."""

    index: int
    label: str
    kind: str                      # real | plane+ | plane- | theta
    coords: tuple[int, ...]
    covector: tuple[complex, ...]
    stable: bool
    twist: Fraction
    mu: complex


class OrbitFrame:
    """Transverse generator A and 2P-periodic factor P(theta) of an orbit chart."""

    period: float
    a_matrix: np.ndarray

    def p_at(self, theta: float) -> np.ndarray:
        raise NotImplementedError

    def dp_at(self, theta: float) -> np.ndarray:
        raise NotImplementedError

    def exp_a(self, t: float) -> np.ndarray:
        from scipy.linalg import expm

        return expm(t * self.a_matrix)


class SyntheticOrbitFrame(OrbitFrame):
    """Model flow realizing declared orbit data in canonical coordinates.

    A is block diagonal from the eigenvalue entries; twisted slots are paired
    up and P(theta) rotates each pair by pi*theta/P, which reproduces exactly
    the negative Floquet multipliers.  Requires an even number of twisted
    slots (odd counts have negative monodromy determinant and are not
    realizable as periodic linear systems).
    """

    def __init__(self, chart: "Chart"):
        self.period = float(chart.ctx.elem.period)
        self.a_matrix = chart.block_generator()
        twisted = [s for s in chart.transverse_slots if s.twist == HALF_TWIST]
        if len(twisted) % 2:
            raise StateError(
                "odd twisted-slot count is not realizable (monodromy would "
                "have negative determinant)"
            )
        self._pairs = [
            (twisted[i].coords[0], twisted[i + 1].coords[0])
            for i in range(0, len(twisted), 2)
        ]
        self._d = chart.d

    def p_at(self, theta: float) -> np.ndarray:
        p = np.eye(self._d)
        ang = math.pi * theta / self.period
        c, s = math.cos(ang), math.sin(ang)
        for i, j in self._pairs:
            p[i, i] = c
            p[j, j] = c
            p[i, j] = -s
            p[j, i] = s
        return p

    def dp_at(self, theta: float) -> np.ndarray:
        dp = np.zeros((self._d, self._d))
        w = math.pi / self.period
        ang = w * theta
        c, s = math.cos(ang), math.sin(ang)
        for i, j in self._pairs:
            dp[i, i] = -s * w
            dp[j, j] = -s * w
            dp[i, j] = -c * w
            dp[j, i] = c * w
        return dp


class CoefficientOrbitFrame(OrbitFrame):
    """Orbit frame obtained by integrating a periodic coefficient.

    The Floquet data are conjugated into canonical block coordinates; P' is
    evaluated from the identity P'(theta) = A(theta) P(theta) - P(theta) A.
    """

    def __init__(self, coeff, tol: float = 1e-10):
        from . import floquet as _fl

        self._coeff = coeff
        frame = _fl.FloquetFrame(coeff, tol)
        s = canonical_basis_change(frame.monodromy)
        self._s = s
        self._s_inv = np.linalg.inv(s)
        self.period = coeff.period
        self.a_matrix = self._s_inv @ frame.generator @ s
        self._frame = frame

    def p_at(self, theta: float) -> np.ndarray:
        return self._s_inv @ self._frame.periodic_factor(theta) @ self._s

    def dp_at(self, theta: float) -> np.ndarray:
        p = self._frame.periodic_factor(theta)
        a_theta = self._coeff.evaluate(theta)
        dp = a_theta @ p - p @ self._frame.generator
        return self._s_inv @ dp @ self._s


def canonical_basis_change(m: np.ndarray) -> np.ndarray:
    """Real basis in which a diagonalizable hyperbolic M takes canonical
    block form (stable reals, stable pairs, unstable reals, unstable pairs),
    with plane blocks oriented so the +omega entry pairs with dz = e1 + i*e2.

    Repeated multipliers are handled through invariant subspaces (the g
    smallest singular directions of M - nu*I), which stays well conditioned
    where per-eigenvalue eigenvectors of a degenerate cluster would not.
    """
    from .floquet import REAL_EIG_TOL

    w = np.linalg.eigvals(m)
    n = m.shape[0]
    scale = float(np.max(np.abs(w)))
    tol = REAL_EIG_TOL * max(1.0, scale)
    reals = sorted(x.real for x in w if abs(x.imag) <= tol)
    pairs = sorted(
        (x for x in w if x.imag > tol), key=lambda x: (x.real, x.imag)
    )

    def cluster(values, close):
        out = []
        for x in values:
            if out and close(out[-1][0], x):
                out[-1] = (out[-1][0], out[-1][1] + 1)
            else:
                out.append((x, 1))
        return out

    blocks = []
    for nu, g in cluster(reals, lambda a, b: abs(a - b) <= tol):
        basis = _invariant_basis(m, nu, g).real
        chi = math.log(abs(nu))
        for i in range(g):
            blocks.append((chi >= 0, False, chi, 0.0, [basis[:, i]]))
    for nu, g in cluster(pairs, lambda a, b: abs(a - b) <= tol):
        basis = _invariant_basis(m, nu, g)
        chi = math.log(abs(nu))
        theta = abs(float(np.angle(nu)))
        for i in range(g):
            u = basis[:, i]
            blocks.append((chi >= 0, True, chi, theta, [u.real, -u.imag]))
    blocks.sort(key=lambda b: (b[0], b[1], b[2], b[3]))
    cols = [c for b in blocks for c in b[4]]
    s = np.column_stack(cols)
    if abs(np.linalg.det(s)) < 1e-10:
        raise StateError("eigenbasis is numerically singular")
    return s


def _invariant_basis(m: np.ndarray, nu: complex, g: int) -> np.ndarray:
    """The g right-singular directions of M - nu*I with smallest singular
    values: an orthonormal basis of the eigenvalue cluster's eigenspace."""
    a = m - nu * np.eye(m.shape[0])
    _, _, vh = np.linalg.svd(a)
    return vh.conj().T[:, m.shape[0] - g:]


class Chart:
    """Canonical linearized chart of one critical element (float arithmetic)."""

    def __init__(self, model: FlowModel, elem: CriticalElement,
                 frame: Optional[OrbitFrame] = None):
        if model.mode != "float":
            model = _as_float_model(model)
            elem = model.element(elem.name)
        self.model = model
        self.ctx: ElementContext = spectrum_context(model, elem)
        self.is_orbit = elem.is_orbit
        self.elem = elem

        slots: list[Slot] = []
        coord = 0
        entries = self.ctx.entries
        i = 0
        while i < len(entries):
            e = entries[i]
            if e.is_flow:
                slots.append(Slot(i, e.label, "theta", (), (), False,
                                  Fraction(0), 0j))
                i += 1
                continue
            if e.label.startswith(("dz", "dw")) and "bar" not in e.label:
                c1, c2 = coord, coord + 1
                coord += 2
                e2 = entries[i + 1]
                slots.append(Slot(i, e.label, "plane+", (c1, c2),
                                  (1.0, 1j), e.stable, e.twist, complex(e.mu)))
                slots.append(Slot(i + 1, e2.label, "plane-", (c1, c2),
                                  (1.0, -1j), e2.stable, e2.twist,
                                  complex(e2.mu)))
                i += 2
                continue
            slots.append(Slot(i, e.label, "real", (coord,), (1.0,),
                              e.stable, e.twist, complex(e.mu)))
            coord += 1
            i += 1
        self.slots = tuple(slots)
        self.d = coord
        self.transverse_slots = tuple(s for s in slots if s.kind != "theta")
        self.theta_slot = next((s for s in slots if s.kind == "theta"), None)
        self.stable_coords = sorted({c for s in slots if s.stable for c in s.coords})
        self.unstable_coords = sorted(
            {c for s in slots if s.kind != "theta" and not s.stable for c in s.coords}
        )
        self.period = float(elem.period) if self.is_orbit else None
        if self.is_orbit:
            self.frame = frame if frame is not None else SyntheticOrbitFrame(self)
            mismatch = float(np.max(np.abs(
                np.asarray(self.frame.a_matrix) - self.block_generator()
            )))
            if mismatch > 1e-6 * max(1.0, float(np.max(np.abs(self.block_generator())))):
                raise StateError(
                    "orbit frame generator disagrees with the element's "
                    f"canonical blocks (max deviation {mismatch:.2e}); declare "
                    "eigenvalues in the decomposition's canonical order"
                )
        else:
            self.frame = None

    # -- model generator ------------------------------------------------

    def block_generator(self) -> np.ndarray:
        a = np.zeros((self.d, self.d))
        for s in self.transverse_slots:
            if s.kind == "real":
                a[s.coords[0], s.coords[0]] = s.mu.real
            elif s.kind == "plane+":
                i, j = s.coords
                chi, om = s.mu.real, s.mu.imag
                a[i, i] = chi
                a[j, j] = chi
                a[i, j] = -om
                a[j, i] = om
        return a

    def exp_a(self, t: float) -> np.ndarray:
        if self.is_orbit:
            return self.frame.exp_a(t)
        from scipy.linalg import expm

        return expm(t * self.block_generator())

    def covector(self, slot: Slot) -> np.ndarray:
        v = np.zeros(self.d, dtype=complex)
        for c, comp in zip(slot.coords, slot.covector):
            v[c] = comp
        return v

    def complement(self, word: Sequence[int]) -> tuple[int, ...]:
        wset = set(word)
        return tuple(s.index for s in self.slots if s.index not in wset)


def _as_float_model(model: FlowModel) -> FlowModel:
    from . import modelfile

    return modelfile.model_from_dict(
        _floatify(modelfile.model_to_dict(model)), mode="float"
    )


def _floatify(doc):
    if isinstance(doc, dict):
        if "num" in doc and "den" in doc:
            v = doc["num"] / doc["den"]
            return v * math.pi if doc.get("times_pi") else v
        return {k: _floatify(v) for k, v in doc.items()}
    if isinstance(doc, list):
        return [_floatify(v) for v in doc]
    return doc


# ---------------------------------------------------------------------------
# states and test forms


@dataclass(frozen=True)
class GrassmannWord:
    selected: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "selected", tuple(sorted(self.selected)))

    @property
    def degree(self) -> int:
        return len(self.selected)


@dataclass(frozen=True)
class LocalState:
    chart: Chart
    alpha: tuple[int, ...]
    alpha_n: int
    word: tuple[int, ...]
    bundle: int
    eigenvalue: complex
    coefficient: complex = 1.0
    dirac_side: str = "stable"

    @property
    def element(self) -> str:
        return self.chart.elem.name


@dataclass(frozen=True)
class TestForm:
    """Polynomial x Gaussian test form with a covector word.

    ``poly`` is over the chart's transverse coordinates, the envelope is
    exp(-|x|^2 / width^2), and ``theta_mode`` adds exp(2*i*pi*m*theta/P) on
    orbit charts.
    """

    __test__ = False  # keep pytest from collecting this as a test class

    poly: Poly
    word: tuple[int, ...]
    width: float = 1.0
    theta_mode: float = 0

    @staticmethod
    def gaussian(chart: Chart, word: Sequence[int], width: float = 1.0,
                 monomials: Optional[dict] = None, theta_mode: int = 0) -> "TestForm":
        poly = Poly.const(1.0, chart.d)
        if monomials:
            poly = Poly(chart.d, {tuple(k): complex(v) for k, v in monomials.items()})
        return TestForm(poly, tuple(sorted(word)), width, theta_mode)


def coupling_form(chart: Chart, state: LocalState, width: float = 1.0) -> TestForm:
    """A test form that pairs non-trivially with the given germ.

    Polynomial part: the conjugate of the germ's Dirac/monomial symbol, so
    every Gaussian moment in the pairing is strictly positive; the theta mode
    matches the periodic phase whenever that phase has an integer exponent.
    """
    poly = Poly.const(1.0, chart.d)
    for slot in chart.transverse_slots:
        a = state.alpha[slot.index]
        if not a:
            continue
        if slot.kind == "real":
            base = Poly.var(slot.coords[0], chart.d)
        else:
            i, j = slot.coords
            if slot.stable:
                # the +omega Dirac entry differentiates along (1, -i): feed z
                sign = 1.0 if slot.kind == "plane+" else -1.0
            else:
                # the monomial w on the +omega entry pairs with conj(w)
                sign = -1.0 if slot.kind == "plane+" else 1.0
            base = Poly.linear(
                [1.0 if c == i else (sign * 1j if c == j else 0.0)
                 for c in range(chart.d)], chart.d)
        for _ in range(a):
            poly = poly * base
    mode = 0.0
    if chart.is_orbit:
        twist_dot = sum(
            float(s.twist) * state.alpha[s.index]
            for s in chart.transverse_slots if s.twist
        )
        exponent = state.alpha_n - twist_dot
        if abs(exponent - round(exponent)) < 1e-9:
            mode = float(round(exponent))
    return TestForm(poly, chart.complement(state.word), width, mode)


def build_state(chart: Chart, alpha, word, bundle: int, k: int,
                alpha_n: int = 0) -> LocalState:
    """Assemble a germ and compute its eigenvalue through the spectrum module."""
    word = tuple(sorted(word))
    if len(word) != k:
        raise StateError(f"word degree {len(word)} != k = {k}")
    if len(set(word)) != len(word):
        raise StateError("repeated covector slots")
    n_alpha = len(chart.ctx.alpha_entries)
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != n_alpha:
        raise StateError(f"alpha must have {n_alpha} components")
    if any(a < 0 for a in alpha):
        raise StateError("alpha components must be nonnegative")
    if not 1 <= bundle <= chart.ctx.rank:
        raise StateError(f"bundle index {bundle} outside 1..{chart.ctx.rank}")
    if not chart.is_orbit and alpha_n:
        raise StateError("alpha_n is only meaningful for closed orbits")
    for idx in word:
        if idx >= len(chart.ctx.entries):
            raise StateError(f"slot {idx} outside the pool")
    lam = chart.ctx.lam(alpha, alpha_n)
    delta = chart.ctx.delta(bundle, word)
    return LocalState(chart, alpha, alpha_n, word, bundle,
                      complex(lam + delta))


# ---------------------------------------------------------------------------
# transported forms


@dataclass(frozen=True)
class _Row:
    vec: np.ndarray                 # transverse covector components (complex)
    theta: complex = 0.0            # constant dtheta component
    theta_poly: Optional[Poly] = None  # x-linear dtheta component


@dataclass(frozen=True)
class _FormData:
    poly: Poly
    q: np.ndarray
    coeff: complex
    rows: tuple[_Row, ...]


class TransportedForm:
    """phi^{t*} psi, evaluated lazily in the chart coordinates.

    ``data_at(theta)`` composes the base form at theta + t with the linear
    flow map L = P(theta+t) exp(tA) P(theta)^{-1}; covectors pick up x-linear
    dtheta components through dL/dtheta.  Composition of transports nests.
    """

    def __init__(self, chart: Chart, base, t: float = 0.0):
        self.chart = chart
        self.base = base
        self.t = float(t)

    def shifted(self, extra_t: float) -> "TransportedForm":
        return TransportedForm(self.chart, self, extra_t)

    def _base_data(self, theta: Optional[float]) -> _FormData:
        chart, psi = self.chart, self.base
        if isinstance(psi, TransportedForm):
            raise AssertionError("resolved elsewhere")
        q = np.eye(chart.d) / psi.width**2
        coeff = 1.0 + 0j
        if chart.is_orbit and psi.theta_mode:
            coeff = cmath.exp(2j * math.pi * psi.theta_mode * theta / chart.period)
        rows = []
        for idx in psi.word:
            slot = chart.slots[idx]
            if slot.kind == "theta":
                rows.append(_Row(np.zeros(chart.d, dtype=complex), 1.0))
            else:
                rows.append(_Row(chart.covector(slot)))
        return _FormData(psi.poly, q, coeff, tuple(rows))

    def data_at(self, theta: Optional[float] = None) -> _FormData:
        chart = self.chart
        if self.t == 0.0:
            if isinstance(self.base, TransportedForm):
                return self.base.data_at(theta)
            return self._base_data(theta)

        t = self.t
        if not chart.is_orbit:
            inner = (self.base.data_at(None) if isinstance(self.base, TransportedForm)
                     else self._base_data(None))
            l_map = chart.exp_a(t)
            return self._compose(inner, l_map, None)

        frame = chart.frame
        p_here = frame.p_at(theta)
        p_there = frame.p_at(theta + t)
        exp_a = frame.exp_a(t)
        p_inv = np.linalg.inv(p_here)
        l_map = p_there @ exp_a @ p_inv
        dl = (frame.dp_at(theta + t) @ exp_a @ p_inv
              - p_there @ exp_a @ p_inv @ frame.dp_at(theta) @ p_inv)
        inner = (self.base.data_at(theta + t) if isinstance(self.base, TransportedForm)
                 else self._base_data(theta + t))
        return self._compose(inner, l_map, dl)

    def _compose(self, inner: _FormData, l_map: np.ndarray,
                 dl: Optional[np.ndarray]) -> _FormData:
        d = self.chart.d
        poly = inner.poly.compose_linear(l_map)
        q = l_map.T @ inner.q @ l_map
        rows = []
        for row in inner.rows:
            vec = l_map.T @ row.vec
            tp = row.theta_poly.compose_linear(l_map) if row.theta_poly else None
            if dl is not None and np.any(row.vec):
                extra = Poly.linear(dl.T @ row.vec, d)
                tp = extra if tp is None else tp + extra
            rows.append(_Row(vec, row.theta, tp))
        return _FormData(poly, q, inner.coeff, tuple(rows))


# ---------------------------------------------------------------------------
# pairing engine


def _dirac_ops(chart: Chart, state: LocalState) -> list[tuple[tuple[int, ...], complex]]:
    """Expand the Dirac-derivative multi-operator over real coordinates."""
    stable_side = state.dirac_side == "stable"
    ops: dict[tuple[int, ...], complex] = {tuple([0] * chart.d): 1.0 + 0j}

    def convolve(direction: dict[int, complex], times: int):
        nonlocal ops
        for _ in range(times):
            new: dict[tuple[int, ...], complex] = {}
            for e, c in ops.items():
                for coord, comp in direction.items():
                    e2 = list(e)
                    e2[coord] += 1
                    key = tuple(e2)
                    new[key] = new.get(key, 0) + c * comp
            ops = new

    for slot in chart.transverse_slots:
        if slot.stable != stable_side:
            continue
        a = state.alpha[slot.index]
        if not a:
            continue
        if slot.kind == "real":
            convolve({slot.coords[0]: 1.0}, a)
        else:
            # derivative directions transform by the flow map itself (not its
            # transpose), so the direction scaling as exp(t*(chi + i*omega))
            # is the conjugate one: the +omega entry differentiates along
            # (1, -i) and the -omega entry along (1, +i)
            i, j = slot.coords
            sign = -1.0 if slot.kind == "plane+" else 1.0
            convolve({i: 1.0, j: sign * 1j}, a)
    return list(ops.items())


def _monomial_poly(chart: Chart, state: LocalState) -> Poly:
    stable_side = state.dirac_side == "stable"
    poly = Poly.const(1.0, chart.d)
    for slot in chart.transverse_slots:
        if slot.stable == stable_side:
            continue
        a = state.alpha[slot.index]
        if not a:
            continue
        if slot.kind == "real":
            base = Poly.var(slot.coords[0], chart.d)
        else:
            i, j = slot.coords
            sign = 1.0 if slot.kind == "plane+" else -1.0
            base = Poly.linear(
                [1.0 if c == i else (sign * 1j if c == j else 0.0)
                 for c in range(chart.d)], chart.d)
        for _ in range(a):
            poly = poly * base
    return poly


def _dirac_value(chart: Chart, state: LocalState, f_poly: Poly,
                 q: np.ndarray, l_map: Optional[np.ndarray]) -> complex:
    """<Dirac-derivative x monomial, (f_poly * gauss) o L> over the chart."""
    if l_map is not None:
        f_poly = f_poly.compose_linear(l_map)
        q = l_map.T @ q @ l_map
    dirac_coords = (chart.stable_coords if state.dirac_side == "stable"
                    else chart.unstable_coords)
    free_coords = (chart.unstable_coords if state.dirac_side == "stable"
                   else chart.stable_coords)
    monomial = _monomial_poly(chart, state)
    total = 0j
    q_sub = q[np.ix_(free_coords, free_coords)] if free_coords else None
    for exps, coeff in _dirac_ops(chart, state):
        g = f_poly
        order = sum(exps)
        for coord, p in enumerate(exps):
            for _ in range(p):
                g = gauss_derivative(g, q, coord)
        g = g.subs_zero(dirac_coords)
        g = g * monomial
        g = g.subs_zero(dirac_coords)  # monomial never touches them; cheap guard
        if free_coords:
            val = gauss_integral(g.restrict(free_coords), q_sub)
        else:
            val = g.eval([0.0] * chart.d)
        total += coeff * (-1) ** order * val
    return total


def _det_with_theta(state_rows: list[_Row], psi_rows: Sequence[_Row],
                    d: int, has_theta: bool):
    """Wedge determinant of all rows; returns (constant, Poly-or-None)."""
    rows = list(state_rows) + list(psi_rows)
    if not has_theta:
        mat = np.array([r.vec for r in rows])
        if mat.shape[0] != d:
            raise StateError(
                f"degree mismatch: {mat.shape[0]} covectors in dimension {d}"
            )
        return complex(np.linalg.det(mat)) if d else 1.0 + 0j, None
    if len(rows) != d + 1:
        raise StateError(
            f"degree mismatch: {len(rows)} covectors in dimension {d + 1}"
        )
    const = 0j
    poly_part: Optional[Poly] = None
    for i, row in enumerate(rows):
        if row.theta == 0 and row.theta_poly is None:
            continue
        minor_rows = [r.vec for j, r in enumerate(rows) if j != i]
        minor = complex(np.linalg.det(np.array(minor_rows))) if d else 1.0 + 0j
        sign = (-1) ** (i + d)
        if row.theta != 0:
            const += sign * row.theta * minor
        if row.theta_poly is not None:
            contrib = row.theta_poly.scale(sign * minor)
            poly_part = contrib if poly_part is None else poly_part + contrib
    return const, poly_part


def _state_rows(state: LocalState, theta: Optional[float]):
    """Transported covector rows of the state's word, and the word phase."""
    chart = state.chart
    rows: list[_Row] = []
    phase = 1.0 + 0j
    if chart.is_orbit:
        p_inv_t = np.linalg.inv(chart.frame.p_at(theta)).T
    for idx in state.word:
        slot = chart.slots[idx]
        if slot.kind == "theta":
            rows.append(_Row(np.zeros(chart.d, dtype=complex), 1.0))
            continue
        vec = chart.covector(slot)
        if chart.is_orbit:
            vec = p_inv_t @ vec
            if slot.twist:
                phase *= cmath.exp(2j * math.pi * float(slot.twist)
                                   * theta / chart.period)
        rows.append(_Row(vec))
    return rows, phase


def _state_phase(state: LocalState, theta: float) -> complex:
    # the phase exp(2*i*pi*(twist.alpha - alpha_n) theta / P), with the twist
    # dot product over ALL transverse slots: both odd Dirac orders and odd
    # monomials on negative-multiplier slots flip sign under the monodromy
    # and need the half-integer exponent for P-periodicity.  Its flow
    # pullback produces exactly the lattice value lam(alpha, alpha_n).
    chart = state.chart
    twist_dot = 0.0
    for slot in chart.transverse_slots:
        if slot.twist:
            twist_dot += float(slot.twist) * state.alpha[slot.index]
    exponent = twist_dot - state.alpha_n
    return cmath.exp(2j * math.pi * exponent * theta / chart.period)


def pair(state: LocalState, psi, nodes: int = DEFAULT_NODES,
         origin: float = 0.0) -> complex:
    """<state, psi> by Gaussian moments (and theta quadrature for orbits)."""
    chart = state.chart
    form = psi if isinstance(psi, TransportedForm) else TransportedForm(chart, psi)

    if not chart.is_orbit:
        data = form.data_at(None)
        srows, _ = _state_rows(state, None)
        det_c, det_p = _det_with_theta(srows, data.rows, chart.d, False)
        f_poly = data.poly.scale(det_c)
        value = _dirac_value(chart, state, f_poly, data.q, None)
        return state.coefficient * data.coeff * value

    period = chart.period
    step = period / nodes
    total = 0j
    for i in range(nodes):
        theta = origin + (i + 0.5) * step
        data = form.data_at(theta)
        srows, word_phase = _state_rows(state, theta)
        det_c, det_p = _det_with_theta(srows, data.rows, chart.d, True)
        f_poly = data.poly.scale(det_c)
        if det_p is not None:
            f_poly = f_poly + data.poly * det_p
        p_here = chart.frame.p_at(theta)
        det_pm = float(np.linalg.det(p_here))
        value = _dirac_value(chart, state, f_poly, data.q, p_here)
        total += (_state_phase(state, theta) * word_phase * data.coeff
                  * det_pm * value)
    return state.coefficient * total * step


def pullback_pair(state: LocalState, psi, t: float,
                  nodes: int = DEFAULT_NODES) -> complex:
    """<Phi_k^{-t*} state, psi> = <state, phi^{t*} psi> x bundle phase."""
    chart = state.chart
    base = psi if isinstance(psi, TransportedForm) else TransportedForm(chart, psi)
    moved = base.shifted(t) if t != 0.0 else base
    value = pair(state, moved, nodes=nodes)
    if chart.is_orbit:
        gamma = complex(chart.ctx.gammas[state.bundle - 1])
        value *= cmath.exp(-2j * math.pi * gamma * t / chart.period)
    return value


def check_eigen(state: LocalState, psi, t_grid: Sequence[float],
                nodes: int = DEFAULT_NODES) -> float:
    """max_t |pullback_pair - e^{t*lambda} pair| / (1 + |pair|)."""
    base = pair(state, psi, nodes=nodes)
    worst = 0.0
    for t in t_grid:
        lhs = pullback_pair(state, psi, t, nodes=nodes)
        rhs = cmath.exp(t * state.eigenvalue) * base
        worst = max(worst, abs(lhs - rhs) / (1.0 + abs(base)))
    return worst


# ---------------------------------------------------------------------------
# dual states and wedge mass


def dual_state(state: LocalState) -> LocalState:
    """The stable-side partner of a principal (alpha = 0) germ.

    Dirac and monomial slots swap, the word complements, and the periodic
    index is chosen so the wedge with the original state is flow-invariant;
    the coefficient normalizes the wedge mass to the invariant measure.
    """
    if any(state.alpha):
        raise StateError("dual states are defined for alpha = 0 only")
    chart = state.chart
    word = chart.complement(state.word)
    twist_total = sum(
        (s.twist for s in chart.transverse_slots), Fraction(0)
    )
    if chart.is_orbit:
        if twist_total.denominator != 1:
            raise StateError(
                "dual state needs integer total twist (orientation parity)"
            )
        alpha_n = int(twist_total)
    else:
        alpha_n = 0
    dual = LocalState(chart, tuple([0] * len(state.alpha)), alpha_n, word,
                      state.bundle, -state.eigenvalue,
                      dirac_side="unstable" if state.dirac_side == "stable"
                      else "stable")
    srows, _ = _state_rows(state, 0.0 if chart.is_orbit else None)
    drows, _ = _state_rows(dual, 0.0 if chart.is_orbit else None)
    det0, _ = _det_with_theta(srows, drows, chart.d, chart.is_orbit)
    if det0 == 0:
        raise StateError("degenerate wedge between state and dual")
    return replace(dual, coefficient=1.0 / det0)


def wedge_mass(state: LocalState, dual: LocalState,
               nodes: int = DEFAULT_NODES) -> complex:
    """Total mass of state ^ dual against the constant test function.

    Equals 1 at fixed points (Dirac measure) and the period for closed orbits
    (invariant Lebesgue measure along the orbit), evaluated by honest
    quadrature of the wedge integrand.
    """
    chart = state.chart
    if not chart.is_orbit:
        srows, _ = _state_rows(state, None)
        drows, _ = _state_rows(dual, None)
        det_c, _ = _det_with_theta(srows, drows, chart.d, False)
        return state.coefficient * dual.coefficient * det_c

    period = chart.period
    step = period / nodes
    total = 0j
    for i in range(nodes):
        theta = (i + 0.5) * step
        srows, phase_s = _state_rows(state, theta)
        drows, phase_d = _state_rows(dual, theta)
        det_c, _ = _det_with_theta(srows, drows, chart.d, True)
        det_pm = float(np.linalg.det(chart.frame.p_at(theta)))
        total += (phase_s * phase_d * _state_phase(state, theta)
                  * _state_phase(dual, theta) * det_c * det_pm)
    return state.coefficient * dual.coefficient * total * step
