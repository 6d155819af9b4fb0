"""Spectral formulas for the resonance structure of a validated flow model.

Every operation here is an exact combinatorial formula in the linearization
data: shift multisets over Grassmann/bundle frames, scalar resonance lattices
attached to each critical element, the assembled resonance multiset in a box,
the imaginary-axis spectrum with its counting law, vertical band structure,
and the polytope-volume Weyl asymptotics.

Conventions (fixed throughout):

* Each eigenvalue entry contributes ``mu = chi + i*omega``; rotation blocks
  appear as two conjugate entries.
* Entries are reordered canonically per element: stable real, stable plane
  pairs, unstable real, unstable plane pairs, then (for orbits) the flow slot.
  Masks and alpha multi-indices refer to this canonical order.
* A selection mask of size k shifts the scalar eigenvalue by
  ``beta = sum_selected (mu + 2*i*pi*twist/P)`` and the bundle index j by
  ``2*i*pi*gamma_j/P``; the shift datum is ``delta = -(beta + 2*i*pi*gamma_j/P)``.
* The scalar lattice of an element is
  ``lambda_alpha = sum_stable mu + sum_stable alpha*(mu - 2*i*pi*twist/P)
  - sum_unstable alpha*(mu + 2*i*pi*twist/P) [+ 2*i*pi*alpha_n/P]`` with
  alpha in N^d (and alpha_n in Z for orbits).  Twisting phases attach to both
  stable and unstable components: odd orders on negative-multiplier slots flip
  sign under the monodromy either way (the sign in front is immaterial modulo
  the alpha_n lattice).
* Resonances are the multiset ``{lambda_alpha + delta}`` merged under the
  active arithmetic mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Optional

from .exactnum import Exact, ExactComplex
from .model import (
    MODE_EXACT,
    ClosedOrbitElement,
    ComplexScalar,
    ConnectionData,
    CriticalElement,
    FlowModel,
    Scalar,
    element_dims,
)

MERGE_TOL = 1e-9
BOX_SLACK = 1e-12


class SpectrumError(ValueError):
    pass


class NonUnitaryError(SpectrumError):
    """Raised when an imaginary-axis operation meets complex holonomy exponents."""


# ---------------------------------------------------------------------------
# small mode-generic arithmetic helpers


def _c_re(z) -> Scalar:
    return z.re if isinstance(z, ExactComplex) else z.real


def _c_im(z) -> Scalar:
    return z.im if isinstance(z, ExactComplex) else z.imag


def _times_i(z):
    return z.times_i() if isinstance(z, ExactComplex) else z * 1j


def _as_complex(z) -> complex:
    return complex(z)


def _floor_ratio(num: Scalar, den: Scalar) -> int:
    """floor(num/den) for den > 0, exact in exact mode, float estimate refined."""
    m = math.floor(float(num) / float(den) + 1e-12)
    while den * (m + 1) <= num:
        m += 1
    while den * m > num:
        m -= 1
    return m


def _ceil_ratio(num: Scalar, den: Scalar) -> int:
    return -_floor_ratio(-num, den)


@dataclass(frozen=True)
class Box:
    """Search box: Re(z) >= -t_re and |Im(z)| <= t_im (None = unbounded)."""

    t_re: Optional[float]
    t_im: Optional[float]


def _merge_points(pairs, exact: bool):
    """Group (value, payload) pairs by coincident value.

    Exact mode decides equality exactly; float mode clusters with the relative
    tolerance |z1 - z2| <= MERGE_TOL * (1 + |z1|), first on real parts, then on
    imaginary parts within each real cluster.
    """
    if exact:
        groups: dict = {}
        for z, payload in pairs:
            groups.setdefault(z, []).append(payload)
        return list(groups.items())

    pts = sorted(pairs, key=lambda p: (p[0].real, p[0].imag))
    out = []
    i = 0
    while i < len(pts):
        j = i + 1
        tol = MERGE_TOL * (1.0 + abs(pts[i][0]))
        while j < len(pts) and pts[j][0].real - pts[j - 1][0].real <= tol:
            j += 1
        chunk = sorted(pts[i:j], key=lambda p: (p[0].imag, p[0].real))
        a = 0
        while a < len(chunk):
            b = a + 1
            tol2 = MERGE_TOL * (1.0 + abs(chunk[a][0]))
            while b < len(chunk) and chunk[b][0].imag - chunk[b - 1][0].imag <= tol2:
                b += 1
            out.append((chunk[a][0], [p for _, p in chunk[a:b]]))
            a = b
        i = j
    return out


# ---------------------------------------------------------------------------
# canonical per-element context


@dataclass(frozen=True)
class Entry:
    """One slot of the selection pool in canonical order."""

    mu: ComplexScalar
    chi_abs: Scalar
    twist: Fraction
    stable: bool
    is_flow: bool
    label: str


class ElementContext:
    """Canonicalized spectral data of one critical element.

    Carries the ordered selection pool, the scalar-lattice coefficients and
    the bundle shifts; every spectrum operation enumerates through one of
    these.
    """

    def __init__(self, elem: CriticalElement, dim: int,
                 connection: ConnectionData, exact: bool):
        self.elem = elem
        self.dim = dim
        self.exact = exact
        self.rank = connection.rank
        self.is_orbit = elem.is_orbit

        ordered = _canonical_entries(elem, exact)
        if elem.is_orbit:
            step = _two_pi_over(elem.period, exact)
            flow = Entry(self._c(0, 0), self._s(0), Fraction(0), False, True, "dtheta")
            ordered = ordered + [flow]
            gammas = connection.gammas(elem.name)
        else:
            step = None
            gammas = tuple(self._c(0, 0) for _ in range(connection.rank))
        self.entries: tuple[Entry, ...] = tuple(ordered)
        self.step: Optional[Scalar] = step
        self.gammas = gammas

        self.alpha_entries = [e for e in self.entries if not e.is_flow]
        # base = sum of stable mu (imaginary parts cancel over conjugate pairs)
        base = self._c(0, 0)
        for e in self.alpha_entries:
            if e.stable:
                base = base + e.mu
        self.base: ComplexScalar = base

        # per-entry lattice coefficient: +(mu - twist phase) on stable
        # entries, -(mu + twist phase) on unstable ones.  The twisting phase
        # attaches to both sides: a Dirac derivative of odd order on a
        # negative-multiplier slot flips sign under the monodromy exactly like
        # an odd monomial does, shifting its vertical lattice by half a step.
        coeffs = []
        for e in self.alpha_entries:
            if e.stable:
                coeffs.append(e.mu - self._twist_phase(e))
            else:
                coeffs.append(-(e.mu + self._twist_phase(e)))
        self.lam_coeff = coeffs

        # per-pool-entry shift contribution mu + 2*i*pi*twist/P
        self.beta_coeff = [e.mu + self._twist_phase(e) for e in self.entries]

        # bundle shifts 2*i*pi*gamma_j/P (zero for fixed points)
        if elem.is_orbit:
            self.gamma_shift = [_times_i(g * self.step) for g in gammas]
        else:
            self.gamma_shift = [self._c(0, 0) for _ in range(self.rank)]

    # -- scalar constructors -------------------------------------------

    def _s(self, x) -> Scalar:
        return Exact.of(x) if self.exact else float(x)

    def _c(self, re, im) -> ComplexScalar:
        if self.exact:
            return ExactComplex(Exact.of(re), Exact.of(im))
        return complex(float(re), float(im))

    def _twist_phase(self, e: Entry) -> ComplexScalar:
        if not self.is_orbit or e.twist == 0:
            return self._c(0, 0)
        if self.exact:
            return ExactComplex(Exact(0), self.step * e.twist)
        return complex(0.0, self.step * float(e.twist))

    # -- formulas --------------------------------------------------------

    def lam(self, alpha: tuple[int, ...], alpha_n: int = 0) -> ComplexScalar:
        z = self.base
        for a, coeff in zip(alpha, self.lam_coeff):
            if a:
                z = z + coeff * a
        if self.is_orbit and alpha_n:
            if self.exact:
                z = z + ExactComplex(Exact(0), self.step * alpha_n)
            else:
                z = z + complex(0.0, self.step * alpha_n)
        return z

    def delta(self, bundle_j: int, mask: tuple[int, ...]) -> ComplexScalar:
        beta = self._c(0, 0)
        for idx in mask:
            beta = beta + self.beta_coeff[idx]
        return -(beta + self.gamma_shift[bundle_j - 1])

    def masks(self, k: int):
        return combinations(range(len(self.entries)), k)


def _canonical_entries(elem: CriticalElement, exact: bool) -> list[Entry]:
    """Reorder declared eigenvalues: stable reals, stable pairs, unstable
    reals, unstable pairs; conjugate partners adjacent as (+omega, -omega)."""

    def mk(e, label):
        if exact:
            mu = ExactComplex(e.chi, e.omega)
            chi_abs = abs(e.chi)
        else:
            mu = complex(float(e.chi), float(e.omega))
            chi_abs = abs(float(e.chi))
        return Entry(mu, chi_abs, e.twist, e.stable, False, label)

    out = []
    for stable in (True, False):
        side = "x" if stable else "y"
        group = [e for e in elem.eigenvalues if e.stable == stable]
        reals = [e for e in group if e.is_real_block]
        for i, e in enumerate(reals):
            out.append(mk(e, f"d{side}{i}"))
        planes = [e for e in group if not e.is_real_block]
        plus = sorted(
            (e for e in planes if _pos(e.omega)),
            key=lambda e: (float(e.chi), float(e.omega)),
        )
        minus = sorted(
            (e for e in planes if not _pos(e.omega)),
            key=lambda e: (float(e.chi), -float(e.omega)),
        )
        sym = "z" if stable else "w"
        for i, (ep, em) in enumerate(zip(plus, minus)):
            out.append(mk(ep, f"d{sym}{i}"))
            out.append(mk(em, f"d{sym}bar{i}"))
    return out


def _pos(x) -> bool:
    return (x.sign() > 0) if isinstance(x, Exact) else x > 0


def _two_pi_over(period: Scalar, exact: bool) -> Scalar:
    if exact:
        return (Exact.pi(2)) / Exact.of(period)
    return 2.0 * math.pi / float(period)


def context(model: FlowModel, elem: CriticalElement) -> ElementContext:
    return ElementContext(elem, model.dim, model.connection,
                          model.mode == MODE_EXACT)


# ---------------------------------------------------------------------------
# shift sets


@dataclass(frozen=True)
class ShiftDatum:
    delta: ComplexScalar
    multiplicity: int
    witnesses: tuple[tuple[int, tuple[int, ...]], ...]  # (bundle j, mask)


def shift_set(ctx: ElementContext, k: int) -> list[ShiftDatum]:
    """The multiset D_k of eigenvalue shifts on degree-k frames, deduplicated.

    Total multiplicity is always N * C(pool, k) with pool size equal to the
    ambient dimension.
    """
    n = len(ctx.entries)
    if not 0 <= k <= n:
        raise SpectrumError(f"degree k={k} outside 0..{n}")
    pairs = []
    for mask in ctx.masks(k):
        for j in range(1, ctx.rank + 1):
            pairs.append((ctx.delta(j, mask), (j, mask)))
    out = []
    for value, wits in _merge_points(pairs, ctx.exact):
        wits = sorted(wits)
        out.append(ShiftDatum(value, len(wits), tuple(wits)))
    out.sort(key=lambda s: (-float(_c_re(s.delta)), float(_c_im(s.delta))))
    return out


# ---------------------------------------------------------------------------
# lattice enumeration


def _alpha_budget(ctx: ElementContext, rem: Scalar):
    """DFS over alpha with sum(alpha_e * |chi_e|) <= rem, carrying the partial
    lattice value lambda_alpha incrementally; yields (alpha, lam_alpha)."""
    coeffs = [e.chi_abs for e in ctx.alpha_entries]
    lam_coeffs = ctx.lam_coeff

    def rec(i, rem, z, prefix):
        if i == len(coeffs):
            yield tuple(prefix), z
            return
        a = 0
        left = rem
        zz = z
        while True:
            yield from rec(i + 1, left, zz, prefix + [a])
            a += 1
            left = left - coeffs[i]
            if _neg(left):
                break
            zz = zz + lam_coeffs[i]

    yield from rec(0, rem, ctx.base, [])


def _neg(x) -> bool:
    return (x.sign() < 0) if isinstance(x, Exact) else x < 0


def scalar_lattice(ctx: ElementContext, t_re: float, t_im: Optional[float]):
    """All (alpha[, alpha_n], lambda_alpha) with Re >= -t_re and |Im| <= t_im.

    For orbits t_im must be finite (the vertical lattice is infinite).
    """
    exact = ctx.exact
    if ctx.is_orbit and t_im is None:
        raise SpectrumError("orbit lattices need a finite imaginary bound")
    t_re_s = Exact.of(_as_exact_bound(t_re)) if exact else float(t_re)
    rem0 = t_re_s + _c_re(ctx.base)
    out = []
    if _neg(rem0):
        return out
    for alpha, lam0 in _alpha_budget(ctx, rem0):
        if ctx.is_orbit:
            for alpha_n in _imag_range(ctx, _c_im(lam0), t_im):
                out.append((alpha, alpha_n, ctx.lam(alpha, alpha_n)))
        else:
            if _im_ok(_c_im(lam0), t_im, exact):
                out.append((alpha, None, lam0))
    out.sort(key=lambda row: (_alpha_cost(ctx, row[0]), row[0], row[1] or 0))
    return out


def _alpha_cost(ctx, alpha):
    return sum(a * float(c) for a, c in zip(alpha, [e.chi_abs for e in ctx.alpha_entries]))


def _as_exact_bound(t):
    if isinstance(t, (int, Fraction, Exact)):
        return t
    return Fraction(t)


def _im_ok(im: Scalar, t_im: Optional[float], exact: bool) -> bool:
    if t_im is None:
        return True
    if exact:
        bound = Exact.of(_as_exact_bound(t_im))
        return (-bound <= im) and (im <= bound)
    slack = BOX_SLACK * (1.0 + abs(t_im))
    return abs(im) <= t_im + slack


def _imag_range(ctx: ElementContext, im0: Scalar, t_im: float) -> range:
    """Integers m with |im0 + m*step| <= t_im."""
    step = ctx.step
    if ctx.exact:
        bound = Exact.of(_as_exact_bound(t_im))
        lo = _ceil_ratio(-bound - im0, step)
        hi = _floor_ratio(bound - im0, step)
    else:
        slack = BOX_SLACK * (1.0 + abs(t_im))
        lo = math.ceil((-t_im - slack - im0) / step)
        hi = math.floor((t_im + slack - im0) / step)
    return range(lo, hi + 1)


# ---------------------------------------------------------------------------
# assembled resonances


@dataclass(frozen=True)
class Contribution:
    element: str
    alpha: tuple[int, ...]
    alpha_n: Optional[int]
    bundle: int
    mask: tuple[int, ...]


@dataclass(frozen=True)
class Resonance:
    z: ComplexScalar
    multiplicity: int
    contributions: tuple[Contribution, ...]


def _element_pairs(ctx: ElementContext, k: int, box: Box):
    """Yield (z, contribution) for one element inside the box."""
    exact = ctx.exact
    if box.t_re is None:
        raise SpectrumError("resonance enumeration needs a finite real bound")
    t_re = Exact.of(_as_exact_bound(box.t_re)) if exact else float(box.t_re)
    if not exact:
        t_re = t_re + BOX_SLACK * (1.0 + abs(float(box.t_re)))
    i_step = None
    if ctx.is_orbit:
        i_step = (ExactComplex(Exact(0), ctx.step) if exact
                  else complex(0.0, ctx.step))
    for datum in shift_set(ctx, k):
        d_re, d_im = _c_re(datum.delta), _c_im(datum.delta)
        rem0 = t_re + _c_re(ctx.base) + d_re
        if _neg(rem0):
            continue
        for alpha, lam0 in _alpha_budget(ctx, rem0):
            im_base = _c_im(lam0) + d_im
            if ctx.is_orbit:
                if box.t_im is None:
                    raise SpectrumError("orbit enumeration needs a finite t_im")
                rng = _imag_range(ctx, im_base, box.t_im)
                if len(rng) == 0:
                    continue
                z = lam0 + datum.delta + i_step * rng.start
                for alpha_n in rng:
                    for j, mask in datum.witnesses:
                        yield z, Contribution(ctx.elem.name, alpha, alpha_n, j, mask)
                    z = z + i_step
            else:
                if _im_ok(im_base, box.t_im, exact):
                    z = lam0 + datum.delta
                    for j, mask in datum.witnesses:
                        yield z, Contribution(ctx.elem.name, alpha, None, j, mask)


def _thread_count() -> int:
    import os

    try:
        return max(1, int(os.environ.get("RUELLE_LAB_THREADS", "1")))
    except ValueError:
        return 1


def resonances(model: FlowModel, k: int, box: Box) -> list[Resonance]:
    """The resonance multiset of degree k inside the box, merged and sorted.

    Coincident values are merged with multiplicities summed; each resonance
    retains its full provenance list of (element, alpha, witness) triples.
    RUELLE_LAB_THREADS caps the per-element enumeration parallelism.
    """
    _check_degree(model, k)
    exact = model.mode == MODE_EXACT
    pairs = []
    workers = _thread_count()
    if workers > 1 and len(model.elements) > 1:
        from concurrent.futures import ThreadPoolExecutor

        def run(elem):
            return list(_element_pairs(context(model, elem), k, box))

        with ThreadPoolExecutor(max_workers=workers) as pool:
            for chunk in pool.map(run, model.elements):
                pairs.extend(chunk)
    else:
        for elem in model.elements:
            ctx = context(model, elem)
            pairs.extend(_element_pairs(ctx, k, box))
    out = []
    for z, contribs in _merge_points(pairs, exact):
        contribs.sort(key=lambda c: (c.element, sum(c.alpha), c.alpha,
                                     c.alpha_n if c.alpha_n is not None else 0,
                                     c.bundle, c.mask))
        out.append(Resonance(z, len(contribs), tuple(contribs)))
    out.sort(key=lambda r: (-float(_c_re(r.z)), float(_c_im(r.z))))
    return out


def _check_degree(model: FlowModel, k: int):
    if not 0 <= k <= model.dim:
        raise SpectrumError(f"degree k={k} outside 0..{model.dim}")


# ---------------------------------------------------------------------------
# imaginary-axis spectrum


@dataclass(frozen=True)
class AxisGenerator:
    """One contributor to the imaginary-axis spectrum.

    Fixed points contribute {0} with multiplicity N; orbits contribute the
    vertical lattice {-2*i*pi*(m + phase_j)/P : m in Z} for each bundle index,
    with phase_j = orientability index + gamma_j.
    """

    element: str
    is_orbit: bool
    step: Optional[Scalar]
    phases: tuple[Scalar, ...]
    multiplicity: int


def imaginary_axis(model: FlowModel, k: int) -> list[AxisGenerator]:
    _check_degree(model, k)
    if not model.is_unitary:
        raise NonUnitaryError(
            "imaginary-axis spectrum requires a unitary connection "
            "(all holonomy exponents real)"
        )
    exact = model.mode == MODE_EXACT
    gens = []
    for elem in model.fixed_points:
        if element_dims(elem, model.dim)[0] == k:
            gens.append(AxisGenerator(elem.name, False, None, (), model.rank))
    for elem in model.orbits:
        if element_dims(elem, model.dim)[0] in (k, k + 1):
            ctx = context(model, elem)
            eps = elem.orientability_index
            phases = []
            for g in ctx.gammas:
                re = _c_re(g)
                phases.append(re + (Exact.of(eps) if exact else float(eps)))
            gens.append(AxisGenerator(elem.name, True, ctx.step,
                                      tuple(phases), 1))
    return gens


def enumerate_imaginary(model: FlowModel, k: int, t: float):
    """Merged [(z, multiplicity)] of the imaginary-axis spectrum, |Im z| <= t."""
    exact = model.mode == MODE_EXACT
    pairs = []
    zero_c = ExactComplex(0, 0) if exact else 0j
    for gen in imaginary_axis(model, k):
        if not gen.is_orbit:
            for _ in range(gen.multiplicity):
                pairs.append((zero_c, gen.element))
            continue
        for phase in gen.phases:
            # z = -i*step*(m + phase): |step*(m + phase)| <= t
            base_im = -(gen.step * phase)
            for m in _axis_range(gen.step, base_im, t, exact):
                im = base_im - gen.step * m
                z = ExactComplex(Exact(0), im) if exact else complex(0.0, im)
                pairs.append((z, gen.element))
    merged = _merge_points(pairs, exact)
    out = [(z, len(items)) for z, items in merged]
    out.sort(key=lambda p: float(_c_im(p[0])))
    return out


def _axis_range(step, base_im, t, exact):
    if exact:
        bound = Exact.of(_as_exact_bound(t))
        lo = _ceil_ratio(base_im - bound, step)
        hi = _floor_ratio(base_im + bound, step)
    else:
        slack = BOX_SLACK * (1.0 + abs(t))
        lo = math.ceil((base_im - t - slack) / step)
        hi = math.floor((base_im + t + slack) / step)
    return range(lo, hi + 1)


def imaginary_multiplicity(model: FlowModel, k: int, z0: ComplexScalar) -> int:
    """Algebraic multiplicity of z0 on the imaginary axis (0 if absent)."""
    t = abs(float(_c_im(z0))) + 1.0
    exact = model.mode == MODE_EXACT
    for z, mult in enumerate_imaginary(model, k, t):
        if exact:
            if z == z0:
                return mult
        elif abs(_as_complex(z) - _as_complex(z0)) <= MERGE_TOL * (1 + abs(_as_complex(z0))):
            return mult
    return 0


def count_imaginary(model: FlowModel, k: int, t: float) -> tuple[int, float]:
    """Exact on-axis count for |Im| <= t and the leading prediction N*t/pi * sum P."""
    exact_count = sum(m for _, m in enumerate_imaginary(model, k, t))
    total_period = 0.0
    for elem in model.orbits:
        if element_dims(elem, model.dim)[0] in (k, k + 1):
            total_period += float(elem.period)
    prediction = model.rank * t / math.pi * total_period
    return exact_count, prediction


# ---------------------------------------------------------------------------
# band structure


@dataclass(frozen=True)
class Band:
    """A vertical line of resonances: offset + i*step*Z (step None: singleton)."""

    element: str
    offset: ComplexScalar
    step: Optional[Scalar]
    phase: Optional[Scalar]
    multiplicity: int


def band_decomposition(model: FlowModel, k: int, box: Box) -> list[Band]:
    """Bands whose lattice meets the box; the alpha_n/m index is factored out.

    Every resonance of ``resonances(model, k, box)`` lies on at least one band
    and the total band-point multiplicity over the box equals the resonance
    multiplicity (the bands carry offset multiplicities).
    """
    _check_degree(model, k)
    exact = model.mode == MODE_EXACT
    bands = []
    for elem in model.elements:
        ctx = context(model, elem)
        if box.t_re is None:
            raise SpectrumError("band enumeration needs a finite real bound")
        t_re = Exact.of(_as_exact_bound(box.t_re)) if exact else \
            float(box.t_re) + BOX_SLACK * (1.0 + abs(float(box.t_re)))
        pairs = []
        for datum in shift_set(ctx, k):
            rem0 = t_re + _c_re(ctx.base) + _c_re(datum.delta)
            if _neg(rem0):
                continue
            for alpha, lam0 in _alpha_budget(ctx, rem0):
                offset = lam0 + datum.delta
                if ctx.is_orbit:
                    if box.t_im is None:
                        raise SpectrumError("band enumeration needs a finite t_im")
                    hits = _imag_range(ctx, _c_im(offset), box.t_im)
                    if len(hits) == 0:
                        continue
                    for j, mask in datum.witnesses:
                        pairs.append((offset, (j, mask)))
                else:
                    if _im_ok(_c_im(offset), box.t_im, exact):
                        for j, mask in datum.witnesses:
                            pairs.append((offset, (j, mask)))
        for offset, wits in _merge_points(pairs, exact):
            if ctx.is_orbit:
                j0 = sorted(wits)[0][0]
                phase = _band_phase(ctx, elem, j0)
                bands.append(Band(elem.name, offset, ctx.step, phase, len(wits)))
            else:
                bands.append(Band(elem.name, offset, None, None, len(wits)))
    bands.sort(key=lambda b: (-float(_c_re(b.offset)), float(_c_im(b.offset)),
                              b.element))
    return bands


def _band_phase(ctx: ElementContext, elem: ClosedOrbitElement, j: int):
    eps = elem.orientability_index
    g_re = _c_re(ctx.gammas[j - 1])
    return g_re + (Exact.of(eps) if ctx.exact else float(eps))


# ---------------------------------------------------------------------------
# Weyl counting


def weyl_count(model: FlowModel, k: int, t: float) -> int:
    """N_k(T): total multiplicity of resonances with Re >= -T and |Im| <= T.

    Counts lattice points combinatorially without materializing resonances;
    merging never changes the total multiplicity.
    """
    _check_degree(model, k)
    total = 0
    for elem in model.elements:
        ctx = context(model, elem)
        total += _count_element(ctx, k, t)
    return total


def _count_element(ctx: ElementContext, k: int, t: float) -> int:
    exact = ctx.exact
    t_re = Exact.of(_as_exact_bound(t)) if exact else \
        float(t) + BOX_SLACK * (1.0 + abs(float(t)))
    chis = [e.chi_abs for e in ctx.alpha_entries]
    ims = [_c_im(c) for c in ctx.lam_coeff]
    total = 0
    for datum in shift_set(ctx, k):
        rem0 = t_re + _c_re(ctx.base) + _c_re(datum.delta)
        if _neg(rem0):
            continue
        im0 = _c_im(ctx.base) + _c_im(datum.delta)
        total += datum.multiplicity * _count_rec(ctx, chis, ims, 0, rem0, im0, t)
    return total


def _count_rec(ctx, chis, ims, i, rem, im_acc, t) -> int:
    if i == len(chis):
        if ctx.is_orbit:
            return len(_imag_range(ctx, im_acc, t))
        return 1 if _im_ok(im_acc, t, ctx.exact) else 0
    # arithmetic shortcut: nothing ahead can change the imaginary part
    if not ctx.is_orbit and all(_is_zero_s(x) for x in ims[i:]):
        if not _im_ok(im_acc, t, ctx.exact):
            return 0
        return _count_simplex(chis[i:], rem)
    count = 0
    a = 0
    left = rem
    while True:
        count += _count_rec(ctx, chis, ims, i + 1, left,
                            im_acc + ims[i] * a, t)
        a += 1
        left = rem - chis[i] * a
        if _neg(left):
            break
    return count


def _count_simplex(chis, rem) -> int:
    """#{alpha in N^d : sum alpha_i * chis_i <= rem} with rem >= 0."""
    if not chis:
        return 1
    if len(chis) == 1:
        return _floor_ratio(rem, chis[0]) + 1
    count = 0
    a = 0
    left = rem
    while True:
        count += _count_simplex(chis[1:], left)
        a += 1
        left = rem - chis[0] * a
        if _neg(left):
            break
    return count


def _is_zero_s(x) -> bool:
    return not bool(x) if isinstance(x, Exact) else x == 0


# ---------------------------------------------------------------------------
# Weyl polytopes


@dataclass(frozen=True)
class WeylPolytope:
    """Halfspace description a.x <= b of the counting polytope of one element."""

    element: str
    halfspaces: tuple[tuple[tuple[float, ...], float], ...]
    dim: int


def polytope(ctx: ElementContext) -> WeylPolytope:
    """Counting polytope in alpha-space.

    Fixed point: {x >= 0, -1 <= x.omega <= 1, x.chi+ <= 1}.  Orbit: same in
    (x', x_n) with the slab -1 <= x'.omega + (2*pi/P)*x_n <= 1 and x_n free in
    sign.
    """
    chi_plus = [float(e.chi_abs) for e in ctx.alpha_entries]
    omegas = [float(_c_im(e.mu)) for e in ctx.alpha_entries]
    d = len(chi_plus) + (1 if ctx.is_orbit else 0)
    rows = []
    for i in range(len(chi_plus)):
        a = [0.0] * d
        a[i] = -1.0
        rows.append((tuple(a), 0.0))
    slab = list(omegas) + ([float(ctx.step)] if ctx.is_orbit else [])
    if any(c != 0.0 for c in slab):
        rows.append((tuple(slab), 1.0))
        rows.append((tuple(-c for c in slab), 1.0))
    cap = list(chi_plus) + ([0.0] if ctx.is_orbit else [])
    rows.append((tuple(cap), 1.0))
    return WeylPolytope(ctx.elem.name, tuple(rows), d)


def weyl_prediction(model: FlowModel, k: int, t: float,
                    method: str = "auto", tol: float = 1e-3,
                    seed: int = 0) -> tuple[float, float]:
    """Leading Weyl term (N * n!/(k!(n-k)!)) * sum Vol(Q) * T^n with error bound."""
    from . import volumes

    _check_degree(model, k)
    n = model.dim
    coeff = model.rank * math.comb(n, k)
    vol_sum, err_sum = 0.0, 0.0
    for elem in model.elements:
        p = polytope(context(model, elem))
        v, e = volumes.polytope_volume(p, method=method, tol=tol, seed=seed)
        vol_sum += float(v)
        err_sum += float(e)
    return coeff * vol_sum * t**n, coeff * err_sum * t**n
