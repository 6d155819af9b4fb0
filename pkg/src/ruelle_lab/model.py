"""Abstract description of a hyperbolic flow with finitely many critical elements.

The model is purely spectral: each fixed point or closed orbit carries its
linearized eigenvalue data (exponent, rotation frequency, twisting index),
closed orbits carry a period and holonomy exponents of a flat connection, and
the global structure is a partial order on unstable manifolds.  Matrices never
appear here; they are consumed by the :mod:`ruelle_lab.floquet` module, which
produces elements of this form.

Two arithmetic modes are supported.  In ``float`` mode all quantities are
doubles and downstream coincidence checks use a merge tolerance.  In ``exact``
mode exponents are rationals and frequencies/periods live in Q + Q*pi
(:mod:`ruelle_lab.exactnum`), which makes equality of resonances decidable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

from .exactnum import Exact, ExactComplex

Scalar = Union[float, Exact]
ComplexScalar = Union[complex, ExactComplex]

MODE_FLOAT = "float"
MODE_EXACT = "exact"

ZERO_TWIST = Fraction(0)
HALF_TWIST = Fraction(1, 2)


class ModelError(ValueError):
    """Raised when a model cannot be assembled at all (wrong shapes, modes)."""


@dataclass(frozen=True)
class Violation:
    element: str
    invariant: str
    detail: str = ""

    def __str__(self):
        msg = f"{self.element}: {self.invariant}"
        return f"{msg} ({self.detail})" if self.detail else msg


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self):
        if self.ok:
            return "ok"
        return "\n".join(str(v) for v in self.violations)


@dataclass(frozen=True)
class EigenDatum:
    """One linearized eigenvalue: exponent chi, frequency omega, twist, stability.

    Complex eigenvalues of the linearization are stored as two entries with
    opposite ``omega`` and equal ``chi``.  ``twist`` is 1/2 exactly for the
    negative real Floquet multipliers of a closed orbit.
    """

    chi: Scalar
    omega: Scalar = 0.0
    twist: Fraction = ZERO_TWIST
    stable: bool = field(default=False)

    def __post_init__(self):
        object.__setattr__(self, "stable", _is_negative(self.chi))

    @property
    def is_real_block(self) -> bool:
        return _is_zero(self.omega)


@dataclass(frozen=True)
class FixedPointElement:
    name: str
    eigenvalues: tuple[EigenDatum, ...]

    @property
    def stable_dim(self) -> int:
        return sum(1 for e in self.eigenvalues if e.stable)

    @property
    def is_orbit(self) -> bool:
        return False


@dataclass(frozen=True)
class ClosedOrbitElement:
    name: str
    period: Scalar
    eigenvalues: tuple[EigenDatum, ...]
    orientability_index: Fraction = ZERO_TWIST

    @property
    def stable_dim(self) -> int:
        # the flow line itself is part of W^s
        return sum(1 for e in self.eigenvalues if e.stable) + 1

    @property
    def is_orbit(self) -> bool:
        return True


CriticalElement = Union[FixedPointElement, ClosedOrbitElement]


@dataclass(frozen=True)
class ConnectionData:
    """Flat-connection data: bundle rank and per-orbit holonomy exponents.

    ``orbit_exponents[name]`` lists the N numbers gamma_j with real part
    normalized into [0, 1); the holonomy eigenvalues are exp(2*i*pi*gamma_j).
    Fixed points carry no exponents (a parallel frame always exists there).
    """

    rank: int
    orbit_exponents: dict[str, tuple[ComplexScalar, ...]] = field(default_factory=dict)

    def gammas(self, orbit_name: str) -> tuple[ComplexScalar, ...]:
        return self.orbit_exponents[orbit_name]

    @property
    def is_unitary(self) -> bool:
        for gs in self.orbit_exponents.values():
            for g in gs:
                if not _is_zero(_im_part(g)):
                    return False
        return True


@dataclass(frozen=True)
class FlowModel:
    dim: int
    connection: ConnectionData
    fixed_points: tuple[FixedPointElement, ...] = ()
    orbits: tuple[ClosedOrbitElement, ...] = ()
    quiver_edges: tuple[tuple[str, str], ...] = ()
    mode: str = MODE_FLOAT

    @property
    def elements(self) -> tuple[CriticalElement, ...]:
        return self.fixed_points + self.orbits

    def element(self, name: str) -> CriticalElement:
        for e in self.elements:
            if e.name == name:
                return e
        raise KeyError(name)

    @property
    def rank(self) -> int:
        return self.connection.rank

    @property
    def is_unitary(self) -> bool:
        return self.connection.is_unitary


# ---------------------------------------------------------------------------
# scalar helpers shared across modules


def _is_zero(x) -> bool:
    if isinstance(x, Exact):
        return not bool(x)
    return x == 0


def _is_negative(x) -> bool:
    if isinstance(x, Exact):
        return x.sign() < 0
    return x < 0


def _im_part(z):
    if isinstance(z, ExactComplex):
        return z.im
    return complex(z).imag


def _re_part(z):
    if isinstance(z, ExactComplex):
        return z.re
    return complex(z).real


def scalar_float(x) -> float:
    return float(x)


# ---------------------------------------------------------------------------
# validation


def element_dims(elem: CriticalElement, dim: int) -> tuple[int, int]:
    """Dimensions (dim W^s, dim W^u) of the stable/unstable manifolds.

    For a closed orbit the flow direction lies in both manifolds, so the two
    dimensions add up to dim + 1.
    """
    n_stable = sum(1 for e in elem.eigenvalues if e.stable)
    if elem.is_orbit:
        n_unstable = len(elem.eigenvalues) - n_stable
        return (n_stable + 1, n_unstable + 1)
    return (n_stable, dim - n_stable)


def _check_conjugate_pairing(elem: CriticalElement) -> list[Violation]:
    """Complex entries must occur in (+omega, -omega) pairs with equal chi."""
    out = []
    plus, minus = [], []
    for e in elem.eigenvalues:
        if e.is_real_block:
            continue
        key = (e.chi, abs_scalar(e.omega))
        (plus if _is_negative(-e.omega) else minus).append(key)
    plus.sort(key=_pair_sort_key)
    minus.sort(key=_pair_sort_key)
    if plus != minus:
        out.append(
            Violation(elem.name, "conjugate pairing",
                      "complex entries do not pair up as chi +/- i*omega")
        )
    return out


def _pair_sort_key(key):
    chi, om = key
    return (float(chi), float(om))


def abs_scalar(x):
    if isinstance(x, Exact):
        return abs(x)
    return abs(x)


def validate_model(model: FlowModel) -> ValidationReport:
    """Check every standing hypothesis; returns a report naming each breach."""
    violations: list[Violation] = []

    names = [e.name for e in model.elements]
    if len(set(names)) != len(names):
        dupes = sorted({n for n in names if names.count(n) > 1})
        violations.append(Violation("<model>", "unique names", ", ".join(dupes)))

    for elem in model.elements:
        expected_len = model.dim - 1 if elem.is_orbit else model.dim
        if len(elem.eigenvalues) != expected_len:
            violations.append(
                Violation(elem.name, "eigenvalue count",
                          f"expected {expected_len}, got {len(elem.eigenvalues)}")
            )
            continue
        for i, e in enumerate(elem.eigenvalues):
            if _is_zero(e.chi):
                violations.append(
                    Violation(elem.name, "hyperbolicity", f"entry {i} has chi = 0")
                )
            if e.twist not in (ZERO_TWIST, HALF_TWIST):
                violations.append(
                    Violation(elem.name, "twist range", f"entry {i}: {e.twist}")
                )
            if not elem.is_orbit and e.twist != ZERO_TWIST:
                violations.append(
                    Violation(elem.name, "fixed-point twist",
                              f"entry {i} carries twist {e.twist}")
                )
            if not e.is_real_block and e.twist != ZERO_TWIST:
                violations.append(
                    Violation(elem.name, "complex-block twist",
                              f"entry {i} is a rotation block with twist {e.twist}")
                )
        violations.extend(_check_conjugate_pairing(elem))

        if elem.is_orbit:
            if not _is_negative(-elem.period):
                violations.append(Violation(elem.name, "positive period"))
            neg_unstable = sum(
                1 for e in elem.eigenvalues
                if not e.stable and e.twist == HALF_TWIST
            )
            expected_eps = HALF_TWIST if neg_unstable % 2 else ZERO_TWIST
            if elem.orientability_index != expected_eps:
                violations.append(
                    Violation(elem.name, "orientability parity",
                              f"epsilon={elem.orientability_index}, "
                              f"{neg_unstable} twisted unstable entries")
                )

    # connection bookkeeping
    conn = model.connection
    if conn.rank < 1:
        violations.append(Violation("<connection>", "positive rank"))
    orbit_names = {o.name for o in model.orbits}
    for name in conn.orbit_exponents:
        if name not in orbit_names:
            violations.append(
                Violation(name, "exponents on non-orbit",
                          "only closed orbits carry holonomy exponents")
            )
    for o in model.orbits:
        gs = conn.orbit_exponents.get(o.name)
        if gs is None or len(gs) != conn.rank:
            violations.append(
                Violation(o.name, "exponent count",
                          f"expected {conn.rank} holonomy exponents")
            )

    # quiver validation is delegated, but edges must at least name elements
    from . import quiver as _quiver

    known = set(names)
    for lo, hi in model.quiver_edges:
        if lo not in known or hi not in known:
            violations.append(
                Violation(f"{lo}->{hi}", "quiver edge names", "unknown element")
            )
    if not violations:
        q = _quiver.quiver_of_model(model)
        violations.extend(_quiver.validate_order(q).violations)

    return ValidationReport(tuple(violations))
