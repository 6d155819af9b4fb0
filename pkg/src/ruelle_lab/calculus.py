"""Multivariate polynomial-times-Gaussian calculus.

Everything the pairing engine needs reduces to symbolic operations on
polynomials with complex coefficients (dict of exponent tuples) against
Gaussian envelopes exp(-x^T Q x): products, derivatives (including the
envelope chain rule), composition with linear maps, restriction to coordinate
subspaces, and closed-form Gaussian moment integrals.
"""

from __future__ import annotations

import math
from typing import Iterable

import numpy as np


class Poly:
    """Polynomial over ``nvars`` real coordinates with complex coefficients."""

    __slots__ = ("nvars", "terms")

    def __init__(self, nvars: int, terms: dict[tuple[int, ...], complex] | None = None):
        self.nvars = nvars
        self.terms = {}
        if terms:
            for exps, c in terms.items():
                if c != 0:
                    self.terms[tuple(exps)] = self.terms.get(tuple(exps), 0) + c

    # -- constructors ---------------------------------------------------

    @staticmethod
    def const(c, nvars: int) -> "Poly":
        if c == 0:
            return Poly(nvars)
        return Poly(nvars, {tuple([0] * nvars): complex(c)})

    @staticmethod
    def var(i: int, nvars: int) -> "Poly":
        e = [0] * nvars
        e[i] = 1
        return Poly(nvars, {tuple(e): 1.0 + 0j})

    @staticmethod
    def monomial(exps: Iterable[int], coeff=1.0) -> "Poly":
        exps = tuple(exps)
        return Poly(len(exps), {exps: complex(coeff)})

    @staticmethod
    def linear(coeffs, nvars: int, constant=0.0) -> "Poly":
        terms = {}
        for i, c in enumerate(coeffs):
            if c != 0:
                e = [0] * nvars
                e[i] = 1
                terms[tuple(e)] = complex(c)
        if constant != 0:
            terms[tuple([0] * nvars)] = complex(constant)
        return Poly(nvars, terms)

    # -- ring ops ---------------------------------------------------------

    def __add__(self, other: "Poly") -> "Poly":
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, 0) + c
        return Poly(self.nvars, out)

    def __sub__(self, other: "Poly") -> "Poly":
        return self + other.scale(-1)

    def scale(self, c) -> "Poly":
        if c == 0:
            return Poly(self.nvars)
        return Poly(self.nvars, {e: v * c for e, v in self.terms.items()})

    def __mul__(self, other: "Poly") -> "Poly":
        out: dict[tuple[int, ...], complex] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        return Poly(self.nvars, out)

    def is_zero(self) -> bool:
        return not self.terms

    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    # -- calculus ---------------------------------------------------------

    def diff(self, i: int) -> "Poly":
        out = {}
        for e, c in self.terms.items():
            if e[i]:
                e2 = list(e)
                e2[i] -= 1
                e2 = tuple(e2)
                out[e2] = out.get(e2, 0) + c * e[i]
        return Poly(self.nvars, out)

    def subs_zero(self, coords) -> "Poly":
        """Set the listed coordinates to zero."""
        coords = set(coords)
        out = {}
        for e, c in self.terms.items():
            if all(e[i] == 0 for i in coords):
                out[e] = out.get(e, 0) + c
        return Poly(self.nvars, out)

    def compose_linear(self, mat) -> "Poly":
        """Substitute x_i <- sum_j mat[i, j] * x_j (mat may be complex)."""
        mat = np.asarray(mat)
        new_n = mat.shape[1]
        lin = [Poly.linear(mat[i], new_n) for i in range(self.nvars)]
        out = Poly(new_n)
        for e, c in self.terms.items():
            term = Poly.const(c, new_n)
            for i, p in enumerate(e):
                for _ in range(p):
                    term = term * lin[i]
            out = out + term
        return out

    def restrict(self, keep) -> "Poly":
        """Reindex onto the coordinates in ``keep``; others must not occur."""
        keep = list(keep)
        pos = {v: i for i, v in enumerate(keep)}
        out = {}
        for e, c in self.terms.items():
            ne = [0] * len(keep)
            for i, p in enumerate(e):
                if p:
                    if i not in pos:
                        raise ValueError(f"coordinate {i} still present")
                    ne[pos[i]] = p
            ne = tuple(ne)
            out[ne] = out.get(ne, 0) + c
        return Poly(len(keep), out)

    def eval(self, point) -> complex:
        total = 0j
        for e, c in self.terms.items():
            v = c
            for i, p in enumerate(e):
                if p:
                    v *= point[i] ** p
            total += v
        return total

    def __repr__(self):
        if not self.terms:
            return "Poly(0)"
        bits = [f"{c:+.3g}*x^{e}" for e, c in sorted(self.terms.items())]
        return "Poly(" + " ".join(bits) + ")"


def gauss_derivative(poly: Poly, q, i: int) -> Poly:
    """d/dx_i of poly * exp(-x^T q x), returned as the new polynomial factor."""
    q = np.asarray(q)
    qrow = Poly.linear(-2.0 * q[i], poly.nvars)
    return poly.diff(i) + poly * qrow


def _moment_1d(g: int, lam: float) -> float:
    # integral of z^g exp(-lam z^2) over R
    if g % 2:
        return 0.0
    return lam ** (-(g + 1) / 2) * math.gamma((g + 1) / 2)


def gauss_integral(poly: Poly, q) -> complex:
    """Integral of poly(x) * exp(-x^T q x) over R^nvars, q symmetric PD."""
    n = poly.nvars
    if n == 0:
        return complex(poly.terms.get((), 0.0))
    q = np.asarray(q, dtype=float)
    lam, rot = np.linalg.eigh(q)
    if np.any(lam <= 0):
        raise ValueError("quadratic form is not positive definite")
    composed = poly.compose_linear(rot)  # x = R z
    total = 0j
    for e, c in composed.terms.items():
        v = complex(c)
        for i, g in enumerate(e):
            if g % 2:
                v = 0j
                break
            v *= _moment_1d(g, lam[i])
        total += v
    return total
