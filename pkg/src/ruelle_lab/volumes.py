"""Volumes of halfspace-described convex polytopes.

Two engines: an exact rational one for dimension <= 3 (vertex enumeration by
solving all n x n subsystems in Fraction arithmetic, then fan decomposition),
and a seeded quasi-Monte Carlo estimator (scrambled Sobol points in a bounding
box) for higher dimensions, with a reported 3-sigma error bound.
"""

from __future__ import annotations

import math
from fractions import Fraction
from itertools import combinations

import numpy as np
from scipy.optimize import linprog
from scipy.stats import qmc

from .spectrum import WeylPolytope


class UnboundedPolytopeError(ValueError):
    pass


def _solve_exact(rows, rhs):
    """Solve a square rational system by Gaussian elimination; None if singular."""
    n = len(rows)
    aug = [list(row) + [b] for row, b in zip(rows, rhs)]
    for col in range(n):
        piv = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if piv is None:
            return None
        aug[col], aug[piv] = aug[piv], aug[col]
        inv = Fraction(1, 1) / aug[col][col]
        aug[col] = [v * inv for v in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [v - f * w for v, w in zip(aug[r], aug[col])]
    return tuple(row[n] for row in aug)


def _exact_halfspaces(poly: WeylPolytope):
    return [
        (tuple(Fraction(c) for c in a), Fraction(b))
        for a, b in poly.halfspaces
    ]


def _vertices_exact(halfspaces, dim):
    verts = set()
    for combo in combinations(range(len(halfspaces)), dim):
        rows = [halfspaces[i][0] for i in combo]
        rhs = [halfspaces[i][1] for i in combo]
        v = _solve_exact(rows, rhs)
        if v is None:
            continue
        if all(sum(a * x for a, x in zip(row, v)) <= b for row, b in halfspaces):
            verts.add(v)
    return sorted(verts)


def _check_bounded(poly: WeylPolytope):
    """A polytope is bounded iff every coordinate is bounded above and below."""
    a_ub = np.array([row for row, _ in poly.halfspaces], dtype=float)
    b_ub = np.array([b for _, b in poly.halfspaces], dtype=float)
    d = poly.dim
    for i in range(d):
        for sign in (1.0, -1.0):
            c = np.zeros(d)
            c[i] = -sign  # maximize sign * x_i
            res = linprog(c, A_ub=a_ub, b_ub=b_ub, bounds=[(None, None)] * d,
                          method="highs")
            if res.status == 3:
                raise UnboundedPolytopeError(
                    f"{poly.element}: unbounded in coordinate {i}"
                )
            if res.status == 2:
                return False  # empty: bounded in the trivial sense
    return True


def _angle_sort(items, center, key=lambda it: it):
    """Order items counterclockwise by the exact angle of key(item) - center."""
    import functools

    def half(p):
        dx, dy = p[0] - center[0], p[1] - center[1]
        return 0 if (dy > 0 or (dy == 0 and dx > 0)) else 1

    def cross(p, q):
        return ((p[0] - center[0]) * (q[1] - center[1])
                - (p[1] - center[1]) * (q[0] - center[0]))

    def cmp(a, b):
        p, q = key(a), key(b)
        hp, hq = half(p), half(q)
        if hp != hq:
            return -1 if hp < hq else 1
        c = cross(p, q)
        return -1 if c > 0 else (1 if c < 0 else 0)

    return sorted(items, key=functools.cmp_to_key(cmp))


def _polygon_area(verts2d):
    if len(verts2d) < 3:
        return Fraction(0)
    cx = sum(v[0] for v in verts2d) / len(verts2d)
    cy = sum(v[1] for v in verts2d) / len(verts2d)
    ordered = _angle_sort(verts2d, (cx, cy))
    area = Fraction(0)
    for p, q in zip(ordered, ordered[1:] + ordered[:1]):
        area += p[0] * q[1] - q[0] * p[1]
    return abs(area) / 2


def _volume_3d(halfspaces, verts):
    center = tuple(sum(v[i] for v in verts) / len(verts) for i in range(3))
    seen_facets = set()
    volume = Fraction(0)
    for row, b in halfspaces:
        on = [v for v in verts if sum(a * x for a, x in zip(row, v)) == b]
        if len(on) < 3:
            continue
        key = frozenset(on)
        if key in seen_facets:
            continue
        seen_facets.add(key)
        # planar coordinates: any two independent edge vectors give an affine
        # chart; cyclic order survives invertible affine maps
        v0 = on[0]
        u1 = None
        for v in on[1:]:
            d = tuple(a - b_ for a, b_ in zip(v, v0))
            if any(d):
                u1 = d
                break
        u2 = None
        for v in on[1:]:
            d = tuple(a - b_ for a, b_ in zip(v, v0))
            c = _cross3(u1, d)
            if any(c):
                u2 = d
                break
        if u2 is None:
            continue  # collinear "facet"
        plane_pts = [
            (_dot(tuple(a - b_ for a, b_ in zip(v, v0)), u1),
             _dot(tuple(a - b_ for a, b_ in zip(v, v0)), u2))
            for v in on
        ]
        ctr = (sum(p[0] for p in plane_pts) / len(plane_pts),
               sum(p[1] for p in plane_pts) / len(plane_pts))
        ordered = [v for _, v in _angle_sort(list(zip(plane_pts, on)), ctr,
                                             key=lambda pair: pair[0])]
        base = ordered[0]
        for p, q in zip(ordered[1:-1], ordered[2:]):
            volume += abs(_det3(
                tuple(a - c for a, c in zip(base, center)),
                tuple(a - c for a, c in zip(p, center)),
                tuple(a - c for a, c in zip(q, center)),
            )) / 6
    return volume


def _dot(u, v):
    return sum(a * b for a, b in zip(u, v))


def _cross3(u, v):
    return (u[1] * v[2] - u[2] * v[1],
            u[2] * v[0] - u[0] * v[2],
            u[0] * v[1] - u[1] * v[0])


def _det3(u, v, w):
    return _dot(u, _cross3(v, w))


def exact_volume(poly: WeylPolytope) -> Fraction:
    """Exact rational volume for dim <= 3; raises on unbounded input."""
    if poly.dim > 3:
        raise ValueError("exact engine supports dimension <= 3")
    _check_bounded(poly)
    halfspaces = _exact_halfspaces(poly)
    verts = _vertices_exact(halfspaces, poly.dim)
    if len(verts) <= poly.dim:
        return Fraction(0)
    if poly.dim == 1:
        xs = [v[0] for v in verts]
        return max(xs) - min(xs)
    if poly.dim == 2:
        return _polygon_area(verts)
    return _volume_3d(halfspaces, verts)


def _bounding_box(poly: WeylPolytope):
    a_ub = np.array([row for row, _ in poly.halfspaces], dtype=float)
    b_ub = np.array([b for _, b in poly.halfspaces], dtype=float)
    d = poly.dim
    lo, hi = np.zeros(d), np.zeros(d)
    for i in range(d):
        for sign, target in ((1.0, hi), (-1.0, lo)):
            c = np.zeros(d)
            c[i] = -sign
            res = linprog(c, A_ub=a_ub, b_ub=b_ub, bounds=[(None, None)] * d,
                          method="highs")
            if res.status == 3:
                raise UnboundedPolytopeError(
                    f"{poly.element}: unbounded in coordinate {i}"
                )
            if res.status == 2:
                return None
            target[i] = sign * (-res.fun)
    return lo, hi


def montecarlo_volume(poly: WeylPolytope, tol: float = 1e-3,
                      seed: int = 0, min_samples: int = 1 << 20,
                      max_samples: int = 1 << 24) -> tuple[float, float]:
    """Quasi-Monte Carlo volume with a reported 3-sigma binomial bound.

    Samples scrambled Sobol points inside the coordinate bounding box and
    doubles the sample count until the bound drops below ``tol`` (or the cap
    is hit).  The binomial bound is conservative for scrambled nets.
    """
    box = _bounding_box(poly)
    if box is None:
        return 0.0, 0.0
    lo, hi = box
    widths = hi - lo
    box_vol = float(np.prod(widths))
    if box_vol == 0.0:
        return 0.0, 0.0
    a_ub = np.array([row for row, _ in poly.halfspaces], dtype=float)
    b_ub = np.array([b for _, b in poly.halfspaces], dtype=float)

    m = min_samples
    sampler = qmc.Sobol(d=poly.dim, scramble=True, seed=seed)
    hits = 0
    drawn = 0
    while True:
        pts = sampler.random(m - drawn)
        x = lo + pts * widths
        inside = np.all(x @ a_ub.T <= b_ub + 1e-15, axis=1)
        hits += int(inside.sum())
        drawn = m
        p = hits / drawn
        bound = 3.0 * box_vol * math.sqrt(max(p * (1 - p), 1.0 / drawn) / drawn)
        if bound <= tol or m >= max_samples:
            return box_vol * p, bound
        m *= 2


def polytope_volume(poly: WeylPolytope, method: str = "auto",
                    tol: float = 1e-3, seed: int = 0):
    """Dispatch: exact for dim <= 3 (zero error), otherwise quasi-Monte Carlo."""
    if method == "auto":
        method = "exact" if poly.dim <= 3 else "montecarlo"
    if method == "exact":
        return exact_volume(poly), Fraction(0)
    if method == "montecarlo":
        return montecarlo_volume(poly, tol=tol, seed=seed)
    raise ValueError(f"unknown volume method: {method}")
