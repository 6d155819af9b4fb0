"""Partial order of unstable manifolds (Smale causality) and its Hasse diagram.

Vertices are critical-element names annotated with dim W^u; an edge
(lower, upper) declares that W^u(lower) lies in the closure of W^u(upper).
The order is user-declared input: closures of unstable manifolds are analytic
data that cannot be reconstructed from spectra.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import FlowModel, ValidationReport, Violation, element_dims


@dataclass(frozen=True)
class Quiver:
    vertices: dict[str, int]                 # name -> dim W^u
    edges: tuple[tuple[str, str], ...]       # (lower, upper)

    def successors(self, v: str) -> set[str]:
        return {b for a, b in self.edges if a == v}


def quiver_of_model(model: FlowModel) -> Quiver:
    dims = {e.name: element_dims(e, model.dim)[1] for e in model.elements}
    return Quiver(dims, tuple(model.quiver_edges))


def transitive_closure(q: Quiver) -> set[tuple[str, str]]:
    """All strict relations lower < upper implied by the declared edges."""
    reach: dict[str, set[str]] = {v: set() for v in q.vertices}
    for a, b in q.edges:
        if a != b:
            reach[a].add(b)
    changed = True
    while changed:
        changed = False
        for v in reach:
            extra = set()
            for w in reach[v]:
                extra |= reach[w] - reach[v]
            if extra:
                reach[v] |= extra
                changed = True
    return {(a, b) for a, targets in reach.items() for b in targets}


def validate_order(q: Quiver) -> ValidationReport:
    """Antisymmetry of the closure plus dim W^u monotonicity along every relation."""
    violations = []
    closure = transitive_closure(q)
    seen = set()
    for a, b in sorted(closure):
        if (b, a) in closure and (b, a) not in seen:
            seen.add((a, b))
            violations.append(
                Violation(f"{a}<->{b}", "antisymmetry", "two-cycle in the closure")
            )
    for a, b in sorted(closure):
        if (b, a) in closure:
            continue  # already reported as a cycle
        if q.vertices[a] > q.vertices[b]:
            violations.append(
                Violation(
                    f"{a}->{b}",
                    "dimension monotonicity",
                    f"dim W^u {q.vertices[a]} > {q.vertices[b]}",
                )
            )
    return ValidationReport(tuple(violations))


def hasse(q: Quiver) -> tuple[tuple[str, str], ...]:
    """Transitive reduction: the unique minimal edge set with the same closure."""
    report = validate_order(q)
    if not report.ok:
        raise ValueError(f"quiver is not a partial order:\n{report}")
    closure = transitive_closure(q)
    reduced = []
    for a, b in sorted(closure):
        if any((a, c) in closure and (c, b) in closure for c in q.vertices):
            continue
        reduced.append((a, b))
    return tuple(reduced)


def maximal_elements(q: Quiver, subset) -> tuple[str, ...]:
    """Members of ``subset`` with no strict upper bound inside ``subset``."""
    report = validate_order(q)
    if not report.ok:
        raise ValueError(f"quiver is not a partial order:\n{report}")
    subset = set(subset)
    unknown = subset - set(q.vertices)
    if unknown:
        raise KeyError(f"unknown vertices: {sorted(unknown)}")
    closure = transitive_closure(q)
    out = [
        v for v in sorted(subset)
        if not any((v, w) in closure for w in subset if w != v)
    ]
    return tuple(out)
