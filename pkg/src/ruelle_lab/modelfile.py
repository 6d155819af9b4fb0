"""JSON model files.

Top-level keys: ``dim``, ``rank``, ``fixed_points[]``, ``orbits[]``,
``connection``, ``quiver_edges[]``.  Numbers may be plain floats, exact
rationals ``{"num": p, "den": q}`` (optionally ``"times_pi": true`` for
rational multiples of pi), and orbit frequencies may be given as
``{"turns": t}`` meaning ``t * 2*pi / P``.  In exact mode the loader/serializer
round-trips bit-exactly.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction
from typing import Any

from .exactnum import Exact, ExactComplex
from .model import (
    MODE_EXACT,
    MODE_FLOAT,
    ClosedOrbitElement,
    ConnectionData,
    EigenDatum,
    FixedPointElement,
    FlowModel,
    ZERO_TWIST,
)


class SchemaError(ValueError):
    """Malformed model file: wrong structure or number format."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


def _parse_scalar(node: Any, where: str, exact: bool, period=None):
    """Parse one number node; ``period`` enables the {"turns": t} form."""
    if isinstance(node, bool):
        raise SchemaError(where, "expected a number")
    if isinstance(node, (int, float)):
        if exact:
            return Exact(Fraction(node))
        return float(node)
    if isinstance(node, dict):
        if "turns" in node:
            if period is None:
                raise SchemaError(where, '"turns" is only valid for orbit frequencies')
            turns = _parse_rational(node["turns"], where + ".turns")
            if exact:
                return (Exact.pi(2) * turns) / Exact.of(period)
            return float(turns) * 2.0 * math.pi / float(period)
        if "num" in node and "den" in node:
            q = Fraction(int(node["num"]), int(node["den"]))
            pi_flag = bool(node.get("times_pi", False))
            if exact:
                return Exact.pi(q) if pi_flag else Exact(q)
            return float(q) * (math.pi if pi_flag else 1.0)
    raise SchemaError(where, f"unrecognized number form: {node!r}")


def _parse_rational(node: Any, where: str) -> Fraction:
    if isinstance(node, bool):
        raise SchemaError(where, "expected a rational")
    if isinstance(node, int):
        return Fraction(node)
    if isinstance(node, float):
        return Fraction(node)
    if isinstance(node, dict) and "num" in node and "den" in node:
        return Fraction(int(node["num"]), int(node["den"]))
    raise SchemaError(where, f"expected a rational, got {node!r}")


def _parse_complex(node: Any, where: str, exact: bool):
    if isinstance(node, dict) and ("re" in node or "im" in node):
        re = _parse_scalar(node.get("re", 0), where + ".re", exact)
        im = _parse_scalar(node.get("im", 0), where + ".im", exact)
    else:
        re = _parse_scalar(node, where, exact)
        im = Exact(0) if exact else 0.0
    if exact:
        return ExactComplex(re, im)
    return complex(re, im)


def _parse_eigen(node: Any, where: str, exact: bool, period=None) -> EigenDatum:
    if not isinstance(node, dict) or "chi" not in node:
        raise SchemaError(where, 'eigenvalue entries need a "chi" field')
    chi = _parse_scalar(node["chi"], where + ".chi", exact)
    omega = (
        _parse_scalar(node["omega"], where + ".omega", exact, period=period)
        if "omega" in node
        else (Exact(0) if exact else 0.0)
    )
    twist = (
        _parse_rational(node["twist"], where + ".twist")
        if "twist" in node
        else ZERO_TWIST
    )
    return EigenDatum(chi=chi, omega=omega, twist=twist)


def _normalize_gamma(g, exact: bool):
    """Shift the real part into [0, 1) (the lattice is invariant under +1)."""
    if exact:
        re = g.re
        shift = re.floor()
        return ExactComplex(re - shift, g.im)
    return complex(g.real - math.floor(g.real), g.imag)


def model_from_dict(doc: dict, mode: str = MODE_FLOAT) -> FlowModel:
    exact = mode == MODE_EXACT
    if mode not in (MODE_FLOAT, MODE_EXACT):
        raise SchemaError("mode", f"unknown arithmetic mode {mode!r}")
    if not isinstance(doc, dict):
        raise SchemaError("$", "model file must be a JSON object")
    for key in ("dim", "rank"):
        if key not in doc:
            raise SchemaError(key, "missing required field")
    try:
        dim = int(doc["dim"])
        rank = int(doc["rank"])
    except (TypeError, ValueError) as err:
        raise SchemaError("dim/rank", str(err)) from None

    fixed = []
    for i, node in enumerate(doc.get("fixed_points", [])):
        where = f"fixed_points[{i}]"
        if "name" not in node:
            raise SchemaError(where, "missing name")
        eigs = node.get("eigenvalues")
        if not isinstance(eigs, list):
            raise SchemaError(where, "missing eigenvalues list")
        data = tuple(
            _parse_eigen(e, f"{where}.eigenvalues[{j}]", exact)
            for j, e in enumerate(eigs)
        )
        fixed.append(FixedPointElement(str(node["name"]), data))

    orbits = []
    for i, node in enumerate(doc.get("orbits", [])):
        where = f"orbits[{i}]"
        if "name" not in node:
            raise SchemaError(where, "missing name")
        if "period" not in node:
            raise SchemaError(where + ".period", "missing required field")
        period = _parse_scalar(node["period"], where + ".period", exact)
        eigs = node.get("eigenvalues")
        if not isinstance(eigs, list):
            raise SchemaError(where, "missing eigenvalues list")
        data = tuple(
            _parse_eigen(e, f"{where}.eigenvalues[{j}]", exact, period=period)
            for j, e in enumerate(eigs)
        )
        eps = (
            _parse_rational(node["orientability_index"], where + ".orientability_index")
            if "orientability_index" in node
            else ZERO_TWIST
        )
        orbits.append(
            ClosedOrbitElement(str(node["name"]), period, data, eps)
        )

    conn_node = doc.get("connection", {}) or {}
    exponents = {}
    for name, gs in (conn_node.get("orbit_exponents", {}) or {}).items():
        where = f"connection.orbit_exponents[{name}]"
        if not isinstance(gs, list):
            raise SchemaError(where, "expected a list of exponents")
        exponents[name] = tuple(
            _normalize_gamma(_parse_complex(g, f"{where}[{j}]", exact), exact)
            for j, g in enumerate(gs)
        )
    # orbits without declared exponents get the trivial holonomy
    for o in orbits:
        if o.name not in exponents:
            zero = ExactComplex(0, 0) if exact else 0j
            exponents[o.name] = tuple(zero for _ in range(rank))
    connection = ConnectionData(rank, exponents)

    edges = []
    for i, e in enumerate(doc.get("quiver_edges", [])):
        if not (isinstance(e, (list, tuple)) and len(e) == 2):
            raise SchemaError(f"quiver_edges[{i}]", "expected a [lower, upper] pair")
        edges.append((str(e[0]), str(e[1])))

    return FlowModel(
        dim=dim,
        connection=connection,
        fixed_points=tuple(fixed),
        orbits=tuple(orbits),
        quiver_edges=tuple(edges),
        mode=mode,
    )


def load_model(path: str, mode: str = MODE_FLOAT) -> FlowModel:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as err:
            raise SchemaError("$", f"invalid JSON: {err}") from None
    return model_from_dict(doc, mode=mode)


# ---------------------------------------------------------------------------
# serialization


def _dump_scalar(x) -> Any:
    if isinstance(x, Exact):
        if x.b == 0:
            return {"num": x.a.numerator, "den": x.a.denominator}
        if x.a == 0:
            return {"num": x.b.numerator, "den": x.b.denominator, "times_pi": True}
        raise ValueError(f"cannot serialize mixed exact scalar {x!r}")
    return float(x)


def _dump_complex(z) -> Any:
    if isinstance(z, ExactComplex):
        if not z.im:
            return _dump_scalar(z.re)
        return {"re": _dump_scalar(z.re), "im": _dump_scalar(z.im)}
    z = complex(z)
    if z.imag == 0:
        return z.real
    return {"re": z.real, "im": z.imag}


def _dump_eigen(e: EigenDatum) -> dict:
    node: dict[str, Any] = {"chi": _dump_scalar(e.chi)}
    if (isinstance(e.omega, Exact) and bool(e.omega)) or \
            (not isinstance(e.omega, Exact) and e.omega != 0):
        node["omega"] = _dump_scalar(e.omega)
    if e.twist != 0:
        node["twist"] = {"num": e.twist.numerator, "den": e.twist.denominator}
    return node


def model_to_dict(model: FlowModel) -> dict:
    doc: dict[str, Any] = {
        "dim": model.dim,
        "rank": model.rank,
        "fixed_points": [
            {"name": f.name, "eigenvalues": [_dump_eigen(e) for e in f.eigenvalues]}
            for f in model.fixed_points
        ],
        "orbits": [
            {
                "name": o.name,
                "period": _dump_scalar(o.period),
                "eigenvalues": [_dump_eigen(e) for e in o.eigenvalues],
                "orientability_index": {
                    "num": o.orientability_index.numerator,
                    "den": o.orientability_index.denominator,
                },
            }
            for o in model.orbits
        ],
        "connection": {
            "orbit_exponents": {
                name: [_dump_complex(g) for g in gs]
                for name, gs in sorted(model.connection.orbit_exponents.items())
            }
        },
        "quiver_edges": [list(e) for e in model.quiver_edges],
    }
    return doc


def save_model(model: FlowModel, path: str):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, indent=2, sort_keys=True)
        fh.write("\n")
