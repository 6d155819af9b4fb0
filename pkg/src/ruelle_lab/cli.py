"""Command-line front end: model ingestion, subcommands, deterministic tables.

Exit codes: 0 success, 2 I/O failure, 3 schema failure, 4 invariant failure,
5 oracle mismatch.  All randomness is seed-controlled (fixed default), so runs
are byte-identical for identical inputs.
"""

from __future__ import annotations

import csv
import io
import json
import math
import sys

import click
import numpy as np

from . import modelfile, quiver as quiver_mod, spectrum
from .model import FlowModel, validate_model
from .modelfile import SchemaError
from .spectrum import Box

EXIT_IO = 2
EXIT_SCHEMA = 3
EXIT_INVARIANT = 4
EXIT_ORACLE_MISS = 5


def parse_model_file(path: str, mode: str = "float") -> FlowModel:
    """Load and validate; exits with the documented codes on failure."""
    try:
        model = modelfile.load_model(path, mode=mode)
    except OSError as err:
        click.echo(f"error: cannot read {path}: {err}", err=True)
        sys.exit(EXIT_IO)
    except SchemaError as err:
        click.echo(f"schema error: {err}", err=True)
        sys.exit(EXIT_SCHEMA)
    report = validate_model(model)
    if not report.ok:
        for v in report.violations:
            click.echo(f"invariant violation: {v}", err=True)
        sys.exit(EXIT_INVARIANT)
    return model


def _guard(fn):
    """Turn in-range violations (bad degree, non-unitary mode) into exit 4."""
    import functools

    @functools.wraps(fn)
    def wrapped(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (spectrum.SpectrumError, ValueError) as err:
            click.echo(f"error: {err}", err=True)
            sys.exit(EXIT_INVARIANT)

    return wrapped


def _emit(rows, header, fmt: str, out: str | None):
    if fmt == "json":
        payload = [dict(zip(header, row)) for row in rows]
        text = json.dumps(payload, indent=2) + "\n"
    else:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        text = buf.getvalue()
    if out:
        try:
            with open(out, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as err:
            click.echo(f"error: cannot write {out}: {err}", err=True)
            sys.exit(EXIT_IO)
    else:
        click.echo(text, nl=False)


def _mask_bits(mask) -> int:
    return sum(1 << i for i in mask)


def _fnum(x) -> float:
    return float(x)


_shared = [
    click.option("--mode", type=click.Choice(["exact", "float"]),
                 default="float", show_default=True),
    click.option("--out", type=click.Path(dir_okay=False), default=None),
    click.option("--format", "fmt", type=click.Choice(["csv", "json"]),
                 default="csv", show_default=True),
]


def shared_options(fn):
    for opt in reversed(_shared):
        fn = opt(fn)
    return fn


@click.group()
def main():
    """Resonance spectra of Morse-Smale flows from linearization data."""


@main.command()
@click.argument("model_path", type=click.Path())
@click.option("--mode", type=click.Choice(["exact", "float"]), default="float")
def validate(model_path, mode):
    """Validate a model file against all standing hypotheses."""
    parse_model_file(model_path, mode)
    click.echo("ok")


@main.command(name="spectrum")
@click.argument("model_path", type=click.Path())
@click.option("--k", required=True, type=int)
@click.option("--t", "--T", "t_re", required=True, type=float,
              help="real box bound: Re z >= -T")
@click.option("--t-im", "--T-im", "t_im", type=float, default=None,
              help="imaginary bound (defaults to --T)")
@shared_options
@_guard
def spectrum_cmd(model_path, k, t_re, t_im, mode, out, fmt):
    """Resonances with multiplicities and provenance inside a box."""
    model = parse_model_file(model_path, mode)
    box = Box(t_re, t_im if t_im is not None else t_re)
    rows = []
    for r in spectrum.resonances(model, k, box):
        for c in r.contributions:
            rows.append([
                _fnum(spectrum._c_re(r.z)), _fnum(spectrum._c_im(r.z)),
                r.multiplicity, c.element, " ".join(map(str, c.alpha)),
                c.alpha_n if c.alpha_n is not None else "",
                c.bundle, _mask_bits(c.mask),
            ])
    _emit(rows, ["re", "im", "multiplicity", "element", "alpha", "alpha_n",
                 "bundle_j", "epsilon_mask"], fmt, out)


@main.command()
@click.argument("model_path", type=click.Path())
@click.option("--k", required=True, type=int)
@click.option("--t", "--T", "t", required=True, type=float)
@shared_options
@_guard
def imaginary(model_path, k, t, mode, out, fmt):
    """Imaginary-axis spectrum with multiplicities, |Im z| <= T."""
    model = parse_model_file(model_path, mode)
    try:
        pts = spectrum.enumerate_imaginary(model, k, t)
        exact_count, prediction = spectrum.count_imaginary(model, k, t)
    except spectrum.NonUnitaryError as err:
        click.echo(f"error: {err}", err=True)
        sys.exit(EXIT_INVARIANT)
    rows = [[0.0, _fnum(spectrum._c_im(z)), mult] for z, mult in pts]
    rows.append(["count", exact_count, prediction])
    _emit(rows, ["re", "im", "multiplicity"], fmt, out)


@main.command()
@click.argument("model_path", type=click.Path())
@click.option("--k", required=True, type=int)
@click.option("--t", "--T", "t_re", required=True, type=float)
@click.option("--t-im", "--T-im", "t_im", type=float, default=None)
@shared_options
@_guard
def bands(model_path, k, t_re, t_im, mode, out, fmt):
    """Vertical band decomposition of the spectrum in a box."""
    model = parse_model_file(model_path, mode)
    box = Box(t_re, t_im if t_im is not None else t_re)
    rows = []
    for b in spectrum.band_decomposition(model, k, box):
        rows.append([
            b.element,
            _fnum(spectrum._c_re(b.offset)), _fnum(spectrum._c_im(b.offset)),
            _fnum(b.step) if b.step is not None else 0.0,
            _fnum(b.phase) if b.phase is not None else 0.0,
            b.multiplicity,
        ])
    _emit(rows, ["element", "offset_re", "offset_im", "step_im", "phase",
                 "multiplicity"], fmt, out)


@main.command()
@click.argument("model_path", type=click.Path())
@click.option("--k", required=True, type=int)
@click.option("--t", "--T", "t", required=True, type=float)
@click.option("--tol", type=float, default=1e-3, show_default=True,
              help="Monte Carlo volume error target")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--method", type=click.Choice(["auto", "exact", "montecarlo"]),
              default="auto", show_default=True)
@shared_options
@_guard
def weyl(model_path, k, t, tol, seed, method, mode, out, fmt):
    """Exact counting function N_k(T) and the polytope-volume prediction."""
    model = parse_model_file(model_path, mode)
    count = spectrum.weyl_count(model, k, t)
    prediction, err = spectrum.weyl_prediction(model, k, t, method=method,
                                               tol=tol, seed=seed)
    _emit([[count, prediction, err]], ["count", "prediction", "error_bound"],
          fmt, out)


@main.command(name="floquet")
@click.argument("csv_path", type=click.Path())
@click.option("--period", type=float, required=True)
@click.option("--tol", type=float, default=1e-10, show_default=True)
@click.option("--connection", "is_connection", is_flag=True,
              help="columns are re/im pairs of a connection coefficient")
@shared_options
def floquet_cmd(csv_path, period, tol, is_connection, mode, out, fmt):
    """Monodromy and Floquet decomposition of a sampled coefficient.

    Input rows: theta, a11, a12, ... (row-major); with --connection the matrix
    entries alternate re, im.
    """
    from . import floquet as fl

    try:
        raw = np.loadtxt(csv_path, delimiter=",", ndmin=2)
    except OSError as err:
        click.echo(f"error: cannot read {csv_path}: {err}", err=True)
        sys.exit(EXIT_IO)
    except ValueError as err:
        click.echo(f"schema error: {err}", err=True)
        sys.exit(EXIT_SCHEMA)
    thetas = raw[:, 0]
    entries = raw[:, 1:]
    if is_connection:
        if entries.shape[1] % 2:
            click.echo("schema error: --connection needs re/im pairs", err=True)
            sys.exit(EXIT_SCHEMA)
        ncomplex = entries.shape[1] // 2
        n = int(round(math.sqrt(ncomplex)))
        if n * n != ncomplex:
            click.echo("schema error: entries do not form a square matrix", err=True)
            sys.exit(EXIT_SCHEMA)
        mats = (entries[:, 0::2] + 1j * entries[:, 1::2]).reshape(-1, n, n)
    else:
        n = int(round(math.sqrt(entries.shape[1])))
        if n * n != entries.shape[1]:
            click.echo("schema error: entries do not form a square matrix", err=True)
            sys.exit(EXIT_SCHEMA)
        mats = entries.reshape(-1, n, n)
    coeff = fl.PeriodicCoefficient.from_samples(thetas, mats, period)

    if is_connection:
        _, gammas = fl.connection_monodromy(coeff, tol)
        rows = [[j + 1, g.real, g.imag] for j, g in enumerate(gammas)]
        _emit(rows, ["j", "gamma_re", "gamma_im"], fmt, out)
        return
    m = fl.monodromy(coeff, tol)
    dec = fl.floquet_decompose(m, period)
    rows = []
    for i in range(len(dec.multipliers)):
        rows.append([
            dec.multipliers[i].real, dec.multipliers[i].imag,
            dec.lyapunov[i], dec.frequencies[i],
            float(dec.twists[i]),
        ])
    rows.append(["orientable_u", dec.orientable_u, "", "", ""])
    rows.append(["orientable_s", dec.orientable_s, "", "", ""])
    _emit(rows, ["nu_re", "nu_im", "chi", "omega", "twist"], fmt, out)


@main.command(name="oracle")
@click.argument("model_path", type=click.Path())
@click.option("--k", required=True, type=int)
@click.option("--element", "element_name", default=None,
              help="element to verify (default: all)")
@click.option("--order", type=int, default=12, show_default=True)
@click.option("--leading", type=int, default=2, show_default=True,
              help="how many leading poles to hold against the prediction")
@click.option("--tol", type=float, default=1e-2, show_default=True,
              help="matching cutoff; leading-pole conditioning limits it")
@click.option("--seed", type=int, default=0, show_default=True)
@shared_options
@_guard
def oracle_cmd(model_path, k, element_name, order, leading, tol, seed, mode,
               out, fmt):
    """Correlation-function verification of the predicted spectrum.

    Only the leading poles are held against the prediction (deeper ones are
    numerically shadowed by the truncated exponential tail).  Exits 5 if a
    leading pole above the amplitude floor has no predicted partner in --tol.
    """
    from . import oracle as orc
    from .states import Chart, TestForm

    model = parse_model_file(model_path, "float")
    del seed  # correlation sampling is deterministic; flag kept for symmetry
    names = [element_name] if element_name else [e.name for e in model.elements]
    rows = []
    any_miss = False
    for name in names:
        try:
            elem = model.element(name)
        except KeyError:
            click.echo(f"error: unknown element {name}", err=True)
            sys.exit(EXIT_INVARIANT)
        chart = Chart(model, elem)
        full = chart.d + (1 if chart.is_orbit else 0)
        word2 = tuple(range(k))
        word1 = chart.complement(word2)
        if len(word1) + len(word2) != full:
            continue
        psi2 = TestForm.gaussian(chart, word=word2)
        psi1 = TestForm.gaussian(chart, word=word1)
        series = orc.correlation_series(chart, k, psi1, psi2)
        est = orc.extract_poles(series, order)
        est = orc.leading_poles(est, leading)
        t_max = max(abs(z) for z in est.exponents) + 1.0
        preds = [complex(r.z) for r in spectrum.resonances(
            _single_element_model(model, name), k, Box(t_max, t_max))]
        report = orc.match_spectrum(est, preds, tol=tol)
        for row in report.matched:
            rows.append([row.predicted.real, row.predicted.imag,
                         row.pole.real, row.pole.imag,
                         row.abs_err, abs(row.amplitude)])
        for row in report.unmatched:
            rows.append(["", "", row.pole.real, row.pole.imag,
                         "", abs(row.amplitude)])
        if not report.ok:
            any_miss = True
    _emit(rows, ["predicted_re", "predicted_im", "extracted_re",
                 "extracted_im", "abs_err", "amplitude"], fmt, out)
    if any_miss:
        click.echo("oracle: unexplained poles above the amplitude floor",
                   err=True)
        sys.exit(EXIT_ORACLE_MISS)


def _single_element_model(model: FlowModel, name: str) -> FlowModel:
    return FlowModel(
        dim=model.dim,
        connection=model.connection,
        fixed_points=tuple(f for f in model.fixed_points if f.name == name),
        orbits=tuple(o for o in model.orbits if o.name == name),
        quiver_edges=(),
        mode=model.mode,
    )


@main.command(name="states")
@click.argument("action", type=click.Choice(["check"]))
@click.argument("model_path", type=click.Path())
@click.option("--k", required=True, type=int)
@click.option("--alpha-max", type=int, default=1, show_default=True,
              help="enumerate alpha with |alpha| up to this total")
@click.option("--t-points", type=int, default=3, show_default=True)
@shared_options
@_guard
def states_cmd(action, model_path, k, alpha_max, t_points, mode, out, fmt):
    """Eigen-equation residuals of built germs over exhaustive masks."""
    from itertools import combinations
    from .states import (
        Chart,
        StateError,
        build_state,
        check_eigen,
        coupling_form,
        pair,
    )

    model = parse_model_file(model_path, "float")
    t_grid = [0.4 * (i + 1) for i in range(t_points)]
    rows = []
    for elem in model.elements:
        chart = Chart(model, elem)
        pool = len(chart.slots)
        n_alpha = len(chart.ctx.alpha_entries)
        for word in combinations(range(pool), k):
            for alpha in _alphas_up_to(n_alpha, alpha_max):
                try:
                    state = build_state(chart, alpha, word, 1, k)
                except StateError:
                    continue
                psi = _exciting_form(chart, state)
                if psi is None:
                    continue  # this test-form family does not excite the germ
                res = check_eigen(state, psi, t_grid)
                rows.append([
                    elem.name, " ".join(map(str, alpha)), _mask_bits(word),
                    state.eigenvalue.real, state.eigenvalue.imag, res,
                ])
    _emit(rows, ["element", "alpha", "mask", "lambda_re", "lambda_im",
                 "residual"], fmt, out)


def _alphas_up_to(n: int, total: int):
    if n == 0:
        yield ()
        return
    for first in range(total + 1):
        for rest in _alphas_up_to(n - 1, total - first):
            yield (first,) + rest


def _exciting_form(chart, state):
    """coupling_form, falling back over nearby theta modes if it pairs to 0."""
    from dataclasses import replace

    from .states import coupling_form, pair

    psi = coupling_form(chart, state)
    for mode in (psi.theta_mode, 0.0, psi.theta_mode + 1, psi.theta_mode - 1):
        cand = replace(psi, theta_mode=mode) if chart.is_orbit else psi
        if abs(pair(state, cand)) > 1e-9:
            return cand
    return None


@main.command(name="quiver")
@click.argument("action", type=click.Choice(["hasse"]))
@click.argument("model_path", type=click.Path())
@shared_options
def quiver_cmd(action, model_path, mode, out, fmt):
    """Hasse diagram (transitive reduction) of the declared causality order."""
    model = parse_model_file(model_path, mode)
    q = quiver_mod.quiver_of_model(model)
    rows = [[a, b] for a, b in quiver_mod.hasse(q)]
    _emit(rows, ["lower", "upper"], fmt, out)


if __name__ == "__main__":
    main()
