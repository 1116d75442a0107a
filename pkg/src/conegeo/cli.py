"""Command-line front end.

Every subcommand prints one JSON document::

    {"op": ..., "version": ..., "inputs": {...}, "value": ...,
     "diagnostics": {..., "timings": {...}}}

or, with ``--format csv``, a table for the tabular reports.  Exit codes:
0 success, 2 invalid input, 3 numerical failure, 64 unknown subcommand,
65 malformed input file.
"""

import argparse
import csv
import io
import json
import os
import sys
import time
from dataclasses import dataclass

import numpy as np

from . import __version__
from . import frobchart, hessgeo, likelihood, permuto, spectra
from ._validation import NumericalFailure
from .symcone import matrix_from_json, matrix_to_json

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_UNKNOWN_COMMAND = 64
EXIT_BAD_FILE = 65

COMMANDS = (
    "metric", "third-tensor", "curvature", "ma-invariant", "chi", "geodesic", "prelie",
    "wdvv", "mldegree", "mle", "polar", "spectra", "permuto",
)
PERMUTO_ACTIONS = ("fvector", "vertices", "faces", "fan", "strata", "bb", "residuals", "report")

DEFAULTS = {
    "n": 2,
    "c": None,
    "tol": 1e-9,
    "seed": 0,
    "samples": 100_000,
    "trials": 3,
    "restarts": 500,
    "points": 1,
    "format": "json",
}


class BadInputFile(Exception):
    pass


@dataclass
class RunConfig:
    seed: int
    tol: float
    samples: int
    trials: int
    restarts: int
    points: int
    n: int
    c: float
    format: str
    out: str = None

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("--tol must be positive")
        for name in ("samples", "trials", "restarts", "points", "n"):
            if getattr(self, name) < 1:
                raise ValueError(f"--{name} must be >= 1")
        if self.c is not None and self.c <= 0:
            raise ValueError("--c must be positive")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class _UsageError(Exception):
    pass


def _common(parser):
    parser.add_argument("--n", type=int, help="matrix size (or permutohedron dimension)")
    parser.add_argument("--c", type=float, help="potential scale, default (n+1)/2")
    parser.add_argument("--tol", type=float)
    parser.add_argument("--seed", type=int, help="RNG seed (env CONEGEO_SEED if absent)")
    parser.add_argument("--samples", type=int)
    parser.add_argument("--trials", type=int)
    parser.add_argument("--restarts", type=int)
    parser.add_argument("--points", type=int, help="number of random points to evaluate")
    parser.add_argument("--model", help="linear model JSON file")
    parser.add_argument("--spec", help="spectrahedron JSON file")
    parser.add_argument("--format", choices=("json", "csv"))
    parser.add_argument("--out", help="write the report here instead of stdout")
    parser.add_argument("--config", help="JSON file with defaults for any flag")
    parser.add_argument("--no-timings", action="store_true",
                        help="omit wall-clock timings so output is byte-reproducible")


def build_parser():
    parser = _Parser(prog="conegeo", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def add(name, help_):
        p = sub.add_parser(name, help=help_)
        _common(p)
        return p

    for name, help_ in [
        ("metric", "Hessian metric of the log-det potential"),
        ("third-tensor", "third derivative tensor of the potential"),
        ("curvature", "curvature tensor and sectional-curvature sign check"),
        ("ma-invariant", "det(Hess) * det(X)^(n+1), constant on the cone"),
    ]:
        p = add(name, help_)
        p.add_argument("--x", help="point: matrix JSON file or inline JSON")
    p = add("chi", "characteristic function, closed form and Monte Carlo")
    p.add_argument("--x", help="point: matrix JSON file or inline JSON")
    p = add("geodesic", "affine-invariant geodesic between two PD matrices")
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--t", type=float, default=0.5)
    p = add("prelie", "flat pre-Lie product of polynomial vector fields")
    p.add_argument("--v", required=True, help="components, comma separated, in x1..xk")
    p.add_argument("--w", required=True)
    p = add("wdvv", "associativity equations and flatness on the diagonal chart; "
                    "residuals are absolute, not normalized")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--builtin", action="store_true", help="use -c sum log t_i (default)")
    g.add_argument("--potential", help="polynomial in t1..tn, e.g. 't1^4 + 1/2*t1*t2'")
    p.add_argument("--at", help="comma-separated point t instead of random points")
    p = add("mle", "maximum-likelihood concentration matrix")
    p.add_argument("--sample-cov", help="sample covariance matrix JSON (random PD if absent)")
    add("mldegree", "ML degree estimate by random-restart Newton")
    add("polar", "orthonormal basis of the polar space of a model")
    p = add("spectra", "spectrahedron / concentration-cone membership")
    p.add_argument("--point", required=True, help="comma-separated parameter vector")
    p = add("permuto", "permutohedron, fan and stratification combinatorics")
    p.add_argument("action", choices=PERMUTO_ACTIONS)
    p.add_argument("--weight", help="comma-separated generic integer weight (sums to 0)")
    p.add_argument("--allow-large", action="store_true", help="lift the enumeration size guard")
    return parser


def _load_json(source):
    text = source
    if not source.lstrip().startswith(("{", "[")):
        try:
            with open(source, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise BadInputFile(f"cannot read {source}: {exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise BadInputFile(f"malformed JSON in {source}: {exc}") from exc


def _load(source, decoder):
    obj = _load_json(source)
    try:
        return decoder(obj)
    except (KeyError, TypeError) as exc:
        raise BadInputFile(f"malformed input {source}: {exc}") from exc
    except ValueError as exc:
        # schema errors are file problems; math errors surface later
        raise BadInputFile(f"malformed input {source}: {exc}") from exc


def _floats(text, name):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ValueError(f"--{name} must be comma-separated numbers") from exc


def _ints(text, name):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ValueError(f"--{name} must be comma-separated integers") from exc


def _resolve(args):
    config = {}
    if args.config:
        config = _load_json(args.config)
        if not isinstance(config, dict):
            raise BadInputFile("config file must hold a JSON object")
    merged = {}
    for key, default in DEFAULTS.items():
        val = getattr(args, key, None)
        if val is None:
            val = config.get(key)
        if val is None and key == "seed" and os.environ.get("CONEGEO_SEED"):
            try:
                val = int(os.environ["CONEGEO_SEED"])
            except ValueError as exc:
                raise ValueError("CONEGEO_SEED must be an integer") from exc
        merged[key] = default if val is None else val
    for key in ("model", "spec", "out"):
        if getattr(args, key, None) is None and key in config:
            setattr(args, key, config[key])
    return RunConfig(out=args.out, **merged)


def _points(args, cfg):
    if getattr(args, "x", None):
        return [_load(args.x, matrix_from_json)]
    rng = np.random.default_rng(cfg.seed)
    return [hessgeo.random_pd(cfg.n, rng) for _ in range(cfg.points)]


def _potential(cfg, X):
    return hessgeo.Potential(X.shape[0], cfg.c)


def cmd_metric(args, cfg):
    rows, drift = [], 0.0
    for X in _points(args, cfg):
        mt = hessgeo.metric(_potential(cfg, X), X)
        drift = max(drift, float(np.max(np.abs(mt.g - mt.g.T))))
        rows.append({"X": matrix_to_json(X), "g": mt.g.tolist(),
                     "min_eig": float(np.linalg.eigvalsh(mt.g)[0])})
    return rows, {"symmetry_drift": drift}, None


def cmd_third_tensor(args, cfg):
    rows, drift = [], 0.0
    for X in _points(args, cfg):
        A = hessgeo.third_tensor(_potential(cfg, X), X).A
        for perm in [(0, 2, 1), (1, 0, 2), (1, 2, 0), (2, 0, 1), (2, 1, 0)]:
            drift = max(drift, float(np.max(np.abs(A - A.transpose(perm)))))
        rows.append({"X": matrix_to_json(X), "A": A.tolist()})
    return rows, {"symmetry_drift": drift}, None


def cmd_curvature(args, cfg):
    rng = np.random.default_rng([cfg.seed, 1])
    rows, worst = [], -np.inf
    for X in _points(args, cfg):
        P = _potential(cfg, X)
        R = hessgeo.curvature(P, X)
        secs = [hessgeo.sectional_curvature(P, X, rng.standard_normal(P.N), rng.standard_normal(P.N))
                for _ in range(100)] if P.N > 1 else []
        worst = max([worst] + secs)
        rows.append({"X": matrix_to_json(X), "R": R.tolist(), "max_abs": float(np.max(np.abs(R))),
                     "max_sectional": max(secs) if secs else None})
    return rows, {"max_sectional_curvature": None if worst == -np.inf else float(worst),
                  "planes_per_point": 100}, None


def cmd_ma_invariant(args, cfg):
    rows = []
    for X in _points(args, cfg):
        P = _potential(cfg, X)
        rows.append({"X": matrix_to_json(X), "invariant": hessgeo.monge_ampere_invariant(P, X),
                     "expected": P.c ** P.N})
    rel = max(abs(r["invariant"] / r["expected"] - 1) for r in rows)
    return rows, {"max_relative_deviation": rel}, None


def cmd_chi(args, cfg):
    X = _points(args, cfg)[0]
    P = _potential(cfg, X)
    closed = hessgeo.chi_closed_form(P, X)
    mean, err = hessgeo.chi_monte_carlo(P, X, cfg.samples, seed=cfg.seed)
    value = {"X": matrix_to_json(X), "closed_form": closed, "monte_carlo": mean,
             "stderr": err, "ratio": mean / closed}
    return value, {"samples": cfg.samples}, None


def cmd_geodesic(args, cfg):
    X = _load(args.x, matrix_from_json)
    Y = _load(args.y, matrix_from_json)
    G = hessgeo.geodesic(X, Y, args.t)
    off = G - np.diag(np.diag(G))
    return matrix_to_json(G), {"t": args.t, "max_offdiag": float(np.max(np.abs(off)))}, None


def cmd_prelie(args, cfg):
    v = [c for c in args.v.split(",")]
    w = [c for c in args.w.split(",")]
    try:
        V = hessgeo.PolyVectorField.from_strings(v)
        W = hessgeo.PolyVectorField.from_strings(w)
    except Exception as exc:  # sympy raises a zoo of parse errors
        if isinstance(exc, ValueError):
            raise
        raise ValueError(f"cannot parse vector field: {exc}") from exc
    value = {"v_o_w": hessgeo.pre_lie_product(V, W).as_strings(),
             "w_o_v": hessgeo.pre_lie_product(W, V).as_strings()}
    return value, {"variables": V.dim}, None


def cmd_wdvv(args, cfg):
    n = cfg.n
    if args.potential:
        pot = frobchart.parse_potential(args.potential, n)
        kind = "polynomial"
    else:
        pot = frobchart.LogPotential(n, cfg.c)
        kind = "builtin"
    if args.at:
        pts = [_floats(args.at, "at")]
        if len(pts[0]) != n:
            raise ValueError(f"--at needs {n} coordinates")
    else:
        rng = np.random.default_rng(cfg.seed)
        pts = rng.uniform(0.1, 10.0, size=(cfg.points, n)).tolist()
    res = [frobchart.wdvv_residual(pot, t) for t in pts]
    flat = [frobchart.chart_flatness(pot, t) for t in pts]
    value = {"max_residual": max(res), "max_flatness": max(flat), "points": len(pts)}
    diag = {"potential": kind, "residuals": res, "flatness": flat, "normalized": False}
    return value, diag, None


def _model(args):
    if not args.model:
        raise ValueError("--model is required")
    return _load(args.model, likelihood.LinearModel.from_json)


def cmd_mle(args, cfg):
    model = _model(args)
    if args.sample_cov:
        S = _load(args.sample_cov, matrix_from_json)
    else:
        S = likelihood.random_sample_covariance(model.n, np.random.default_rng(cfg.seed), pd=True)
    res = likelihood.mle(model, S)
    value = {"K": matrix_to_json(res.K), "x": res.x.tolist(), "loglik": res.loglik}
    diag = {"iterations": res.n_iter, "score_norm": res.score_norm, "S": matrix_to_json(S)}
    return value, diag, None


def cmd_mldegree(args, cfg):
    model = _model(args)
    res = likelihood.ml_degree(model, trials=cfg.trials, restarts=cfg.restarts, seed=cfg.seed)
    table = (["trial", "distinct", "converged"],
             [[i, t.n_distinct, t.n_converged] for i, t in enumerate(res.trials)])
    diag = {"restarts": cfg.restarts, "trials": cfg.trials,
            "max_membership_residual": max(t.max_membership_residual for t in res.trials)}
    return res.to_json(), diag, table


def cmd_polar(args, cfg):
    model = _model(args)
    basis = likelihood.polar_space(model)
    return [matrix_to_json(B) for B in basis], {"dim": len(basis), "d": model.d, "N": model.N}, None


def cmd_spectra(args, cfg):
    x = _floats(args.point, "point")
    if args.spec:
        spec = _load(args.spec, spectra.Spectrahedron.from_json)
        cls = spectra.membership(spec, x, cfg.tol)
        value = cls.to_json()
        diag = {"kind": type(spec).__name__}
        if isinstance(spec, spectra.Diagospectrahedron):
            ineq = spectra.diago_inequalities(spec)
            value["inequalities"] = {"constants": list(ineq.constants),
                                     "coefficients": [list(r) for r in ineq.coefficients]}
            diag["inequality_classification"] = ineq.classify(x, cfg.tol).status.value
        return value, diag, None
    if args.model:
        model = _model(args)
        return spectra.concentration_cone_membership(model, x, cfg.tol).to_json(), {"kind": "LinearModel"}, None
    raise ValueError("spectra needs --spec or --model")


def cmd_permuto(args, cfg):
    n = cfg.n
    act = args.action
    if act == "fvector":
        f = permuto.f_vector(n, args.allow_large)
        euler = sum((-1) ** k * v for k, v in enumerate(f))
        return ({"f": f, "total": sum(f), "euler": euler}, {},
                (["dim", "count"], [[k, v] for k, v in enumerate(f)]))
    if act == "vertices":
        vs = permuto.vertices(n)
        return [list(v) for v in vs], {"count": len(vs)}, (["vertex"], [[" ".join(map(str, v))] for v in vs])
    if act == "faces":
        fs = permuto.faces(n, args.allow_large)
        return ([{"blocks": f.to_json(), "dim": f.face_dim} for f in fs], {"count": len(fs)},
                (["blocks", "dim"], [["|".join(" ".join(map(str, b)) for b in f.blocks), f.face_dim] for f in fs]))
    if act == "fan":
        fan = permuto.weyl_chamber_fan(n)
        cones = fan.cones()
        value = {"maximal_cones": [list(s.image) for s in fan.maximal_cones()],
                 "cones": [{"blocks": c.to_json(), "dim": c.cone_dim} for c in cones]}
        return value, {"n_maximal": len(value["maximal_cones"]), "n_cones": len(cones)}, None
    if act == "strata":
        rows, total = permuto.fixed_point_strata(n)
        value = {"strata": [{"J": list(J.J), "size": s} for J, s in rows], "total": total}
        return value, {}, (["J", "size"], [[" ".join(map(str, J.J)), s] for J, s in rows])
    if act == "bb":
        weight = _ints(args.weight, "weight") if args.weight else None
        cells = permuto.bb_cells(n, weight)
        census = {str(k): v for k, v in cells.census.items()}
        value = {"census": census, "total": cells.total,
                 "cells": [{"vertex": list(v), "dim": d} for v, d in cells.cells]}
        diag = {"weight": list(weight) if weight else list(permuto.default_weight(n))}
        return value, diag, (["dim", "count"], [[k, v] for k, v in cells.census.items()])
    if act == "residuals":
        strata = permuto.frobenius_residual_strata(n, args.allow_large)
        value = {"by_dim": {str(k): [s.to_json() for s in v] for k, v in sorted(strata.items())},
                 "total": sum(len(v) for v in strata.values())}
        return value, {}, (["dim", "count"], [[k, len(v)] for k, v in sorted(strata.items())])
    # report
    return permuto.ml_degree_indexing_report(n, args.allow_large), {}, None


HANDLERS = {
    "metric": cmd_metric, "third-tensor": cmd_third_tensor, "curvature": cmd_curvature,
    "ma-invariant": cmd_ma_invariant, "chi": cmd_chi, "geodesic": cmd_geodesic,
    "prelie": cmd_prelie, "wdvv": cmd_wdvv, "mle": cmd_mle, "mldegree": cmd_mldegree,
    "polar": cmd_polar, "spectra": cmd_spectra, "permuto": cmd_permuto,
}


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _inputs(args, cfg):
    skip = {"command", "config", "out", "format", "no_timings"}
    raw = {k: v for k, v in vars(args).items() if k not in skip and v is not None and v is not False}
    raw.update({k: getattr(cfg, k) for k in ("seed",) if k not in raw})
    return raw


def _render(doc, table, fmt):
    if fmt == "csv":
        if table is None:
            raise ValueError(f"--format csv is not available for '{doc['op']}'")
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(table[0])
        writer.writerows(table[1])
        return buf.getvalue()
    return json.dumps(doc, indent=2, default=_jsonable) + "\n"


def _fail(code, message):
    sys.stderr.write(f"conegeo: error: {message}\n")
    return code


def dispatch(argv=None):
    """Run one subcommand; returns the process exit status."""
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv:
        build_parser().print_help(sys.stderr)
        return EXIT_UNKNOWN_COMMAND
    first = argv[0]
    if not first.startswith("-") and first not in COMMANDS:
        return _fail(EXIT_UNKNOWN_COMMAND, f"unknown subcommand '{first}' (choose from {', '.join(COMMANDS)})")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        return _fail(EXIT_VALIDATION, str(exc))
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    if args.command is None:
        parser.print_help(sys.stderr)
        return EXIT_UNKNOWN_COMMAND
    start = time.perf_counter()
    try:
        cfg = _resolve(args)
        value, diag, table = HANDLERS[args.command](args, cfg)
        diag = dict(diag)
        if not args.no_timings:
            diag["timings"] = {"total_s": round(time.perf_counter() - start, 6)}
        doc = {"op": args.command, "version": __version__, "inputs": _inputs(args, cfg),
               "value": value, "diagnostics": diag}
        text = _render(doc, table, cfg.format)
    except BadInputFile as exc:
        return _fail(EXIT_BAD_FILE, str(exc))
    except NumericalFailure as exc:
        return _fail(EXIT_NUMERICAL, str(exc))
    except (ValueError, TypeError) as exc:
        return _fail(EXIT_VALIDATION, str(exc))
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def main():
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
