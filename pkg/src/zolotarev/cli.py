"""Command-line entry point: ``zolotarev <subcommand> [options]``.

Every subcommand writes one table (CSV or JSON).  Log-domain quantities
appear twice, as ``log_*`` (natural) and ``log10_*``.  Exit status is 0
when every solve is certified, 2 when something was solved but not
certified, and 1 on any error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .analytic import nodes_for_pair, zolotarev_bounds
from .domains import SeparatedPair, load_pair
from .heuristic import (ExperimentConfig, best_partition, heuristic_error_log,
                        heuristic_nodes, sample_experiment, worker_count)
from .heuristic import CSV_COLUMNS as HEURISTIC_COLUMNS
from .skeleton import (SkeletonDecomposition, analytic_decomposition, kappa,
                       kappa_asymptote, kappa_fit)
from .solver import SolveOptions, SolverError, solve
from .svd_compare import extrema_geometry, report_rows, transferability
from .svd_compare import CSV_COLUMNS as EQUIVALENCE_COLUMNS

EXIT_OK, EXIT_ERROR, EXIT_UNCERTIFIED = 0, 1, 2
LOG10E = 1.0 / math.log(10.0)


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage, which would collide with "uncertified"
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    subcommand: str
    figure: str | None = None
    domain: str | None = None
    lam: float | None = None
    n_values: list = field(default_factory=list)
    lambdas: list = field(default_factory=list)
    seed: int = 0
    n_samples: int = 1000
    out: str | None = None
    format: str = "csv"
    certify_tol: float = 1e-8
    max_iter: int = 200
    meta: bool = True


# -- argument parsing -------------------------------------------------------

def parse_n_range(text: str) -> list[int]:
    """'A:B' -> [A, ..., B] (inclusive)."""
    try:
        a, b = (int(s) for s in text.split(":"))
    except ValueError:
        raise UsageError(f"--n-range expects A:B, got {text!r}")
    if a < 1 or b < a:
        raise UsageError("--n-range needs 1 <= A <= B")
    return list(range(a, b + 1))


def parse_lambda_grid(text: str) -> list[float]:
    """'A:B:COUNT' -> COUNT log-spaced values from A to B."""
    try:
        a, b, c = text.split(":")
        a, b, c = float(a), float(b), int(c)
    except ValueError:
        raise UsageError(f"--lambda-grid expects A:B:COUNT, got {text!r}")
    if not (0 < a < 1 and 0 < b < 1) or c < 1:
        raise UsageError("--lambda-grid needs 0 < A, B < 1 and COUNT >= 1")
    if c == 1:
        return [a]
    return [float(v) for v in np.geomspace(a, b, c)]


FIGURE_DEFAULTS = {
    "heuristic": {"n": "1:14", "grid": None},
    "condition": {"n": "2:100", "grid": "1e-7:0.9:8"},
    "equivalence": {"n": "99:99", "grid": "1e-7:1e-2:6"},
}


def _add_common(p):
    p.add_argument("--domain", metavar="PATH",
                   help="JSON file {\"X\": {...}, \"Y\": {...}} with 'intervals' or 'points'")
    p.add_argument("--lambda", dest="lam", type=float, metavar="F",
                   help="use the symmetric pair [F, 1] x [-1, -F]")
    p.add_argument("--n", type=int, metavar="INT")
    p.add_argument("--n-range", metavar="A:B")
    p.add_argument("--lambda-grid", metavar="A:B:COUNT")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=1000, help="sample count for fig heuristic")
    p.add_argument("--out", metavar="PATH", help="output file (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--certify-tol", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=200)
    p.add_argument("--no-meta", action="store_true", help="omit the metadata/timestamp header")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="zolotarev", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)
    for name, help_ in [("analytic", "closed-form nodes and log Z_n"),
                        ("solve", "numerical solution on a domain pair"),
                        ("heuristic", "outlier-covering bound for point sets"),
                        ("kappa", "condition numbers of the skeleton decomposition")]:
        _add_common(sub.add_parser(name, help=help_))
    fig = sub.add_parser("fig", help="data behind the three figures")
    fig.add_argument("figure", choices=sorted(FIGURE_DEFAULTS))
    _add_common(fig)
    return parser


def make_config(ns: argparse.Namespace) -> RunConfig:
    fig = getattr(ns, "figure", None)
    if ns.n is not None and ns.n_range is not None:
        raise UsageError("give --n or --n-range, not both")
    if ns.lam is not None and ns.lambda_grid is not None:
        raise UsageError("give --lambda or --lambda-grid, not both")
    if ns.n is not None:
        if ns.n < 1:
            raise UsageError("--n must be >= 1")
        n_values = [ns.n]
    elif ns.n_range is not None:
        n_values = parse_n_range(ns.n_range)
    elif fig:
        n_values = parse_n_range(FIGURE_DEFAULTS[fig]["n"])
    else:
        raise UsageError("--n or --n-range is required")
    if ns.lam is not None:
        if not 0 < ns.lam < 1:
            raise UsageError("--lambda must lie in (0, 1)")
        lambdas = [ns.lam]
    elif ns.lambda_grid is not None:
        lambdas = parse_lambda_grid(ns.lambda_grid)
    elif fig and FIGURE_DEFAULTS[fig]["grid"]:
        lambdas = parse_lambda_grid(FIGURE_DEFAULTS[fig]["grid"])
    else:
        lambdas = []
    if ns.subcommand != "fig":
        if (ns.domain is None) == (not lambdas):
            raise UsageError("give exactly one of --domain, --lambda or --lambda-grid")
        if ns.subcommand == "heuristic" and ns.domain is None:
            raise UsageError("heuristic needs --domain with point sets")
    if ns.certify_tol <= 0 or ns.max_iter < 1 or ns.samples < 1:
        raise UsageError("--certify-tol, --max-iter and --samples must be positive")
    return RunConfig(ns.subcommand, fig, ns.domain, ns.lam, n_values, lambdas, ns.seed,
                     ns.samples, ns.out, ns.format, ns.certify_tol, ns.max_iter, not ns.no_meta)


# -- output -----------------------------------------------------------------

def _cell(v):
    if isinstance(v, (list, tuple, np.ndarray)):
        return " ".join(repr(float(t)) for t in v)
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _json_value(v):
    if isinstance(v, np.ndarray):
        return [_json_value(float(t)) for t in v]
    if isinstance(v, (list, tuple)):
        return [_json_value(t) for t in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        # JSON has no inf/nan; strings keep the file strict and round-trippable
        return v if math.isfinite(v) else repr(v)
    if isinstance(v, np.integer):
        return int(v)
    return v


def with_log10(row: dict) -> dict:
    """Insert a log10_* column after every natural-log log_* column."""
    out = {}
    for k, v in row.items():
        out[k] = v
        if k.startswith("log_") and isinstance(v, (int, float)) and not isinstance(v, bool):
            out["log10_" + k[4:]] = v * LOG10E
    return out


def render(rows: list[dict], cfg: RunConfig, columns=None) -> str:
    rows = [with_log10(r) for r in rows]
    if columns is None:
        columns = []
        for r in rows:
            columns += [k for k in r if k not in columns]
    else:
        columns = list(with_log10({c: 0.0 if c.startswith("log_") else None for c in columns}))
    meta = {"program": "zolotarev", "version": __version__, "config": asdict(cfg),
            "generated": time.strftime("%Y-%m-%dT%H:%M:%S%z")}
    if cfg.format == "json":
        doc = {"columns": columns,
               "rows": [{c: _json_value(r.get(c)) for c in columns} for r in rows]}
        if cfg.meta:
            doc = {"meta": meta, **doc}
        return json.dumps(doc, indent=1) + "\n"
    buf = io.StringIO()
    if cfg.meta:
        buf.write("# " + json.dumps(meta, sort_keys=True) + "\n")
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow({c: _cell(r.get(c, "")) for c in columns})
    return buf.getvalue()


def _parse_cell(text: str):
    if text in ("true", "false"):
        return text == "true"
    if text == "":
        return None
    try:
        return int(text)
    except ValueError:
        pass
    parts = text.split(" ")
    try:
        vals = [float(p) for p in parts]
    except ValueError:
        return text
    return vals[0] if len(vals) == 1 else vals


def read_table(text: str) -> list[dict]:
    """Parse CSV or JSON output of ``render`` back into rows."""
    s = text.lstrip()
    if s.startswith("{"):
        doc = json.loads(s)

        def back(v):
            if isinstance(v, str) and v in ("inf", "-inf", "nan"):
                return float(v)
            if isinstance(v, list):
                return [back(t) for t in v]
            return v
        return [{k: back(v) for k, v in r.items()} for r in doc["rows"]]
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return [{k: _parse_cell(v) for k, v in r.items()} for r in csv.DictReader(lines)]


# -- subcommands ------------------------------------------------------------

def _pairs(cfg: RunConfig):
    if cfg.domain is not None:
        return [(None, load_pair(cfg.domain))]
    return [(lam, SeparatedPair.symmetric(lam)) for lam in cfg.lambdas]


def _opts(cfg: RunConfig, **kw) -> SolveOptions:
    return SolveOptions(max_iter=cfg.max_iter, certify_tol=cfg.certify_tol, **kw)


def _bounds_cols(n: int, lam: float) -> dict:
    lo, up, base, up3 = zolotarev_bounds(n, lam)
    return {"log_bound_lower": lo, "log_bound_upper": up, "log_bound_4r": base,
            "log_bound_tilde": up3}


def cmd_analytic(cfg: RunConfig):
    rows = []
    for _, pair in _pairs(cfg):
        for n in cfg.n_values:
            nodes = nodes_for_pair(n, pair)
            rows.append({"lambda": pair.lam, "n": n, "log_Zn": nodes["log_Zn"],
                         **_bounds_cols(n, pair.lam), "certified": True,
                         "roots": nodes["roots"], "poles": nodes["poles"]})
    return rows, None, EXIT_OK


def _kappa_cols(eq) -> dict:
    if eq.covering:
        return {"kappa_xy": math.nan, "kappa_yx": math.nan}
    kxy, kyx = kappa(SkeletonDecomposition.from_solution(eq), eq.pair)
    return {"kappa_xy": kxy, "kappa_yx": kyx}


def cmd_solve(cfg: RunConfig):
    rows, status = [], EXIT_OK
    for _, pair in _pairs(cfg):
        for n in cfg.n_values:
            row = {"lambda": pair.lam, "n": n}
            try:
                eq, rep = solve(pair, n, _opts(cfg))
            except SolverError as e:
                rep = e.report
                row.update({"log_Zn": rep.log_Zn if rep else math.nan,
                            "iterations": rep.iterations if rep else -1,
                            "certified": False, "termination": type(e).__name__,
                            "error": str(e)})
                rows.append(row)
                status = EXIT_ERROR
                continue
            row.update({"log_Zn": rep.log_Zn, **_bounds_cols(n, pair.lam),
                        "iterations": rep.iterations, "final_deviation": rep.final_deviation,
                        "certified": rep.certified, "termination": rep.termination,
                        **_kappa_cols(eq), "roots": eq.roots(), "poles": eq.poles(),
                        "error": ""})
            rows.append(row)
            if not rep.certified and status == EXIT_OK:
                status = EXIT_UNCERTIFIED
    return rows, None, status


def cmd_heuristic(cfg: RunConfig):
    pair = load_pair(cfg.domain)
    if not (pair.X.is_points and pair.Y.is_points):
        raise UsageError("heuristic needs point sets for both X and Y")
    X, Y = pair.X.point_values, pair.Y.point_values
    rows = []
    for n in cfg.n_values:
        p = best_partition(X, Y, n)
        xt, yt = heuristic_nodes(p, X, Y)
        rows.append({"n": n, "n_minus": p.n_minus, "n_plus": p.n_plus,
                     "log_bound": p.log_bound, "log_bound_loose": p.log_bound_loose,
                     "log_error": heuristic_error_log(X, Y, xt, yt),
                     "roots": np.sort(xt), "poles": np.sort(yt)[::-1]})
    return rows, None, EXIT_OK


def _kappa_row(r: int, lam: float | None, pair: SeparatedPair | None, cfg: RunConfig):
    """One kappa row; analytic nodes on the symmetric pair, solved nodes otherwise."""
    certified = True
    if pair is None:
        pair = SeparatedPair.symmetric(lam)
        dec = analytic_decomposition(r, lam)
    else:
        eq, rep = solve(pair, r, _opts(cfg))
        certified = rep.certified
        if eq.covering:
            return {"lambda": pair.lam, "r": r, "kappa_xy": math.nan, "kappa_yx": math.nan,
                    "kappa_bar": kappa_asymptote(r), "offset": math.nan,
                    "offset_fit": kappa_fit(pair.lam), "certified": True}
        dec = SkeletonDecomposition.from_solution(eq)
    kxy, kyx = kappa(dec, pair)
    kbar = kappa_asymptote(r)
    return {"lambda": pair.lam, "r": r, "kappa_xy": kxy, "kappa_yx": kyx, "kappa_bar": kbar,
            "offset": max(kxy, kyx) - kbar, "offset_fit": kappa_fit(pair.lam),
            "certified": certified}


def _kappa_job(args):
    return _kappa_row(*args)


def _ordered_map(fn, jobs):
    """Map in order, over ZS_THREADS processes when more than one is allowed."""
    workers = min(worker_count(), len(jobs))
    if workers <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, jobs))


def cmd_kappa(cfg: RunConfig):
    if cfg.domain is not None:
        pair = load_pair(cfg.domain)
        jobs = [(r, None, pair, cfg) for r in cfg.n_values]
    else:
        jobs = [(r, lam, None, cfg) for lam in cfg.lambdas for r in cfg.n_values]
    try:
        rows = _ordered_map(_kappa_job, jobs)
    except SolverError as e:
        raise RuntimeError(f"solver failed: {e}")
    status = EXIT_OK if all(r["certified"] for r in rows) else EXIT_UNCERTIFIED
    return rows, None, status


def _equivalence_job(args):
    n, lam = args
    x, y = extrema_geometry(n, lam)
    rep = transferability(x, y, n - 1, lam_weights=lam)
    rows = []
    for row, rr in zip(report_rows(lam, rep), rep.rows):
        row = dict(row, n=n, error=rr.error)
        rows.append(row)
    return rows


def cmd_fig(cfg: RunConfig):
    if cfg.figure == "heuristic":
        ecfg = ExperimentConfig(seed=cfg.seed, n_samples=cfg.n_samples,
                                n_min=min(cfg.n_values), n_max=max(cfg.n_values),
                                max_iter=cfg.max_iter)
        rows = sample_experiment(ecfg)
        # failed solves are rows with certified = false, not hard errors
        return rows, HEURISTIC_COLUMNS, EXIT_OK
    if cfg.figure == "condition":
        jobs = [(r, lam, None, cfg) for lam in cfg.lambdas for r in cfg.n_values]
        return _ordered_map(_kappa_job, jobs), None, EXIT_OK
    if len(cfg.n_values) != 1 or cfg.n_values[0] < 2:
        raise UsageError("fig equivalence takes a single --n >= 2")
    jobs = [(cfg.n_values[0], lam) for lam in cfg.lambdas]
    rows = [r for block in _ordered_map(_equivalence_job, jobs) for r in block]
    return rows, ["n"] + EQUIVALENCE_COLUMNS + ["error"], EXIT_OK


COMMANDS = {"analytic": cmd_analytic, "solve": cmd_solve, "heuristic": cmd_heuristic,
            "kappa": cmd_kappa, "fig": cmd_fig}


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = make_config(ns)
        rows, columns, status = COMMANDS[cfg.subcommand](cfg)
        text = render(rows, cfg, columns)
        if cfg.out:
            with open(cfg.out, "w", newline="") as f:
                f.write(text)
        else:
            sys.stdout.write(text)
    except (UsageError, OSError, ValueError, RuntimeError, KeyError) as e:
        print(f"zolotarev: error: {e}", file=sys.stderr)
        return EXIT_ERROR
    return status


if __name__ == "__main__":
    sys.exit(main())
