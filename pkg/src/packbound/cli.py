"""Command-line entry point: ``packbound {bound,axioms,sweep,certify}``.

Exit codes: 0 success, 1 axiom failure, 2 parse/input error, 3 size cap
exceeded, 4 solver failure, 5 infeasible certificate.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import os
import sys
from typing import Optional, Sequence

from . import bounds as bound_registry
from . import euclid, lasserre, sdp, theta
from .config import BOUND_TOL, DEFAULT_CAPS, Caps
from .errors import InfeasibleCertificate, ParseError, SizeCapExceeded, SolverFailure
from .geometry import AXIOMS, axiom_case_generator, conflict_graph, cov, pack, read_points
from .graphs import chromatic_number, complement, independence_number, read_graph

EXIT_OK, EXIT_AXIOM, EXIT_PARSE, EXIT_CAP, EXIT_SOLVER, EXIT_CERT = 0, 1, 2, 3, 4, 5


@dataclasses.dataclass
class RunConfig:
    command: str
    inputs: dict
    bounds: list
    params: dict
    tolerances: dict
    caps: Caps
    output: Optional[str]
    seed: int
    workers: int


def _floats(text) -> list:
    try:
        vals = [float(x) for x in str(text).split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc
    if not vals or any(not (v > 0 and math.isfinite(v)) for v in vals):
        raise argparse.ArgumentTypeError(f"values must be positive: {text!r}")
    return vals


def _positive_int(text) -> int:
    v = int(text)
    if v <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return v


def _positive_float(text) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return v


def _cap_override(text) -> tuple:
    key, _, value = str(text).partition("=")
    names = {f.name for f in dataclasses.fields(Caps)}
    if key not in names or not value:
        raise argparse.ArgumentTypeError(f"cap overrides look like NAME=INT with NAME in {sorted(names)}")
    return key, _positive_int(value)


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="key=value file; command-line flags take precedence")
    p.add_argument("--out", help="output path (default: stdout)")
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.add_argument("--workers", type=_positive_int, default=None,
                   help="worker threads (default 1; PACKBOUND_WORKERS overrides the config file)")
    p.add_argument("--cap", type=_cap_override, action="append", default=[],
                   help="override a size cap, e.g. --cap alpha=300; defaults: "
                        + ", ".join(f"{f.name}={getattr(DEFAULT_CAPS, f.name)}" for f in dataclasses.fields(Caps)))
    p.add_argument("--gap-tol", type=_positive_float, default=sdp.SolverOptions.gap_tol,
                   help=f"solver relative gap (default {sdp.SolverOptions.gap_tol:g})")
    p.add_argument("--feas-tol", type=_positive_float, default=sdp.SolverOptions.feas_tol,
                   help=f"solver residual tolerance (default {sdp.SolverOptions.feas_tol:g})")
    p.add_argument("--bound-tol", type=_positive_float, default=BOUND_TOL,
                   help=f"tolerance for comparing bound values (default {BOUND_TOL:g})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="packbound", description="Packing bound functions on graphs and point sets.")
    sub = parser.add_subparsers(dest="command", required=True)

    b = sub.add_parser("bound", help="compute bounds for a graph or point file")
    src = b.add_mutually_exclusive_group()
    src.add_argument("--graph", help='graph file: "n m" then m lines "i j"; edges are conflicts')
    src.add_argument("--points", help='point file: "d n" then n lines of d coordinates')
    b.add_argument("--all", action="store_true", help="every bound within its caps")
    b.add_argument("--pack", action="store_true", help="pack (alpha of the conflict graph)")
    b.add_argument("--cov", action="store_true", help="cov (points only)")
    b.add_argument("--chi", action="store_true", help="clique cover number of the conflict graph")
    b.add_argument("--theta-prime", action="store_true")
    b.add_argument("--theta", action="store_true")
    b.add_argument("--theta-plus", action="store_true")
    b.add_argument("--las", type=_positive_int, action="append", default=[], metavar="T",
                   help="Lasserre level t (repeatable)")
    _add_common(b)

    a = sub.add_parser("axioms", help="run the randomized packing-bound axiom suite")
    a.add_argument("--bounds", default="pack,cov,theta'",
                   help=f"comma-separated bound ids from {', '.join(bound_registry.available())}")
    a.add_argument("--cases", type=_positive_int, default=200, help="cases per axiom (default 200)")
    a.add_argument("--max-points", type=_positive_int, default=12, help="points per configuration (default 12)")
    a.add_argument("--axioms", default=",".join(AXIOMS), help="subset of " + ",".join(AXIOMS))
    a.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    _add_common(a)

    s = sub.add_parser("sweep", help="evaluate a bound on cube meshes (CSV)")
    s.add_argument("--bound", default="pack", help="bound id (default pack)")
    s.add_argument("--dim", type=_positive_int, default=1)
    s.add_argument("--r", type=_floats, default=None, help="side lengths, comma-separated")
    s.add_argument("--h", type=_floats, default=None, help="mesh spacings, comma-separated")
    _add_common(s)

    c = sub.add_parser("certify", help="check an LP-bound auxiliary function (JSON)")
    c.add_argument("--profile", default="ball-autocorr", help="ball-autocorr, triangle, or a JSON profile file")
    c.add_argument("--dim", type=_positive_int, default=None)
    c.add_argument("--variant", default="theta'", help="theta', theta or theta+ sign conditions (default theta')")
    c.add_argument("--fhat-tol", type=_positive_float, default=1e-7, help="allowed negativity of f^ (default 1e-7)")
    c.add_argument("--r-step", type=_positive_float, default=1e-3, help="sign-check grid spacing (default 1e-3)")
    _add_common(c)
    return parser


_BOOL_KEYS = {"all", "pack", "cov", "chi", "theta_prime", "theta", "theta_plus", "inject_fault"}


def _read_config_file(path) -> dict:
    out = {}
    try:
        with open(path) as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise ParseError(f"cannot read config file: {exc}") from exc
    for k, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ParseError(f"{path}:{k}: expected key=value")
        out[key.strip().replace("-", "_")] = value.strip()
    return out


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    first = parser.parse_args(argv)
    if not getattr(first, "config", None):
        return _finish(first, first)
    cfg = _read_config_file(first.config)
    sub = parser._subparsers._group_actions[0].choices[first.command]  # noqa: SLF001
    known = {a.dest for a in sub._actions}  # noqa: SLF001
    unknown = set(cfg) - known
    if unknown:
        raise ParseError(f"unknown config keys: {sorted(unknown)}")
    defaults = {}
    for key, value in cfg.items():
        if key in _BOOL_KEYS:
            defaults[key] = value.lower() in ("1", "true", "yes", "on")
        elif key in ("cap", "las"):
            defaults[key] = [sub._option_string_actions[f"--{key}"].type(v) for v in value.split(";") if v]  # noqa: SLF001
        else:
            defaults[key] = value
    sub.set_defaults(**defaults)
    return _finish(parser.parse_args(argv), first)


def _finish(ns, cli_only) -> argparse.Namespace:
    """Worker count precedence: flag, then PACKBOUND_WORKERS, then config file, then 1."""
    env = os.environ.get("PACKBOUND_WORKERS")
    if cli_only.workers is None and env:
        ns.workers = _positive_int(env)
    elif ns.workers is None:
        ns.workers = 1
    return ns


def to_config(ns: argparse.Namespace) -> RunConfig:
    caps = DEFAULT_CAPS.with_(**dict(ns.cap)) if ns.cap else DEFAULT_CAPS
    inputs = {k: getattr(ns, k) for k in ("graph", "points", "profile") if getattr(ns, k, None)}
    params = {k: getattr(ns, k) for k in ("dim", "r", "h", "las", "cases", "max_points", "variant")
              if getattr(ns, k, None) is not None}
    tolerances = {"gap_tol": ns.gap_tol, "feas_tol": ns.feas_tol, "bound_tol": ns.bound_tol}
    sel = []
    if ns.command == "bound":
        sel = [k for k in ("pack", "cov", "chi", "theta_prime", "theta", "theta_plus") if getattr(ns, k)]
    elif ns.command == "axioms":
        sel = [x.strip() for x in ns.bounds.split(",") if x.strip()]
    elif ns.command == "sweep":
        sel = [ns.bound]
    return RunConfig(ns.command, inputs, sel, params, tolerances, caps, ns.out, ns.seed, ns.workers)


def _emit(text: str, out: Optional[str], append: bool = False):
    if out:
        with open(out, "a" if append else "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _opts(cfg: RunConfig) -> sdp.SolverOptions:
    return sdp.SolverOptions(gap_tol=cfg.tolerances["gap_tol"], feas_tol=cfg.tolerances["feas_tol"])


# ---------------------------------------------------------------- commands

_THETA_FLAGS = (("theta_prime", "theta'"), ("theta", "theta"), ("theta_plus", "theta+"))


def cmd_bound(ns: argparse.Namespace) -> int:
    cfg = to_config(ns)
    opts = _opts(cfg)
    if ns.graph:
        g = read_graph(ns.graph)
        source, c = ns.graph, None
    elif ns.points:
        c = read_points(ns.points)
        g = conflict_graph(c)
        source = ns.points
    else:
        raise ParseError("one of --graph or --points is required")
    want = set(cfg.bounds)
    levels = list(ns.las)
    if ns.all:
        want |= {"pack", "chi", "theta_prime", "theta", "theta_plus"} | ({"cov"} if c is not None else set())
        levels = levels or [1]
    if not want and not levels:
        raise ParseError("no bound selected")
    if "cov" in want and c is None:
        raise ParseError("cov needs a point configuration")
    result = {"source": source, "n": g.n}
    records = []
    if "pack" in want:
        result["pack"] = independence_number(g, cfg.caps)
    if "cov" in want:
        result["cov"] = cov(c, cfg.caps)
    if "chi" in want:
        result["chi"] = chromatic_number(complement(g), cfg.caps)
    for flag, name in _THETA_FLAGS:
        if flag in want:
            res = theta.theta_primal_result(g, name, cfg.caps, opts)
            result[name] = res.value
            records.append(res.record())
    for t in levels:
        rec = lasserre.las_record(g, t, cfg.caps, opts)
        result[f"las'{t}"] = rec["las_prime"]
        records.append(rec)
    result["records"] = records
    _emit(json.dumps(result, indent=2) + "\n", cfg.output)
    return EXIT_OK


def _faulty_bound(c):
    """Test hook: the point count, which violates the sphere bound."""
    return float(len(c))


def cmd_axioms(ns: argparse.Namespace) -> int:
    cfg = to_config(ns)
    opts = _opts(cfg)
    axioms = [x.strip() for x in ns.axioms.split(",") if x.strip()]
    bad = set(axioms) - set(AXIOMS)
    if bad:
        raise ParseError(f"unknown axioms {sorted(bad)}")
    names = [bound_registry.canonical(b) for b in cfg.bounds]
    cases = list(axiom_case_generator(cfg.seed, ns.cases, ns.max_points, axioms))
    reports = []
    for name in names:
        rep = bound_registry.check_axioms(name, cases, cfg.caps, opts, tol=None if name in
                                          bound_registry.EXACT_BOUNDS else cfg.tolerances["bound_tol"])
        reports.append(rep.record())
    if ns.inject_fault:
        reports.append(bound_registry.check_axioms(_faulty_bound, cases, name="faulty").record())
    ok = all(r["ok"] for r in reports)
    out = {"seed": cfg.seed, "cases_per_axiom": ns.cases, "axioms": axioms, "reports": reports, "ok": ok}
    _emit(json.dumps(out, indent=2) + "\n", cfg.output)
    return EXIT_OK if ok else EXIT_AXIOM


def cmd_sweep(ns: argparse.Namespace) -> int:
    cfg = to_config(ns)
    if not ns.r or not ns.h:
        raise ParseError("--r and --h are required")
    rec = euclid.delta_sweep(ns.bound, ns.dim, ns.r, ns.h, csv_path=cfg.output, workers=cfg.workers,
                             caps=cfg.caps, opts=_opts(cfg))
    if not cfg.output:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(euclid.CSV_FIELDS)
        for row in rec.rows:
            w.writerow([rec.bound, rec.dim, repr(row.r), repr(row.h), repr(row.value), repr(row.value_over_rn),
                        f"{row.wall_ms:.3f}", row.status])
        sys.stdout.write(buf.getvalue())
    failed = [row.status for row in rec.rows if row.status != "ok"]
    if "solver_failure" in failed:
        return EXIT_SOLVER
    if "cap_exceeded" in failed:
        return EXIT_CAP
    return EXIT_OK


def _load_profile(spec: str, dim: Optional[int]):
    if spec == "ball-autocorr":
        return euclid.ball_autocorrelation(dim or 1)
    if spec == "triangle":
        return euclid.triangle_profile(dim or 1)
    try:
        return euclid.load_profile(spec, dim)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot load profile {spec!r}: {exc}") from exc


def cmd_certify(ns: argparse.Namespace) -> int:
    cfg = to_config(ns)
    f = _load_profile(ns.profile, ns.dim)
    rep = euclid.lp_certificate_check(f, ns.variant, r_step=ns.r_step, fhat_tol=ns.fhat_tol)
    _emit(json.dumps(rep.record(), indent=2) + "\n", cfg.output)
    return EXIT_OK if rep.feasible else EXIT_CERT


COMMANDS = {"bound": cmd_bound, "axioms": cmd_axioms, "sweep": cmd_sweep, "certify": cmd_certify}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        ns = parse_args(argv)
        return COMMANDS[ns.command](ns)
    except SystemExit as exc:  # argparse errors and --help
        return int(exc.code or 0)
    except (ParseError, ValueError, FileNotFoundError, argparse.ArgumentTypeError) as exc:
        print(f"packbound: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except SizeCapExceeded as exc:
        print(f"packbound: {exc}", file=sys.stderr)
        return EXIT_CAP
    except SolverFailure as exc:
        print(f"packbound: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except InfeasibleCertificate as exc:
        print(f"packbound: {exc}", file=sys.stderr)
        return EXIT_CERT


if __name__ == "__main__":
    sys.exit(main())
