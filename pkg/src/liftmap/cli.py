"""Command-line entry point: solve, orbits, bench, verify."""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path

from .cycles import VIOLATION_TOL
from .instances import SEMI_TRANSITIVE_MLN
from .lift import build_lifted_graph, lift_parameters, lifted_local_constraints
from .mln import MLNError, parse_mln
from .model import ModelError, to_overcomplete
from .pipeline import (
    MODES,
    RELAXATIONS,
    SOLVERS,
    SYMMETRIES,
    RunError,
    bench,
    find_symmetry,
    load_problem,
    run,
)
from .verify import report, verify

EXIT_FAIL = 1
EXIT_USAGE = 2

CSV_FIELDS = (
    "domain", "num_vars", "relaxation", "mode", "symmetry", "status", "objective", "decoded_score",
    "rounds", "cuts_added", "node_orbits", "edge_orbits", "arc_orbits", "num_lp_vars", "wall_ms",
)


def _clean(obj):
    """Replace non-finite floats by ``None`` so the output is strict JSON."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item"):  # numpy scalars
        return _clean(obj.item())
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _emit(obj, out: str | None) -> None:
    text = dumps(obj)
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def parse_domains(text: str) -> list[int]:
    """``"4..8"``, ``"4-8"`` or a comma list ``"4,6,9"``."""
    for sep in ("..", "-"):
        if sep in text:
            lo, hi = (int(t) for t in text.split(sep, 1))
            if lo > hi:
                raise argparse.ArgumentTypeError(f"empty domain range {text!r}")
            return list(range(lo, hi + 1))
    try:
        return [int(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad domain list {text!r}") from None


def cmd_solve(args) -> int:
    problem = load_problem(args.path, args.domain)
    res = run(problem, args.relaxation, args.mode, args.symmetry, args.solver, args.max_rounds, args.tol)
    _emit(res.to_dict(), args.out)
    if args.lp_out:
        sym = find_symmetry(problem, res.symmetry if res.relaxation != "exact" else "none")
        lg = build_lifted_graph(problem.model, sym.orbits)
        lp = lifted_local_constraints(lg, lift_parameters(to_overcomplete(problem.model), lg))
        Path(args.lp_out).write_text(lp.to_lp_text(), encoding="utf-8")
    return 0


def cmd_orbits(args) -> int:
    problem = load_problem(args.path, args.domain)
    sym = find_symmetry(problem, args.symmetry)
    o = sym.orbits
    out = {
        "input": problem.source,
        "domain": problem.domain,
        "symmetry": sym.kind,
        "group_order": sym.group_order,
        "num_vars": problem.model.num_vars,
        "num_edges": len(o.edges),
        "node_orbits": len(o.nodes),
        "edge_orbits": len(o.edge_orbits),
        "arc_orbits": len(o.arc_orbits),
        "node_cells": [list(c) for c in o.nodes.cells],
        "edge_cells": [[list(o.edges[k]) for k in c] for c in o.edge_orbits.cells],
    }
    if problem.is_mln:
        out["atoms"] = [f"{p}({','.join(a)})" for p, a in problem.index.atoms]
    _emit(out, args.out)
    return 0


def cmd_bench(args) -> int:
    if args.mln:
        text = Path(args.mln).read_text(encoding="utf-8")
        source = args.mln
    else:
        text, source = SEMI_TRANSITIVE_MLN, "<semi-transitive>"
    results = bench(parse_mln(text), args.domains, args.max_rounds, args.exact_limit, source)
    rows = [r.to_dict() for r in results]
    _emit({"input": source, "domains": args.domains, "results": rows}, args.out)
    if args.csv:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
        w.writeheader()
        for r in rows:
            flat = {k: r.get(k) for k in CSV_FIELDS}
            flat.update({k: r["orbit_counts"].get(k) for k in ("node_orbits", "edge_orbits", "arc_orbits")})
            w.writerow(flat)
        Path(args.csv).write_text(buf.getvalue(), encoding="utf-8")
    return 0


def cmd_verify(args) -> int:
    problem = load_problem(args.path, args.domain)
    checks = verify(problem)
    rep = report(problem, checks)
    _emit(rep, args.out)
    return 0 if rep["passed"] else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="liftmap", description="Lifted LP relaxations for MAP in symmetric binary models.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, symmetry_default):
        sp.add_argument("path", help="model JSON or .mln file")
        sp.add_argument("--domain", type=int, default=None, help="domain size for MLN inputs")
        sp.add_argument("--out", default=None, help="write JSON here instead of stdout")
        sp.add_argument("--symmetry", choices=SYMMETRIES, default=symmetry_default)

    s = sub.add_parser("solve", help="solve one relaxation")
    common(s, None)
    s.add_argument("--relaxation", choices=RELAXATIONS, default="local")
    s.add_argument("--mode", choices=MODES, default="lifted")
    s.add_argument("--solver", choices=SOLVERS, default="simplex")
    s.add_argument("--max-rounds", type=int, default=500)
    s.add_argument("--tol", type=float, default=None, help=f"cut violation threshold (default {VIOLATION_TOL})")
    s.add_argument("--lp-out", default=None, help="also write the base LP in CPLEX LP format")
    s.set_defaults(func=cmd_solve)

    o = sub.add_parser("orbits", help="report node, edge and arc orbits")
    common(o, "graph")
    o.set_defaults(func=cmd_orbits)

    b = sub.add_parser("bench", help="ground vs lifted LOCAL/CYCLE over a range of domain sizes")
    b.add_argument("--domains", type=parse_domains, default=parse_domains("4..8"))
    b.add_argument("--mln", default=None, help="MLN file (default: the built-in semi-transitive program)")
    b.add_argument("--max-rounds", type=int, default=500)
    b.add_argument("--exact-limit", type=int, default=24, help="largest variable count for exact MAP")
    b.add_argument("--out", default=None)
    b.add_argument("--csv", default=None, help="also write a flat CSV summary")
    b.set_defaults(func=cmd_bench)

    v = sub.add_parser("verify", help="run oracle cross-checks on one instance")
    v.add_argument("path")
    v.add_argument("--domain", type=int, default=None)
    v.add_argument("--out", default=None)
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MLNError as exc:
        err = {"error": "mln", "message": str(exc), "line": exc.line, "column": exc.column}
    except (ModelError, RunError, ValueError, OSError) as exc:
        err = {"error": type(exc).__name__, "message": str(exc)}
    sys.stderr.write(dumps(err))
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
