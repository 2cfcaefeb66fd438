"""End-to-end runs: pick a symmetry for a loaded input, then build and solve a relaxation."""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .autgroup import (
    GraphOrbits,
    automorphism_generators,
    build_colored_factor_graph,
    derived_orbits,
    fixed_node_orbits,
    trivial_orbits,
)
from .cycles import VIOLATION_TOL, build_separation, cutting_plane_solve
from .lift import (
    LiftedGraph,
    build_lifted_graph,
    decode_nodes,
    lift_parameters,
    lifted_local_constraints,
)
from .lp import lp_solve
from .mln import GroundIndex, MLNProgram, ground, load_mln, renaming_fixed_node_orbits, renaming_graph_orbits
from .model import Model, load_model, score, to_overcomplete
from .mplp import mplp_solve
from .oracle import exact_map

RELAXATIONS = ("local", "cycle", "exact")
MODES = ("ground", "lifted")
SYMMETRIES = ("graph", "renaming", "none")
SOLVERS = ("simplex", "mplp")


class RunError(ValueError):
    """Invalid combination of inputs and options."""


@dataclass
class Problem:
    model: Model
    source: str
    offset: float = 0.0
    program: MLNProgram | None = None
    index: GroundIndex | None = None
    domain: int | None = None

    @property
    def is_mln(self) -> bool:
        return self.program is not None


def problem_from_mln(prog: MLNProgram, domain: int | None = None, source: str = "<mln>") -> Problem:
    model, index = ground(prog, domain)
    return Problem(model, source, index.offset, prog, index, len(index.domain))


def load_problem(path, domain: int | None = None) -> Problem:
    """``.mln`` files are parsed and grounded; anything else is read as model JSON."""
    path = Path(path)
    if path.suffix == ".mln":
        return problem_from_mln(load_mln(path), domain, str(path))
    if domain is not None:
        raise RunError("--domain only applies to MLN inputs")
    return Problem(load_model(path), str(path))


@dataclass
class Symmetry:
    kind: str
    orbits: GraphOrbits
    fixed: Callable[[int], GraphOrbits]
    group_order: int | None = None


def find_symmetry(problem: Problem, kind: str) -> Symmetry:
    model = problem.model
    if kind == "none":
        return Symmetry(kind, trivial_orbits(model), lambda i: trivial_orbits(model), 1)
    if kind == "graph":
        gens = automorphism_generators(build_colored_factor_graph(model).graph)
        return Symmetry(kind, derived_orbits(model, None, gens), lambda i: fixed_node_orbits(model, i), gens.group_order)
    if kind == "renaming":
        if not problem.is_mln:
            raise RunError("renaming symmetry needs an MLN input")
        idx = problem.index
        return Symmetry(
            kind,
            renaming_graph_orbits(model, idx),
            lambda i: renaming_fixed_node_orbits(model, idx, i),
            None,
        )
    raise RunError(f"unknown symmetry {kind!r}")


@dataclass
class RunResult:
    input: str
    domain: int | None
    mode: str
    symmetry: str
    relaxation: str
    solver: str
    status: str
    objective: float | None
    decoded_score: float | None
    decoded_config: list[int] | None
    offset: float
    rounds: int
    cuts_added: int
    objective_trace: list[float] = field(default_factory=list)
    cut_trace: list[dict] = field(default_factory=list)
    orbit_counts: dict = field(default_factory=dict)
    group_order: int | None = None
    num_vars: int = 0
    num_lp_vars: int = 0
    stop_reason: str = ""
    wall_ms: float = 0.0
    symmetry_ms: float = 0.0
    trace_ms: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


TIMING_FIELDS = ("wall_ms", "symmetry_ms", "trace_ms")


def _finite(x) -> float | None:
    return None if x is None or not np.isfinite(x) else float(x)


def _mplp_stop(res) -> str:
    if not res.converged:
        return "max-iterations"
    return "smoothed-certified" if res.smoothing_sweeps and res.dual - res.primal_bound <= 1e-6 else (
        "smoothed" if res.smoothing_sweeps else "dual-converged")


def run(
    problem: Problem,
    relaxation: str = "local",
    mode: str = "lifted",
    symmetry: str | None = None,
    solver: str = "simplex",
    max_rounds: int = 500,
    tol: float | None = None,
) -> RunResult:
    if relaxation not in RELAXATIONS:
        raise RunError(f"unknown relaxation {relaxation!r}")
    if mode not in MODES:
        raise RunError(f"unknown mode {mode!r}")
    if solver not in SOLVERS:
        raise RunError(f"unknown solver {solver!r}")
    if symmetry is None:
        symmetry = "graph" if mode == "lifted" else "none"
    if symmetry not in SYMMETRIES:
        raise RunError(f"unknown symmetry {symmetry!r}")
    if mode == "ground" and symmetry != "none":
        raise RunError("ground mode runs without symmetry; use --symmetry none")
    if solver == "mplp" and relaxation != "local":
        raise RunError("the mplp solver only handles the local relaxation")
    model = problem.model
    t0 = time.perf_counter()
    base = dict(input=problem.source, domain=problem.domain, mode=mode, symmetry=symmetry, relaxation=relaxation, solver=solver,
                offset=problem.offset, num_vars=model.num_vars)

    if relaxation == "exact":
        value, args = exact_map(model)
        ms = (time.perf_counter() - t0) * 1e3
        return RunResult(**base, status="optimal", objective=value, decoded_score=value,
                         decoded_config=list(args[0]), rounds=0, cuts_added=0, objective_trace=[value],
                         stop_reason="enumerated", wall_ms=ms, trace_ms=[ms])

    sym = find_symmetry(problem, symmetry)
    lg: LiftedGraph = build_lifted_graph(model, sym.orbits)
    params = lift_parameters(to_overcomplete(model), lg)
    lp = lifted_local_constraints(lg, params)
    t_sym = time.perf_counter()
    counts = {
        "node_orbits": len(lg.nodes),
        "edge_orbits": len(lg.edges),
        "arc_orbits": len(sym.orbits.arc_orbits),
    }
    base.update(orbit_counts=counts, group_order=sym.group_order, num_lp_vars=lp.num_vars,
                symmetry_ms=(t_sym - t0) * 1e3)

    if solver == "mplp":
        res = mplp_solve(lg, params, tol=1e-10 if tol is None else tol)
        ms = (time.perf_counter() - t0) * 1e3
        return RunResult(**base, status="converged" if res.converged else "iteration-limit",
                         objective=res.dual, decoded_score=score(model, res.config),
                         decoded_config=list(res.config), rounds=res.iterations, cuts_added=0,
                         objective_trace=list(res.dual_trace), stop_reason=_mplp_stop(res),
                         wall_ms=ms, trace_ms=[ms])

    if relaxation == "local":
        sol = lp_solve(lp)
        ms = (time.perf_counter() - t0) * 1e3
        if not sol.optimal:
            return RunResult(**base, status=sol.status, objective=None, decoded_score=None, decoded_config=None,
                             rounds=0, cuts_added=0, stop_reason=sol.status, wall_ms=ms)
        x = decode_nodes(sol.point, lg)
        return RunResult(**base, status="optimal", objective=sol.objective, decoded_score=score(model, x),
                         decoded_config=list(x), rounds=0, cuts_added=0, objective_trace=[sol.objective],
                         stop_reason="solved", wall_ms=ms, trace_ms=[ms])

    sep = build_separation(model, lg, sym.fixed)
    res = cutting_plane_solve(lp, sep, max_rounds=max_rounds, tol=VIOLATION_TOL if tol is None else tol)
    ms = (time.perf_counter() - t0) * 1e3
    trace_ms = [(t_sym - t0) * 1e3 + e for e in res.elapsed_ms]
    cuts = [
        {"round": c.round, "slack": c.slack, "anchor": c.anchor, "walk": list(c.walk),
         "f_positions": list(c.f_positions), "objective": _finite(c.objective)}
        for c in res.cuts
    ]
    if res.status != "optimal":
        return RunResult(**base, status=res.status, objective=None, decoded_score=None, decoded_config=None,
                         rounds=res.rounds, cuts_added=len(res.cuts), objective_trace=[_finite(v) for v in res.objective_trace],
                         cut_trace=cuts, stop_reason=res.stop_reason, wall_ms=ms, trace_ms=trace_ms)
    x = decode_nodes(res.point, lg)
    return RunResult(**base, status="optimal", objective=res.objective, decoded_score=score(model, x),
                     decoded_config=list(x), rounds=res.rounds, cuts_added=len(res.cuts),
                     objective_trace=list(res.objective_trace), cut_trace=cuts, stop_reason=res.stop_reason,
                     wall_ms=ms, trace_ms=trace_ms)


BENCH_METHODS = (
    ("local", "ground", "none"),
    ("local", "lifted", "graph"),
    ("local", "lifted", "renaming"),
    ("cycle", "ground", "none"),
    ("cycle", "lifted", "graph"),
    ("cycle", "lifted", "renaming"),
)


def bench(prog: MLNProgram, domains, max_rounds: int = 500, exact_limit: int = 24, source: str = "<mln>") -> list[RunResult]:
    """All six ground/lifted LOCAL/CYCLE methods per domain size, plus exact MAP within budget."""
    out = []
    for d in domains:
        problem = problem_from_mln(prog, d, source)
        for relaxation, mode, symmetry in BENCH_METHODS:
            out.append(run(problem, relaxation, mode, symmetry, max_rounds=max_rounds))
        if problem.model.num_vars <= exact_limit:
            out.append(run(problem, "exact", "ground", "none"))
    return out
