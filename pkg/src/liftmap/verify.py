"""Oracle cross-checks applicable to one instance, sized to what enumeration allows."""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .autgroup import automorphism_generators, build_colored_factor_graph, orbits, split_generator
from .cycles import build_separation, min_slack_at
from .lift import build_lifted_graph, lift_parameters, lifted_local_constraints
from .lp import lp_solve
from .mln import renaming_graph_orbits, renaming_permutations
from .model import all_configurations, graph_structure, score, to_overcomplete
from .mplp import mplp_solve
from .oracle import brute_automorphisms, brute_separation, config_orbit_centroids, exact_map
from .pipeline import Problem, find_symmetry, run


@dataclass
class Check:
    name: str
    status: str  # pass | fail | skipped
    detail: str
    magnitude: float | None = None
    wall_ms: float = 0.0


def _configs(n: int) -> np.ndarray:
    return np.array(list(all_configurations(n)), dtype=int).reshape(-1, n)


def check_overcomplete(problem: Problem) -> Check:
    m = problem.model
    if m.num_vars > 12:
        return Check("overcomplete_consistency", "skipped", "more than 12 variables")
    theta = to_overcomplete(m)
    gap = max(abs(score(m, x) - theta.inner(x)) for x in all_configurations(m.num_vars))
    return Check("overcomplete_consistency", "pass" if gap <= 1e-9 else "fail",
                 "max |score - overcomplete inner product| over all configurations", gap)


def check_generators(problem: Problem) -> Check:
    m = problem.model
    fg = build_colored_factor_graph(m)
    gens = automorphism_generators(fg.graph)
    bad = [g for g in gens.generators if not fg.graph.is_automorphism(g)]
    return Check("generators_are_automorphisms", "fail" if bad else "pass",
                 f"{len(gens.generators)} generators, group order {gens.group_order}", float(len(bad)))


def check_score_invariance(problem: Problem) -> Check:
    m = problem.model
    if m.num_vars > 12:
        return Check("score_invariance", "skipped", "more than 12 variables")
    fg = build_colored_factor_graph(m)
    gens = automorphism_generators(fg.graph)
    gap = 0.0
    for g in gens.generators:
        pi, _ = split_generator(g, m.num_vars)
        for x in all_configurations(m.num_vars):
            y = [0] * m.num_vars
            for v, xv in enumerate(x):
                y[pi[v]] = xv
            gap = max(gap, abs(score(m, y) - score(m, x)))
    return Check("score_invariance", "pass" if gap <= 1e-9 else "fail",
                 "max |score(x permuted) - score(x)| over generators and configurations", gap)


def check_brute_group(problem: Problem) -> Check:
    fg = build_colored_factor_graph(problem.model)
    if fg.graph.num_vertices > 8:
        return Check("automorphism_group_vs_brute_force", "skipped", "factor graph has more than 8 vertices")
    gens = automorphism_generators(fg.graph)
    brute = brute_automorphisms(fg.graph)
    mine = orbits(gens.generators, fg.graph.num_vertices)
    same = {frozenset(c) for c in mine.cells} == set(brute.orbits) and gens.group_order == brute.order
    return Check("automorphism_group_vs_brute_force", "pass" if same else "fail",
                 f"group order {gens.group_order} vs brute force {brute.order}",
                 float(abs(gens.group_order - brute.order)))


def check_local_equivalence(problem: Problem) -> Check:
    a = run(problem, "local", "lifted", "graph")
    b = run(problem, "local", "ground", "none")
    gap = abs(a.objective - b.objective)
    return Check("lifted_local_equals_ground", "pass" if gap <= 1e-6 else "fail",
                 f"lifted {a.objective} vs ground {b.objective}", gap)


def check_cycle_equivalence(problem: Problem) -> Check:
    if problem.model.num_vars > 40:
        return Check("lifted_cycle_equals_ground", "skipped", "ground cutting planes beyond 40 variables")
    a = run(problem, "cycle", "lifted", "graph")
    b = run(problem, "cycle", "ground", "none")
    if a.objective is None or b.objective is None:
        return Check("lifted_cycle_equals_ground", "fail", f"status {a.status} / {b.status}")
    gap = abs(a.objective - b.objective)
    return Check("lifted_cycle_equals_ground", "pass" if gap <= 1e-5 else "fail",
                 f"lifted {a.objective} ({a.rounds} rounds) vs ground {b.objective} ({b.rounds} rounds)", gap)


def check_sandwich(problem: Problem) -> Check:
    if problem.model.num_vars > 20:
        return Check("relaxation_sandwich", "skipped", "more than 20 variables")
    exact, _ = exact_map(problem.model)
    cyc = run(problem, "cycle", "lifted", "graph").objective
    loc = run(problem, "local", "lifted", "graph").objective
    ok = exact <= cyc + 1e-6 and cyc <= loc + 1e-6
    return Check("relaxation_sandwich", "pass" if ok else "fail",
                 f"exact {exact} <= cycle {cyc} <= local {loc}", max(exact - cyc, cyc - loc, 0.0))


def check_separation(problem: Problem) -> Check:
    m = problem.model
    n, edges = graph_structure(m)
    if n > 10:
        return Check("separation_vs_brute_force", "skipped", "more than 10 variables")
    sym = find_symmetry(problem, "none")
    lg = build_lifted_graph(m, sym.orbits)
    lp = lifted_local_constraints(lg, lift_parameters(to_overcomplete(m), lg))
    tau = lp_solve(lp).point
    sep = build_separation(m, lg, sym.fixed)
    slacks = [s for s in (min_slack_at(sep, k, tau) for k in range(len(sep.mirrors))) if s is not None]
    idx = lg.var_index()
    pm = {}
    for g, (u, v) in enumerate(edges):
        k = lg.orbits.edge_orbits.rep[g]
        pm[(u, v)] = np.array([[tau[idx[f"e{k}_00"]], tau[idx[f"e{k}_01"]]],
                               [tau[idx[f"e{k}_10"]], tau[idx[f"e{k}_11"]]]])
    brute = brute_separation(n, pm, min(10, 2 * n))
    if brute is None or not slacks:
        ok = brute is None and not slacks
        return Check("separation_vs_brute_force", "pass" if ok else "fail", "no closed walks", 0.0)
    gap = abs(min(slacks) - brute.slack)
    return Check("separation_vs_brute_force", "pass" if gap <= 1e-9 else "fail",
                 f"mirror graph {min(slacks)} vs enumeration {brute.slack} at the LOCAL optimum", gap)


def check_mplp(problem: Problem) -> Check:
    m = problem.model
    sym = find_symmetry(problem, "graph")
    lg = build_lifted_graph(m, sym.orbits)
    params = lift_parameters(to_overcomplete(m), lg)
    lp_opt = lp_solve(lifted_local_constraints(lg, params)).objective
    res = mplp_solve(lg, params)
    rise = float(np.max(np.diff(res.dual_trace), initial=0.0))
    gap = res.dual - lp_opt
    ok = rise <= 1e-9 and -1e-7 <= gap <= 1e-4
    return Check("mplp_matches_simplex", "pass" if ok else "fail",
                 f"dual {res.dual} vs LP {lp_opt}; largest trace increase {rise}", abs(gap))


def check_centroids(problem: Problem) -> Check:
    m = problem.model
    if m.num_vars > 10:
        return Check("centroid_map", "skipped", "more than 10 variables")
    gens = automorphism_generators(build_colored_factor_graph(m).graph)
    cents = config_orbit_centroids(m, gens.generators)
    best = max(float(c.centroid @ m.weights) for c in cents)
    exact, _ = exact_map(m)
    gap = abs(best - exact)
    return Check("centroid_map", "pass" if gap <= 1e-9 else "fail",
                 f"{len(cents)} configuration orbits; best centroid {best} vs exact {exact}", gap)


def check_renaming_refines(problem: Problem) -> Check:
    if not problem.is_mln:
        return Check("renaming_refines_graph_orbits", "skipped", "not an MLN input")
    ren = renaming_graph_orbits(problem.model, problem.index)
    graph = find_symmetry(problem, "graph").orbits
    ok = ren.nodes.refines(graph.nodes) and ren.edge_orbits.refines(graph.edge_orbits)
    a = run(problem, "local", "lifted", "renaming").objective
    b = run(problem, "local", "lifted", "graph").objective
    gap = abs(a - b)
    ok = ok and gap <= 1e-6
    return Check("renaming_refines_graph_orbits", "pass" if ok else "fail",
                 f"{len(ren.nodes)} renaming vs {len(graph.nodes)} graph node orbits; LOCAL optima {a} / {b}", gap)


def check_renaming_group(problem: Problem) -> Check:
    if not problem.is_mln:
        return Check("renaming_automorphisms", "skipped", "not an MLN input")
    m, idx = problem.model, problem.index
    free = len(idx.domain) - len(idx.observed)
    count = 1
    for k in range(2, free + 1):
        count *= k
    if free > 6 or count * (1 << m.num_vars) > (1 << 20):
        return Check("renaming_automorphisms", "skipped", "too many renamings times configurations")
    configs = _configs(m.num_vars)
    phi = np.array([m.feature_vector(x) for x in configs])
    code = {tuple(x): k for k, x in enumerate(configs)}
    gap = 0.0
    for pi, gamma in renaming_permutations(idx):
        for k, x in enumerate(configs):
            y = [0] * m.num_vars
            for v, xv in enumerate(x):
                y[pi[v]] = xv
            gap = max(gap, float(np.abs(phi[code[tuple(y)]][list(gamma)] - phi[k]).max(initial=0.0)))
    return Check("renaming_automorphisms", "pass" if gap <= 1e-12 else "fail",
                 f"{count} renamings over {len(configs)} configurations", gap)


CHECKS: tuple[Callable[[Problem], Check], ...] = (
    check_overcomplete,
    check_generators,
    check_score_invariance,
    check_brute_group,
    check_local_equivalence,
    check_cycle_equivalence,
    check_sandwich,
    check_separation,
    check_mplp,
    check_centroids,
    check_renaming_refines,
    check_renaming_group,
)


def verify(problem: Problem) -> list[Check]:
    out = []
    for fn in CHECKS:
        t0 = time.perf_counter()
        c = fn(problem)
        c.wall_ms = (time.perf_counter() - t0) * 1e3
        out.append(c)
    return out


def report(problem: Problem, checks: list[Check]) -> dict:
    return {
        "input": problem.source,
        "domain": problem.domain,
        "passed": all(c.status != "fail" for c in checks),
        "checks": [asdict(c) for c in checks],
    }


