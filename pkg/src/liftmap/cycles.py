"""Cycle inequalities over lifted graphs and the cutting-plane driver.

For a closed walk ``C`` and an odd subset ``F`` of its positions, every
integral point satisfies

    sum_{e in F} nocut(e) + sum_{e in C \\ F} cut(e) >= 1,

with ``nocut = tau_00 + tau_11`` and ``cut = tau_01 + tau_10``.  The most
violated inequality through an anchor node is a shortest path between the
two copies of the anchor in a mirror graph: steps that stay in one copy cost
``cut`` and steps that switch copies cost ``nocut`` (those steps form ``F``,
and an odd number of switches is needed to reach the other copy).

Walks are searched in the lifted graph of the anchor's stabilizer; each
step is an edge orbit of that graph, realized in the LP through the
representative ground edge and the lifting map.
"""
from __future__ import annotations

import heapq
import logging
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .autgroup import GraphOrbits
from .lift import LiftedGraph, LinearProgram, build_lifted_graph, lifting_map
from .lp import LPSolution, Simplex
from .model import Model

log = logging.getLogger(__name__)

VIOLATION_TOL = 1e-7
NEGATIVE_WEIGHT_WARN = -1e-9


@dataclass(frozen=True)
class CycleCut:
    """A cycle inequality found at ``anchor``.

    ``edges`` are edge-orbit ids of the anchor's stabilizer lifted graph and
    ``in_f`` marks the positions carrying ``nocut`` terms (an odd number).
    ``row`` holds the left-hand side in LP variables; the cut is ``row.x >= 1``.
    """

    anchor: int
    edges: tuple[int, ...]
    in_f: tuple[bool, ...]
    row: np.ndarray = field(compare=False, repr=False)
    orbit_edges: tuple[int, ...] = ()  # edge orbits of the LP's own lifted graph

    def __post_init__(self):
        if len(self.edges) != len(self.in_f) or not self.edges:
            raise ValueError("cut needs one F flag per walk position")
        if sum(self.in_f) % 2 != 1:
            raise ValueError("F must have odd size")

    @property
    def f_positions(self) -> tuple[int, ...]:
        return tuple(i for i, f in enumerate(self.in_f) if f)

    def key(self) -> tuple:
        """Rotation/reflection normal form of the walk, for deduplication."""
        seq = list(zip(self.edges, self.in_f))
        forms = []
        for s in (seq, seq[::-1]):
            for r in range(len(s)):
                forms.append(tuple(s[r:] + s[:r]))
        return (self.anchor, min(forms))


def eval_cycle_constraint(cut: CycleCut, tau) -> float:
    """Slack ``lhs - 1``; negative iff ``tau`` violates the cut."""
    return float(cut.row @ np.asarray(tau, dtype=float)) - 1.0


class MirrorGraph:
    """Two copies of a stabilizer lifted graph, weighted by the current point.

    ``coef`` maps each lifted edge ``k`` to LP indices ``(i00, i01, i10, i11)``
    of its representative ground edge.
    """

    def __init__(self, graph: LiftedGraph, anchor_orbit: int, coef: np.ndarray, anchor: int):
        self.graph = graph
        self.anchor = anchor
        self.anchor_orbit = anchor_orbit
        self.coef = coef
        self.num_nodes = len(graph.nodes)
        self.incident: list[list[tuple[int, int]]] = [[] for _ in range(self.num_nodes)]
        for k, e in enumerate(graph.edges):
            a, b = e.ends
            self.incident[a].append((k, b))
            if a != b:
                self.incident[b].append((k, a))

    def weights(self, tau) -> tuple[np.ndarray, np.ndarray]:
        tau = np.asarray(tau, dtype=float)
        nocut = tau[self.coef[:, 0]] + tau[self.coef[:, 3]]
        cut = tau[self.coef[:, 1]] + tau[self.coef[:, 2]]
        low = min(nocut.min(initial=0.0), cut.min(initial=0.0))
        if low < NEGATIVE_WEIGHT_WARN:
            log.warning("mirror graph weight %.3g clamped to 0", low)
        return np.maximum(nocut, 0.0), np.maximum(cut, 0.0)

    def shortest_walk(self, tau) -> tuple[float, list[int], list[bool]] | None:
        """Cheapest odd-switch closed walk through the anchor, or ``None``."""
        nocut, cut = self.weights(tau)
        n = self.num_nodes
        src, dst = self.anchor_orbit, n + self.anchor_orbit
        dist = [np.inf] * (2 * n)
        prev: list[tuple[int, int, bool] | None] = [None] * (2 * n)
        dist[src] = 0.0
        heap = [(0.0, src)]
        done = [False] * (2 * n)
        while heap:
            d, x = heapq.heappop(heap)
            if done[x]:
                continue
            done[x] = True
            if x == dst:
                break
            node, copy = x % n, x // n
            for k, other in self.incident[node]:
                for switch in (False, True):
                    if other == node and not switch:
                        continue  # a loop inside one copy never helps
                    w = nocut[k] if switch else cut[k]
                    y = other + n * (copy ^ switch)
                    nd = d + w
                    if nd < dist[y]:
                        dist[y] = nd
                        prev[y] = (x, k, switch)
                        heapq.heappush(heap, (nd, y))
        if not np.isfinite(dist[dst]):
            return None
        edges, flags = [], []
        x = dst
        while x != src:
            x, k, switch = prev[x]
            edges.append(k)
            flags.append(switch)
        return float(dist[dst]), edges[::-1], flags[::-1]


@dataclass
class SeparationStructure:
    """Per-node-orbit mirror graphs for the LP built on ``lifted``."""

    lifted: LiftedGraph
    mirrors: list[MirrorGraph]
    num_lp_vars: int
    # edge orbit of the LP graph for each anchor's lifted edges
    parent_edge: list[np.ndarray]


def ground_edge_lp_indices(lifted: LiftedGraph) -> np.ndarray:
    """LP indices ``(00, 01, 10, 11)`` of every ground edge under the lifting map."""
    rho = lifting_map(lifted)
    base = 2 * lifted.num_ground_nodes
    m = len(lifted.orbits.edges)
    return rho[base: base + 4 * m].reshape(m, 4)


def build_separation(
    model: Model, lifted: LiftedGraph, fixed_orbits: Callable[[int], GraphOrbits]
) -> SeparationStructure:
    """Precompute stabilizer lifted graphs, one per node orbit of ``lifted``.

    ``fixed_orbits(i)`` returns the orbits of the subgroup fixing variable ``i``.
    """
    per_edge = ground_edge_lp_indices(lifted)
    edge_parent = np.array(lifted.orbits.edge_orbits.rep, dtype=int)
    mirrors, parents = [], []
    for node in lifted.nodes:
        i = node.rep
        stab = build_lifted_graph(model, fixed_orbits(i))
        edge_id = {e: g for g, e in enumerate(stab.orbits.edges)}
        reps = [edge_id[e.rep] for e in stab.edges]
        coef = per_edge[reps].reshape(-1, 4)
        mirrors.append(MirrorGraph(stab, stab.orbits.nodes.rep[i], coef, i))
        parents.append(edge_parent[reps] if reps else np.zeros(0, dtype=int))
    return SeparationStructure(lifted, mirrors, len(lifted.var_names()), parents)


def _cut_from_walk(sep: SeparationStructure, idx: int, edges, flags) -> CycleCut:
    mirror = sep.mirrors[idx]
    row = np.zeros(sep.num_lp_vars)
    for k, switch in zip(edges, flags):
        c = mirror.coef[k]
        if switch:
            row[c[0]] += 1.0
            row[c[3]] += 1.0
        else:
            row[c[1]] += 1.0
            row[c[2]] += 1.0
    parents = tuple(int(sep.parent_edge[idx][k]) for k in edges)
    return CycleCut(mirror.anchor, tuple(edges), tuple(flags), row, parents)


def separate_at(sep: SeparationStructure, idx: int, tau) -> tuple[CycleCut, float] | None:
    """Most violated cut through the anchor of node orbit ``idx``, with its slack."""
    found = sep.mirrors[idx].shortest_walk(tau)
    if found is None:
        return None
    weight, edges, flags = found
    if weight >= 1.0 - 1e-9:
        return None
    return _cut_from_walk(sep, idx, edges, flags), weight - 1.0


def min_slack_at(sep: SeparationStructure, idx: int, tau) -> float | None:
    """Shortest mirror-path weight minus one, whether or not it is violated."""
    found = sep.mirrors[idx].shortest_walk(tau)
    return None if found is None else found[0] - 1.0


def separate(sep: SeparationStructure, tau) -> tuple[CycleCut, float] | None:
    """Most violated cut over all node orbits (first orbit wins ties)."""
    best = None
    for idx in range(len(sep.mirrors)):
        res = separate_at(sep, idx, tau)
        if res is not None and (best is None or res[1] < best[1]):
            best = res
    return best


@dataclass(frozen=True)
class CutRecord:
    round: int
    slack: float
    anchor: int
    walk: tuple[int, ...]
    f_positions: tuple[int, ...]
    objective: float


@dataclass(frozen=True)
class CuttingPlaneResult:
    status: str
    objective: float
    point: np.ndarray
    objective_trace: tuple[float, ...]
    cuts: tuple[CutRecord, ...]
    rounds: int
    stop_reason: str
    iterations: int
    elapsed_ms: tuple[float, ...] = ()  # time at each objective-trace entry


def cutting_plane_solve(
    lp: LinearProgram, sep: SeparationStructure, max_rounds: int = 500, tol: float = VIOLATION_TOL
) -> CuttingPlaneResult:
    """Add the single most violated cycle cut per round until none exceeds ``tol``."""
    start = time.perf_counter()
    solver = Simplex(lp)
    sol: LPSolution = solver.solve()
    trace = [sol.objective]
    elapsed = [(time.perf_counter() - start) * 1e3]
    records: list[CutRecord] = []
    seen: set = set()
    rounds = 0
    stop = "no-violated-cut"
    while sol.optimal:
        if rounds >= max_rounds:
            stop = "max-rounds"
            break
        found = separate(sep, sol.point)
        if found is None or found[1] >= -tol:
            break
        cut, slack = found
        key = cut.key()
        if key in seen:
            stop = "repeated-cut"
            break
        seen.add(key)
        rounds += 1
        sol = solver.add_constraint(-cut.row, -1.0)
        trace.append(sol.objective)
        elapsed.append((time.perf_counter() - start) * 1e3)
        records.append(CutRecord(rounds, slack, cut.anchor, cut.orbit_edges, cut.f_positions, sol.objective))
    if not sol.optimal:
        stop = sol.status
    return CuttingPlaneResult(
        sol.status, sol.objective, sol.point, tuple(trace), tuple(records), rounds, stop, solver.iterations,
        tuple(elapsed),
    )
