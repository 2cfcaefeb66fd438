"""Lifted graphs with their objectives and LOCAL polytope constraint systems.

Variable naming is shared by the ground and lifted systems:

* ``n{p}_{t}``: node (orbit) ``p`` takes state ``t``;
* ``e{k}_00``, ``e{k}_11``: both endpoints of edge (orbit) ``k`` agree;
* ``e{k}_01``: the arc orbit of ``(u, v)`` for the representative
  ``u < v``, i.e. ``x_u = 0, x_v = 1``; ``e{k}_10`` is the reverse arc
  orbit and is absent when the two arc orbits coincide.

Ground systems use ``x{v}_{t}`` and ``x{u}_{v}_{st}`` instead, so that
lifted and ground variables never collide when printed side by side.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .autgroup import GraphOrbits, derived_orbits
from .model import Model, OvercompleteParams, graph_structure

ORBIT_TOL = 1e-9


class LiftError(ValueError):
    """Orbit data inconsistent with the model graph or its parameters."""


@dataclass(frozen=True)
class LiftedNode:
    members: tuple[int, ...]
    rep: int

    @property
    def size(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class LiftedEdge:
    """An edge orbit: ``ends`` are the node orbits of the representative ``(u, v)``."""

    ends: tuple[int, int]
    members: tuple[int, ...]  # ground edge indices
    rep: tuple[int, int]
    arc_uv: int
    arc_vu: int

    @property
    def size(self) -> int:
        return len(self.members)

    @property
    def arc_merged(self) -> bool:
        return self.arc_uv == self.arc_vu

    @property
    def is_loop(self) -> bool:
        return self.ends[0] == self.ends[1]


@dataclass(frozen=True)
class LiftedGraph:
    """Multigraph on node orbits; one edge per edge orbit (loops allowed)."""

    nodes: tuple[LiftedNode, ...]
    edges: tuple[LiftedEdge, ...]
    orbits: GraphOrbits

    @property
    def num_ground_nodes(self) -> int:
        return self.orbits.num_nodes

    def var_names(self) -> list[str]:
        names = [f"n{p}_{t}" for p in range(len(self.nodes)) for t in (0, 1)]
        for k, e in enumerate(self.edges):
            names += [f"e{k}_00", f"e{k}_11", f"e{k}_01"]
            if not e.arc_merged:
                names.append(f"e{k}_10")
        return names

    def var_index(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.var_names())}


def build_lifted_graph(model: Model, orbits: GraphOrbits) -> LiftedGraph:
    n, edges = graph_structure(model)
    if orbits.num_nodes != n or list(orbits.edges) != edges:
        raise LiftError("orbit data was computed for a different graph")
    node_rep = orbits.nodes.rep
    nodes = tuple(LiftedNode(cell, cell[0]) for cell in orbits.nodes.cells)
    lifted_edges = []
    for cell in orbits.edge_orbits.cells:
        k = cell[0]
        u, v = edges[k]
        ends = (node_rep[u], node_rep[v])
        arc_uv, arc_vu = orbits.arc_orbits.rep[2 * k], orbits.arc_orbits.rep[2 * k + 1]
        for k2 in cell:
            a, b = edges[k2]
            if {node_rep[a], node_rep[b]} != set(ends):
                raise LiftError(f"edge {edges[k2]} joins different node orbits than {edges[k]}")
            if {orbits.arc_orbits.rep[2 * k2], orbits.arc_orbits.rep[2 * k2 + 1]} != {arc_uv, arc_vu}:
                raise LiftError(f"arc orbits of edge {edges[k2]} do not match its edge orbit")
        lifted_edges.append(LiftedEdge(ends, cell, (u, v), arc_uv, arc_vu))
    for cell in orbits.arc_orbits.cells:
        if len({orbits.edge_orbits.rep[a // 2] for a in cell}) != 1:
            raise LiftError("an arc orbit spans several edge orbits")
    return LiftedGraph(nodes, tuple(lifted_edges), orbits)


def ground_lifted_graph(model: Model) -> LiftedGraph:
    """Lifted graph under the trivial group (isomorphic to the model graph)."""
    return build_lifted_graph(model, derived_orbits(model, None, []))


# -- parameters -------------------------------------------------------------------


def arc_term(theta: OvercompleteParams, a: int, b: int) -> float:
    """Overcomplete weight of ``x_a = 0, x_b = 1`` on edge ``{a, b}``."""
    if a < b:
        return float(theta.edge_terms[(a, b)][0, 1])
    return float(theta.edge_terms[(b, a)][1, 0])


@dataclass(frozen=True)
class LiftedParams:
    """Orbit-level objective: sums of overcomplete weights over each cell."""

    node: dict[tuple[int, int], float]
    edge_same: dict[tuple[int, int], float]
    arc: dict[int, float]

    def vector(self, lg: LiftedGraph) -> np.ndarray:
        out = [self.node[(p, t)] for p in range(len(lg.nodes)) for t in (0, 1)]
        for k, e in enumerate(lg.edges):
            out += [self.edge_same[(k, 0)], self.edge_same[(k, 1)], self.arc[e.arc_uv]]
            if not e.arc_merged:
                out.append(self.arc[e.arc_vu])
        return np.array(out, dtype=float)


def _constant(values: Sequence[float], what: str) -> float:
    lo, hi = min(values), max(values)
    if hi - lo > ORBIT_TOL * max(1.0, abs(lo), abs(hi)):
        raise LiftError(f"parameters are not constant on {what}: range [{lo}, {hi}]")
    return values[0]


def lift_parameters(theta: OvercompleteParams, lg: LiftedGraph) -> LiftedParams:
    """Orbit-size-scaled objective coefficients; rejects non-orbit-constant input."""
    orb = lg.orbits
    node = {}
    for p, nd in enumerate(lg.nodes):
        for t in (0, 1):
            val = _constant([theta.node_terms[v][t] for v in nd.members], f"node orbit {nd.members}")
            node[(p, t)] = nd.size * val
    edge_same = {}
    for k, e in enumerate(lg.edges):
        for t in (0, 1):
            vals = [float(theta.edge_terms[orb.edges[g]][t, t]) for g in e.members]
            edge_same[(k, t)] = e.size * _constant(vals, f"edge orbit {e.rep}")
    arc = {}
    for a_id, cell in enumerate(orb.arc_orbits.cells):
        vals = [arc_term(theta, *orb.arc(a)) for a in cell]
        arc[a_id] = len(cell) * _constant(vals, f"arc orbit of {orb.arc(cell[0])}")
    return LiftedParams(node, edge_same, arc)


# -- linear programs --------------------------------------------------------------


@dataclass(frozen=True)
class LinearProgram:
    """``maximize c.x`` s.t. ``A_eq x = b_eq``, ``A_ub x <= b_ub``, ``lower <= x <= upper``."""

    names: tuple[str, ...]
    c: np.ndarray
    A_eq: np.ndarray
    b_eq: np.ndarray
    A_ub: np.ndarray = field(default=None)
    b_ub: np.ndarray = field(default=None)
    lower: np.ndarray = field(default=None)
    upper: np.ndarray = field(default=None)

    def __post_init__(self):
        nv = len(self.names)
        put = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        put("names", tuple(self.names))
        put("c", np.asarray(self.c, dtype=float).reshape(nv))
        put("A_eq", np.asarray(self.A_eq, dtype=float).reshape(-1, nv))
        put("b_eq", np.asarray(self.b_eq, dtype=float).reshape(-1))
        put("A_ub", np.zeros((0, nv)) if self.A_ub is None else np.asarray(self.A_ub, dtype=float).reshape(-1, nv))
        put("b_ub", np.zeros(0) if self.b_ub is None else np.asarray(self.b_ub, dtype=float).reshape(-1))
        put("lower", np.zeros(nv) if self.lower is None else np.asarray(self.lower, dtype=float))
        put("upper", np.ones(nv) if self.upper is None else np.asarray(self.upper, dtype=float))
        if len(self.b_eq) != len(self.A_eq) or len(self.b_ub) != len(self.A_ub):
            raise ValueError("constraint matrix and right-hand side sizes differ")
        if len(set(self.names)) != nv:
            raise ValueError("duplicate variable names")

    @property
    def num_vars(self) -> int:
        return len(self.names)

    def index(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.names)}

    def with_objective(self, c) -> "LinearProgram":
        return LinearProgram(self.names, c, self.A_eq, self.b_eq, self.A_ub, self.b_ub, self.lower, self.upper)

    def with_inequality(self, row, rhs: float, sense: str = ">=") -> "LinearProgram":
        row = np.asarray(row, dtype=float)
        if sense == ">=":
            row, rhs = -row, -rhs
        elif sense != "<=":
            raise ValueError(f"unknown sense {sense!r}")
        return LinearProgram(
            self.names, self.c, self.A_eq, self.b_eq,
            np.vstack([self.A_ub, row]), np.append(self.b_ub, rhs), self.lower, self.upper,
        )

    def objective(self, x) -> float:
        return float(self.c @ np.asarray(x, dtype=float))

    def max_violation(self, x) -> float:
        x = np.asarray(x, dtype=float)
        parts = [0.0]
        if len(self.b_eq):
            parts.append(np.max(np.abs(self.A_eq @ x - self.b_eq)))
        if len(self.b_ub):
            parts.append(np.max(self.A_ub @ x - self.b_ub))
        parts.append(np.max(self.lower - x, initial=0.0))
        parts.append(np.max(x - self.upper, initial=0.0))
        return float(max(parts))

    def to_lp_text(self, title: str = "liftmap") -> str:
        """CPLEX LP text form."""

        def expr(coefs) -> str:
            terms = [f"{'-' if a < 0 else '+'} {abs(a):.17g} {self.names[j]}" for j, a in enumerate(coefs) if a != 0]
            return " ".join(terms) if terms else "0 " + self.names[0]

        lines = [f"\\ {title}", "Maximize", f" obj: {expr(self.c)}", "Subject To"]
        for r, (row, rhs) in enumerate(zip(self.A_eq, self.b_eq)):
            lines.append(f" eq{r}: {expr(row)} = {rhs:.17g}")
        for r, (row, rhs) in enumerate(zip(self.A_ub, self.b_ub)):
            lines.append(f" ub{r}: {expr(row)} <= {rhs:.17g}")
        lines.append("Bounds")
        for name, lo, hi in zip(self.names, self.lower, self.upper):
            lines.append(f" {lo:.17g} <= {name} <= {hi:.17g}")
        lines.append("End")
        return "\n".join(lines) + "\n"


class _RowBuilder:
    def __init__(self, names: list[str]):
        self.index = {name: i for i, name in enumerate(names)}
        self.names = names
        self.rows: list[np.ndarray] = []
        self.rhs: list[float] = []
        self._seen: set = set()

    def add(self, terms: dict[str, float], rhs: float, dedupe: bool = False) -> None:
        row = np.zeros(len(self.names))
        for name, coef in terms.items():
            row[self.index[name]] += coef
        key = (tuple(np.round(row, 12)), round(rhs, 12))
        if dedupe and key in self._seen:
            return
        self._seen.add(key)
        self.rows.append(row)
        self.rhs.append(rhs)

    def matrix(self):
        return np.array(self.rows).reshape(-1, len(self.names)), np.array(self.rhs)


def ground_var_names(num_nodes: int, edges: Sequence[tuple[int, int]]) -> list[str]:
    names = [f"x{v}_{t}" for v in range(num_nodes) for t in (0, 1)]
    for u, v in edges:
        names += [f"x{u}_{v}_{st}" for st in ("00", "01", "10", "11")]
    return names


def local_constraints(
    num_nodes: int, edges: Sequence[tuple[int, int]], theta: OvercompleteParams | None = None
) -> LinearProgram:
    """Ground LOCAL polytope; objective is ``theta`` when given, else zero."""
    names = ground_var_names(num_nodes, edges)
    rb = _RowBuilder(names)
    for v in range(num_nodes):
        rb.add({f"x{v}_0": 1, f"x{v}_1": 1}, 1.0)
    for u, v in edges:
        e = f"x{u}_{v}_"
        rb.add({e + "00": 1, e + "01": 1, f"x{u}_0": -1}, 0.0)
        rb.add({e + "00": 1, e + "10": 1, f"x{v}_0": -1}, 0.0)
        rb.add({e + "11": 1, e + "01": 1, f"x{v}_1": -1}, 0.0)
        rb.add({e + "11": 1, e + "10": 1, f"x{u}_1": -1}, 0.0)
    A, b = rb.matrix()
    c = np.zeros(len(names))
    if theta is not None:
        idx = rb.index
        for v, (a0, a1) in theta.node_terms.items():
            c[idx[f"x{v}_0"]], c[idx[f"x{v}_1"]] = a0, a1
        for (u, v), t in theta.edge_terms.items():
            for s in (0, 1):
                for r in (0, 1):
                    c[idx[f"x{u}_{v}_{s}{r}"]] = t[s, r]
    return LinearProgram(names, c, A, b)


def ground_local_lp(model: Model, theta: OvercompleteParams | None = None) -> LinearProgram:
    from .model import to_overcomplete

    n, edges = graph_structure(model)
    return local_constraints(n, edges, to_overcomplete(model) if theta is None else theta)


def lifted_local_constraints(lg: LiftedGraph, params: LiftedParams | None = None) -> LinearProgram:
    """LOCAL constraints over orbits: one normalization per node orbit and
    one consistency block per edge orbit, with coinciding rows dropped."""
    names = lg.var_names()
    rb = _RowBuilder(names)
    for p in range(len(lg.nodes)):
        rb.add({f"n{p}_0": 1, f"n{p}_1": 1}, 1.0)
    for k, e in enumerate(lg.edges):
        pu, pv = e.ends
        a_uv = f"e{k}_01"
        a_vu = a_uv if e.arc_merged else f"e{k}_10"
        same0, same1 = f"e{k}_00", f"e{k}_11"
        for terms in (
            {same0: 1, a_uv: 1, f"n{pu}_0": -1},
            {same0: 1, a_vu: 1, f"n{pv}_0": -1},
            {same1: 1, a_uv: 1, f"n{pv}_1": -1},
            {same1: 1, a_vu: 1, f"n{pu}_1": -1},
        ):
            merged: dict[str, float] = {}
            for name, coef in terms.items():
                merged[name] = merged.get(name, 0) + coef
            rb.add(merged, 0.0, dedupe=True)
    A, b = rb.matrix()
    c = np.zeros(len(names)) if params is None else params.vector(lg)
    return LinearProgram(names, c, A, b)


def lifting_map(lg: LiftedGraph) -> np.ndarray:
    """Index array ``rho``: ground LOCAL variable ``g`` -> lifted variable ``rho[g]``.

    Ground variables are ordered as in :func:`local_constraints`.
    """
    orb = lg.orbits
    idx = lg.var_index()
    rho = []
    for v in range(orb.num_nodes):
        p = orb.nodes.rep[v]
        rho += [idx[f"n{p}_0"], idx[f"n{p}_1"]]
    for g in range(len(orb.edges)):
        k = orb.edge_orbits.rep[g]
        e = lg.edges[k]

        def arc_var(a: int) -> int:
            return idx[f"e{k}_01"] if orb.arc_orbits.rep[a] == e.arc_uv else idx[f"e{k}_10"]

        rho += [idx[f"e{k}_00"], arc_var(2 * g), arc_var(2 * g + 1), idx[f"e{k}_11"]]
    return np.array(rho, dtype=int)


def expand(tau_bar, lg: LiftedGraph) -> np.ndarray:
    """Ground pseudomarginal whose every coordinate equals its orbit's value."""
    return np.asarray(tau_bar, dtype=float)[lifting_map(lg)]


def decode_nodes(tau_bar, lg: LiftedGraph) -> tuple[int, ...]:
    """Ground configuration from rounding node-orbit marginals (ties go to 0)."""
    idx = lg.var_index()
    states = [1 if tau_bar[idx[f"n{p}_1"]] > 0.5 else 0 for p in range(len(lg.nodes))]
    return tuple(states[lg.orbits.nodes.rep[v]] for v in range(lg.num_ground_nodes))


def orbit_counts(lg: LiftedGraph) -> dict[str, int]:
    return {
        "node_orbits": len(lg.nodes),
        "edge_orbits": len(lg.edges),
        "arc_orbits": len(lg.orbits.arc_orbits),
    }

