"""Automorphisms of colored factor graphs and the orbits they induce.

The factor graph of a model has one vertex per variable and one per
feature.  Feature vertices share a color only when their tables agree up to
argument order and they sit in the same tying cell; edges into an
asymmetric pair feature are colored by argument position in the
canonically oriented table.  Any automorphism of this
graph is a symmetry of the tied family, so its orbits are valid lifting
partitions.

Generators are found by individualization-refinement: a first path down
the search tree fixes one leaf, and every other branch at each level is
searched for a leaf that maps onto it.  Only generators and orbits are
produced, no canonical labeling.
"""
from __future__ import annotations

import sys
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Iterable, Sequence

from .model import Model, graph_structure

Permutation = tuple[int, ...]


@dataclass(frozen=True)
class ColoredGraph:
    """Simple undirected graph with integer vertex and edge colors.

    ``edges`` holds ``(u, v, color)`` triples with ``u < v``.
    """

    num_vertices: int
    vertex_colors: tuple[int, ...]
    edges: tuple[tuple[int, int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "vertex_colors", tuple(int(c) for c in self.vertex_colors))
        norm = []
        for u, v, c in self.edges:
            if u == v:
                raise ValueError(f"self-loop on vertex {u}")
            norm.append((min(u, v), max(u, v), int(c)))
        norm.sort()
        if len({(u, v) for u, v, _ in norm}) != len(norm):
            raise ValueError("duplicate edges")
        object.__setattr__(self, "edges", tuple(norm))
        if len(self.vertex_colors) != self.num_vertices:
            raise ValueError("one color per vertex required")
        if any(c < 0 for c in self.vertex_colors) or any(c < 0 for *_, c in norm):
            raise ValueError("colors must be nonnegative")

    def adjacency(self) -> list[list[tuple[int, int]]]:
        adj: list[list[tuple[int, int]]] = [[] for _ in range(self.num_vertices)]
        for u, v, c in self.edges:
            adj[u].append((v, c))
            adj[v].append((u, c))
        return adj

    def edge_colors(self) -> dict[tuple[int, int], int]:
        return {(u, v): c for u, v, c in self.edges}

    def is_automorphism(self, perm: Sequence[int]) -> bool:
        n = self.num_vertices
        if sorted(perm) != list(range(n)):
            return False
        if any(self.vertex_colors[perm[v]] != self.vertex_colors[v] for v in range(n)):
            return False
        ecolor = self.edge_colors()
        for u, v, c in self.edges:
            a, b = perm[u], perm[v]
            if ecolor.get((min(a, b), max(a, b))) != c:
                return False
        return True

    def individualized(self, vertex: int) -> "ColoredGraph":
        """Copy of the graph with ``vertex`` given a fresh, unique color."""
        colors = list(self.vertex_colors)
        colors[vertex] = max(colors, default=-1) + 1
        return ColoredGraph(self.num_vertices, tuple(colors), self.edges)

    def to_dimacs(self) -> str:
        lines = [f"p cgraph {self.num_vertices} {len(self.edges)}"]
        lines += [f"v {v} {c}" for v, c in enumerate(self.vertex_colors)]
        lines += [f"e {u} {v} {c}" for u, v, c in self.edges]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_dimacs(cls, text: str) -> "ColoredGraph":
        n = None
        colors: dict[int, int] = {}
        edges = []
        for lineno, line in enumerate(text.splitlines(), 1):
            parts = line.split()
            if not parts or parts[0] == "c":
                continue
            try:
                if parts[0] == "p":
                    n = int(parts[2])
                elif parts[0] == "v":
                    colors[int(parts[1])] = int(parts[2])
                elif parts[0] == "e":
                    edges.append((int(parts[1]), int(parts[2]), int(parts[3]) if len(parts) > 3 else 0))
                else:
                    raise ValueError(parts[0])
            except (ValueError, IndexError):
                raise ValueError(f"line {lineno}: cannot parse {line!r}") from None
        if n is None:
            raise ValueError("missing 'p cgraph N M' header")
        return cls(n, tuple(colors.get(v, 0) for v in range(n)), tuple(edges))


@dataclass(frozen=True)
class FactorGraph:
    graph: ColoredGraph
    num_vars: int
    num_features: int

    def var_vertex(self, i: int) -> int:
        return i

    def feature_vertex(self, j: int) -> int:
        return self.num_vars + j


def build_colored_factor_graph(model: Model) -> FactorGraph:
    n, m = model.num_vars, model.num_features
    cells = model.cell_of()
    factor_color: dict[tuple, int] = {}
    colors = [0] * n
    edges = []
    for j, f in enumerate(model.features):
        table, positions = f.table, (1, 2)
        if not f.is_symmetric:
            # a table and its transpose describe one function with swapped arguments
            t = f.table
            transposed = (t[0], t[2], t[1], t[3])
            if transposed < t:
                table, positions = transposed, (2, 1)
        key = (table, cells[j])
        if key not in factor_color:
            factor_color[key] = len(factor_color) + 1
        colors.append(factor_color[key])
        for k, v in enumerate(f.scope):
            edges.append((v, n + j, 0 if f.is_symmetric else positions[k]))
    return FactorGraph(ColoredGraph(n + m, tuple(colors), tuple(edges)), n, m)


# -- color refinement ---------------------------------------------------------


def _dense(colors: Sequence) -> list[int]:
    rank = {c: r for r, c in enumerate(sorted(set(colors)))}
    return [rank[c] for c in colors]


def _refine(adj, colors: list[int]) -> tuple[list[int], tuple]:
    """Refine ``colors`` (dense ints) to an equitable coloring.

    New color ids are ranks of ``(old color, neighbor signature)``, so the
    result depends only on the isomorphism class of (graph, coloring).
    Returns the coloring and its quotient invariant.
    """
    ncolors = len(set(colors))
    while True:
        sigs = [
            (colors[v], tuple(sorted((colors[w], ec) for w, ec in adj[v])))
            for v in range(len(colors))
        ]
        distinct = sorted(set(sigs))
        if len(distinct) == ncolors:
            return colors, tuple(distinct)
        rank = {s: r for r, s in enumerate(distinct)}
        colors = [rank[s] for s in sigs]
        ncolors = len(distinct)


def refine(graph: ColoredGraph, initial: Sequence[int] | None = None) -> tuple[int, ...]:
    """Coarsest equitable coloring refining ``initial`` (default: vertex colors)."""
    start = graph.vertex_colors if initial is None else initial
    if len(start) != graph.num_vertices:
        raise ValueError("initial coloring has wrong length")
    colors, _ = _refine(graph.adjacency(), _dense(start))
    return tuple(colors)


def _individualize(colors: list[int], v: int) -> list[int]:
    c = colors[v]
    return [col + 1 if col > c or (col == c and u != v) else col for u, col in enumerate(colors)]


def _target_cell(colors: list[int]) -> list[int] | None:
    cells: dict[int, list[int]] = {}
    for v, c in enumerate(colors):
        cells.setdefault(c, []).append(v)
    best = None
    for c in sorted(cells):
        cell = cells[c]
        if len(cell) > 1 and (best is None or len(cell) < len(best)):
            best = cell
    return best


# -- orbits ---------------------------------------------------------------------


class UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, x: int, y: int) -> None:
        rx, ry = self.find(x), self.find(y)
        if rx != ry:
            # keep the smaller index as root so cells are labeled by their minimum
            if ry < rx:
                rx, ry = ry, rx
            self.parent[ry] = rx


@dataclass(frozen=True)
class OrbitPartition:
    """Partition of ``range(len(rep))``; ``rep[e]`` is the cell id of ``e``.

    Cells are sorted by smallest member, and members within a cell ascend.
    """

    cells: tuple[tuple[int, ...], ...]
    rep: tuple[int, ...]

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(c) for c in self.cells)

    def __len__(self) -> int:
        return len(self.cells)

    @classmethod
    def from_labels(cls, labels: Sequence) -> "OrbitPartition":
        """Group elements with equal labels."""
        groups: dict = {}
        for e, lab in enumerate(labels):
            groups.setdefault(lab, []).append(e)
        cells = sorted((tuple(g) for g in groups.values()), key=lambda c: c[0])
        rep = [0] * len(labels)
        for k, cell in enumerate(cells):
            for e in cell:
                rep[e] = k
        return cls(tuple(cells), tuple(rep))

    @classmethod
    def discrete(cls, n: int) -> "OrbitPartition":
        return cls.from_labels(range(n))

    def refines(self, other: "OrbitPartition") -> bool:
        """True if every cell of ``self`` lies inside one cell of ``other``."""
        return all(len({other.rep[e] for e in cell}) == 1 for cell in self.cells)


def _union_find_orbits(gens: Iterable[Sequence[int]], n: int) -> UnionFind:
    uf = UnionFind(n)
    for g in gens:
        for x in range(n):
            uf.union(x, g[x])
    return uf


def orbits(gens: Iterable[Sequence[int]], domain: int) -> OrbitPartition:
    """Orbit partition of ``range(domain)`` under the group generated by ``gens``."""
    gens = list(gens)
    for g in gens:
        if len(g) != domain:
            raise ValueError(f"generator has length {len(g)}, domain is {domain}")
    uf = _union_find_orbits(gens, domain)
    return OrbitPartition.from_labels([uf.find(x) for x in range(domain)])


# -- individualization-refinement search -----------------------------------------


@dataclass(frozen=True)
class GeneratorSet:
    generators: tuple[Permutation, ...]
    group_order: int
    num_vertices: int


@contextmanager
def _recursion_headroom(depth: int):
    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 4 * depth + 1000))
    try:
        yield
    finally:
        sys.setrecursionlimit(old)


class _Search:
    def __init__(self, graph: ColoredGraph):
        self.graph = graph
        self.adj = graph.adjacency()
        self.gens: list[Permutation] = []
        self.invariants: list[tuple] = []
        self.first_leaf: list[int] = []
        self.first_path: list[int] = []

    def refine(self, colors):
        return _refine(self.adj, colors)

    def fixing(self, path: Sequence[int]) -> list[Permutation]:
        return [g for g in self.gens if all(g[p] == p for p in path)]

    def leaf_permutation(self, leaf: list[int]) -> Permutation:
        by_color = [0] * len(leaf)
        for v, c in enumerate(leaf):
            by_color[c] = v
        return tuple(by_color[c] for c in self.first_leaf)

    def explore(self, colors: list[int], level: int, path: list[int]) -> Permutation | None:
        """Search the subtree at ``colors`` for a leaf equivalent to the first leaf."""
        colors, inv = self.refine(colors)
        if inv != self.invariants[level]:
            return None
        cell = _target_cell(colors)
        if cell is None:
            g = self.leaf_permutation(colors)
            if any(g[f] != p for f, p in zip(self.first_path, path)):
                return None
            return g if self.graph.is_automorphism(g) else None
        uf = _union_find_orbits(self.fixing(path), len(colors))
        tried: list[int] = []
        for u in cell:
            if any(uf.find(u) == uf.find(t) for t in tried):
                continue
            tried.append(u)
            g = self.explore(_individualize(colors, u), level + 1, path + [u])
            if g is not None:
                return g
        return None

    def run(self) -> GeneratorSet:
        n = self.graph.num_vertices
        colors, inv = self.refine(_dense(self.graph.vertex_colors))
        levels = []  # (coloring before individualization, target cell)
        self.invariants = [inv]
        cell = _target_cell(colors)
        while cell is not None:
            levels.append((colors, cell))
            colors, inv = self.refine(_individualize(colors, cell[0]))
            self.invariants.append(inv)
            cell = _target_cell(colors)
        self.first_leaf = colors
        self.first_path = [c[0] for _, c in levels]
        order = 1
        with _recursion_headroom(len(levels)):
            for k in range(len(levels) - 1, -1, -1):
                colors_k, cell = levels[k]
                prefix = [c[0] for _, c in levels[:k]]
                v = cell[0]
                uf = _union_find_orbits(self.fixing(prefix), n)
                failed: list[int] = []
                for w in cell[1:]:
                    if uf.find(w) == uf.find(v) or any(uf.find(w) == uf.find(f) for f in failed):
                        continue
                    g = self.explore(_individualize(colors_k, w), k + 1, prefix + [w])
                    if g is None:
                        failed.append(w)
                        continue
                    self.gens.append(g)
                    for x in range(n):
                        uf.union(x, g[x])
                order *= sum(1 for w in cell if uf.find(w) == uf.find(v))
        return GeneratorSet(tuple(self.gens), order, n)


def automorphism_generators(graph: ColoredGraph) -> GeneratorSet:
    """Generators and order of the automorphism group of a colored graph."""
    if graph.num_vertices == 0:
        return GeneratorSet((), 1, 0)
    return _Search(graph).run()


# -- orbits on the model graph ------------------------------------------------------


@dataclass(frozen=True)
class GraphOrbits:
    """Node, edge and arc orbits of a model graph under some group.

    ``edges[k] = (u, v)`` with ``u < v``; arc ``2k`` is ``(u, v)`` and arc
    ``2k + 1`` is ``(v, u)``.
    """

    num_nodes: int
    edges: tuple[tuple[int, int], ...]
    nodes: OrbitPartition
    edge_orbits: OrbitPartition
    arc_orbits: OrbitPartition

    def arc(self, a: int) -> tuple[int, int]:
        u, v = self.edges[a // 2]
        return (u, v) if a % 2 == 0 else (v, u)


def derived_orbits(
    model: Model, var_orbits: OrbitPartition | None, gens: GeneratorSet | Iterable[Sequence[int]]
) -> GraphOrbits:
    """Edge and arc orbits induced by generators acting on the variables.

    ``gens`` may be factor-graph generators; only their action on the
    first ``num_vars`` vertices is used.
    """
    n, edges = graph_structure(model)
    perms = gens.generators if isinstance(gens, GeneratorSet) else list(gens)
    pis = [tuple(g[:n]) for g in perms]
    nodes = orbits(pis, n) if var_orbits is None else var_orbits
    index = {e: k for k, e in enumerate(edges)}
    arc_index = {}
    for k, (u, v) in enumerate(edges):
        arc_index[(u, v)] = 2 * k
        arc_index[(v, u)] = 2 * k + 1
    euf, auf = UnionFind(len(edges)), UnionFind(2 * len(edges))
    for pi in pis:
        for k, (u, v) in enumerate(edges):
            a, b = pi[u], pi[v]
            try:
                euf.union(k, index[(min(a, b), max(a, b))])
            except KeyError:
                raise ValueError(f"permutation maps edge {(u, v)} to non-edge {(a, b)}") from None
            auf.union(2 * k, arc_index[(a, b)])
            auf.union(2 * k + 1, arc_index[(b, a)])
    return GraphOrbits(
        n,
        tuple(edges),
        nodes,
        OrbitPartition.from_labels([euf.find(k) for k in range(len(edges))]),
        OrbitPartition.from_labels([auf.find(a) for a in range(2 * len(edges))]),
    )


def graph_symmetry(model: Model) -> tuple[GeneratorSet, GraphOrbits]:
    fg = build_colored_factor_graph(model)
    gens = automorphism_generators(fg.graph)
    return gens, derived_orbits(model, None, gens)


def split_generator(g: Sequence[int], num_vars: int) -> tuple[Permutation, Permutation]:
    """Factor-graph automorphism as (variable permutation, feature permutation)."""
    pi = tuple(g[:num_vars])
    gamma = tuple(x - num_vars for x in g[num_vars:])
    return pi, gamma


def feature_orbits(model: Model, gens: GeneratorSet) -> OrbitPartition:
    gammas = [split_generator(g, model.num_vars)[1] for g in gens.generators]
    return orbits(gammas, model.num_features)


def fixed_node_orbits(model: Model, i: int) -> GraphOrbits:
    """Orbits under the subgroup of factor-graph automorphisms fixing variable ``i``."""
    if not 0 <= i < model.num_vars:
        raise IndexError(f"variable {i} out of range for {model.num_vars} variables")
    fg = build_colored_factor_graph(model)
    gens = automorphism_generators(fg.graph.individualized(fg.var_vertex(i)))
    return derived_orbits(model, None, gens)


def trivial_orbits(model: Model) -> GraphOrbits:
    return derived_orbits(model, None, [])
