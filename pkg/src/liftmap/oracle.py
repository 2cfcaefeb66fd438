"""Brute-force ground truths used to check the symmetry and LP code.

Nothing here calls into the algorithms it is meant to check; only the
basic model and graph containers are shared.  Every oracle has a hard size
budget and raises :class:`BudgetExceeded` instead of sampling.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .autgroup import ColoredGraph
from .model import Model


class BudgetExceeded(ValueError):
    pass


def _check(size: int, limit: int, what: str) -> None:
    if size > limit:
        raise BudgetExceeded(f"{what} {size} exceeds the oracle budget {limit}")


# -- exact MAP ---------------------------------------------------------------------


def _scores(model: Model, configs: np.ndarray) -> np.ndarray:
    total = np.zeros(len(configs))
    for f in model.features:
        table = np.asarray(f.table)
        if f.arity == 1:
            idx = configs[:, f.scope[0]]
        else:
            idx = 2 * configs[:, f.scope[0]] + configs[:, f.scope[1]]
        total += f.weight * table[idx]
    return total


def _config_block(n: int, start: int, stop: int) -> np.ndarray:
    codes = np.arange(start, stop, dtype=np.int64)
    # variable 0 is the most significant bit, matching itertools.product order
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    return ((codes[:, None] >> shifts[None, :]) & 1).astype(np.int8)


def exact_map(model: Model, max_vars: int = 24, tol: float = 1e-9, chunk: int = 1 << 16):
    """``(value, argmax configurations)`` by enumerating ``{0,1}^n``."""
    n = model.num_vars
    _check(n, max_vars, "variable count")
    best, arg = -np.inf, []
    total = 1 << n
    for start in range(0, total, chunk):
        configs = _config_block(n, start, min(total, start + chunk))
        s = _scores(model, configs)
        top = s.max()
        if top > best + tol:
            best, arg = top, []
        if top >= best - tol:
            arg += [tuple(int(v) for v in c) for c in configs[s >= best - tol]]
            best = max(best, top)
    arg = [c for c in arg if _scores(model, np.array([c]))[0] >= best - tol]
    return float(best), arg


# -- automorphisms -----------------------------------------------------------------


@dataclass(frozen=True)
class BruteGroup:
    elements: tuple[tuple[int, ...], ...]
    orbits: tuple[frozenset, ...]

    @property
    def order(self) -> int:
        return len(self.elements)


def brute_automorphisms(graph: ColoredGraph, max_vertices: int = 8) -> BruteGroup:
    n = graph.num_vertices
    _check(n, max_vertices, "vertex count")
    colors = list(graph.vertex_colors)
    edge_color = {}
    for u, v, c in graph.edges:
        edge_color[frozenset((u, v))] = c
    elements = []
    for perm in itertools.permutations(range(n)):
        if any(colors[perm[v]] != colors[v] for v in range(n)):
            continue
        if all(edge_color.get(frozenset((perm[u], perm[v]))) == c for u, v, c in graph.edges):
            elements.append(perm)
    orbit_of = {}
    for v in range(n):
        orbit_of[v] = frozenset(p[v] for p in elements)
    orbits = tuple(sorted(set(orbit_of.values()), key=min))
    return BruteGroup(tuple(elements), orbits)


# -- configuration orbits ------------------------------------------------------------


@dataclass(frozen=True)
class ConfigOrbit:
    configs: tuple[tuple[int, ...], ...]
    centroid: np.ndarray


def config_orbit_centroids(model: Model, generators, max_vars: int = 12) -> list[ConfigOrbit]:
    """Orbits of ``{0,1}^n`` under variable permutations, with mean feature vectors.

    ``generators`` act on variables; longer permutations (factor-graph
    generators) are truncated to the first ``n`` entries.
    """
    n = model.num_vars
    _check(n, max_vars, "variable count")
    configs = list(itertools.product((0, 1), repeat=n))
    code = {c: k for k, c in enumerate(configs)}
    parent = list(range(len(configs)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for g in generators:
        pi = tuple(g)[:n]
        for k, c in enumerate(configs):
            image = [0] * n
            for v in range(n):
                image[pi[v]] = c[v]
            a, b = find(k), find(code[tuple(image)])
            if a != b:
                parent[max(a, b)] = min(a, b)
    groups: dict[int, list[int]] = {}
    for k in range(len(configs)):
        groups.setdefault(find(k), []).append(k)
    out = []
    for members in groups.values():
        feats = np.array([[_feature_value(f, configs[k]) for f in model.features] for k in members])
        out.append(ConfigOrbit(tuple(configs[k] for k in members), feats.mean(axis=0) if len(feats) else np.zeros(0)))
    return out


def _feature_value(f, x) -> float:
    if f.arity == 1:
        return f.table[x[f.scope[0]]]
    return f.table[2 * x[f.scope[0]] + x[f.scope[1]]]


# -- cycle separation ----------------------------------------------------------------


@dataclass(frozen=True)
class BruteCut:
    slack: float
    walk: tuple[int, ...]  # closed node sequence, first == last
    f_positions: tuple[int, ...]


def brute_separation(
    num_nodes: int,
    pair_marginals: dict[tuple[int, int], np.ndarray],
    max_len: int,
    max_nodes: int = 10,
    max_len_limit: int = 10,
) -> BruteCut | None:
    """Most violated cycle inequality over closed walks of at most ``max_len`` steps.

    ``pair_marginals[(u, v)]`` is the 2x2 table ``tau_uv`` indexed ``[x_u, x_v]``.
    Each step independently takes the ``nocut`` term (joins F) or the ``cut``
    term; a walk counts when it returns to its start with an odd F.  Partial
    walks are dropped when an equal-or-shorter partial walk reached the same
    node with the same F parity at no higher cost, which keeps the search
    exhaustive for the minimum.  Returns ``None`` if the graph has no edge.
    """
    _check(num_nodes, max_nodes, "node count")
    _check(max_len, max_len_limit, "walk length")
    adj: dict[int, list[tuple[int, float, float]]] = {v: [] for v in range(num_nodes)}
    for (u, v), t in pair_marginals.items():
        t = np.asarray(t, dtype=float)
        nocut = max(t[0, 0] + t[1, 1], 0.0)
        cut = max(t[0, 1] + t[1, 0], 0.0)
        adj[u].append((v, nocut, cut))
        adj[v].append((u, nocut, cut))
    best: BruteCut | None = None
    for start in range(num_nodes):
        seen: dict[tuple[int, int], list[float]] = {}

        def dominated(node, parity, length, cost) -> bool:
            costs = seen.setdefault((node, parity), [np.inf] * (max_len + 1))
            if min(costs[: length + 1]) <= cost:
                return True
            costs[length] = min(costs[length], cost)
            return False

        stack = [(start, 0, 0.0, (start,), ())]
        while stack:
            node, parity, cost, walk, fpos = stack.pop()
            length = len(walk) - 1
            if length and node == start and parity == 1:
                if best is None or cost - 1.0 < best.slack - 1e-15:
                    best = BruteCut(cost - 1.0, walk, fpos)
            if length == max_len:
                continue
            if best is not None and cost - 1.0 >= best.slack:
                continue
            for nxt, nocut, cut in adj[node]:
                for in_f, w in ((True, nocut), (False, cut)):
                    p2 = parity ^ in_f
                    c2 = cost + w
                    if dominated(nxt, p2, length + 1, c2):
                        continue
                    stack.append((nxt, p2, c2, walk + (nxt,), fpos + ((length,) if in_f else ())))
    return best
