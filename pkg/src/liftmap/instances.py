"""Test and benchmark instances."""
from __future__ import annotations

import numpy as np

from .model import Feature, Model, is_irreducible

SEMI_TRANSITIVE_MLN = """\
predicate pred/2
predicate obs/2
constants A B
-100: x != y ^ x != z ^ y != z => (pred(x,y) <=> pred(y,z))
0.1: x != y ^ obs(x,y) => pred(x,y)
evidence obs(A,B)
"""

_PAIR_TABLES = ((0, 0, 1, 0), (0, 0, 0, 1), (0, 1, 1, 0), (1, 0, 0, 1), (0, 1, 0, 0))
_UNARY_TABLES = ((0, 1), (1, 0))


def triangle(weights=(1.0, 1.0, 1.0), tie_first_two: bool = True) -> Model:
    """f1 = x1(1-x2), f2 = x1(1-x3), f3 = x2*x3 on three variables."""
    feats = (
        Feature((0, 1), (0, 0, 1, 0), weights[0]),
        Feature((0, 2), (0, 0, 1, 0), weights[1]),
        Feature((1, 2), (0, 0, 0, 1), weights[2]),
    )
    tying = ((0, 1), (2,)) if tie_first_two else ()
    return Model(3, feats, tying)


def frustrated_triangle(weight: float = 1.0) -> Model:
    """Three tied disagreement features: LOCAL is loose, CYCLE is tight."""
    feats = tuple(Feature(s, (0, 1, 1, 0), weight) for s in ((0, 1), (0, 2), (1, 2)))
    return Model(3, feats, ((0, 1, 2),))


def clique(n: int, pair_weight: float = -1.0, unary_weight: float = 0.5) -> Model:
    """Fully symmetric model on K_n: tied agreement features and tied unaries."""
    feats = [Feature((u, v), (1, 0, 0, 1), pair_weight) for u in range(n) for v in range(u + 1, n)]
    m = len(feats)
    feats += [Feature((v,), (0, 1), unary_weight) for v in range(n)]
    tying = (tuple(range(m)), tuple(range(m, m + n))) if m else (tuple(range(n)),)
    return Model(n, tuple(feats), tying)


def _random_table(rng, arity: int) -> tuple[float, ...]:
    if rng.random() < 0.6:
        pool = _PAIR_TABLES if arity == 2 else _UNARY_TABLES
        return pool[rng.integers(len(pool))]
    while True:
        t = tuple(float(v) for v in rng.integers(0, 3, size=2**arity))
        if is_irreducible(t):
            return t


def _random_weight(rng) -> float:
    return float(rng.choice(np.arange(-2.0, 2.01, 0.5)[np.arange(9) != 4]))


def random_tree(rng, n: int) -> Model:
    feats = []
    for v in range(1, n):
        feats.append(Feature((int(rng.integers(v)), v), _random_table(rng, 2), _random_weight(rng)))
    for v in range(n):
        if rng.random() < 0.7:
            feats.append(Feature((v,), _random_table(rng, 1), _random_weight(rng)))
    return Model(n, tuple(feats))


def _random_permutation_with_cycles(rng, n: int) -> list[int]:
    order = list(rng.permutation(n))
    perm = list(range(n))
    i = 0
    while i < n:
        length = int(rng.choice([1, 2, 2, 3, 4]))
        cyc = order[i:i + length]
        for a, b in zip(cyc, cyc[1:] + cyc[:1]):
            perm[a] = b
        i += length
    return perm


def random_tied_model(rng, n: int, num_pair_seeds: int | None = None, num_unary_seeds: int | None = None,
                      merge_prob: float = 0.3) -> Model:
    """Random model invariant under a random permutation of the variables.

    Features are generated as orbits of random seed features under the
    cyclic group of a random permutation; every orbit is one tying cell.
    Cells whose weights coincide are additionally merged with probability
    ``merge_prob``, which gives random coarser tying partitions.
    """
    perm = _random_permutation_with_cycles(rng, n)
    if num_pair_seeds is None:
        num_pair_seeds = int(rng.integers(1, max(2, n)))
    if num_unary_seeds is None:
        num_unary_seeds = int(rng.integers(0, 3))
    feats: list[Feature] = []
    cells: list[list[int]] = []

    def images(seed):
        out, cur = [], tuple(seed)
        while True:
            out.append(cur)
            cur = tuple(perm[v] for v in cur)
            if cur == tuple(seed):
                return out

    if n >= 2:
        for _ in range(num_pair_seeds):
            u, v = (int(a) for a in rng.choice(n, size=2, replace=False))
            table, w = _random_table(rng, 2), _random_weight(rng)
            cell = []
            for a, b in images((u, v)):
                t = table if a < b else (table[0], table[2], table[1], table[3])
                cell.append(len(feats))
                feats.append(Feature((min(a, b), max(a, b)), t, w))
            cells.append(cell)
    for _ in range(num_unary_seeds):
        v = int(rng.integers(n))
        table, w = _random_table(rng, 1), _random_weight(rng)
        cell = []
        for (a,) in images((v,)):
            cell.append(len(feats))
            feats.append(Feature((a,), table, w))
        cells.append(cell)
    merged: list[list[int]] = []
    for cell in cells:
        w = feats[cell[0]].weight
        target = next((c for c in merged if feats[c[0]].weight == w), None)
        if target is not None and rng.random() < merge_prob:
            target.extend(cell)
        else:
            merged.append(list(cell))
    return Model(n, tuple(feats), tuple(tuple(c) for c in merged))
