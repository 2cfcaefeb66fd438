"""Binary pairwise exponential families with parameter tying.

A model is a list of features ``f_i`` over one or two binary variables, each
carrying a dense table and a weight.  Features are grouped into tying cells;
all features in a cell share one weight.  The base density is constant.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np


class ModelError(ValueError):
    """Raised for structurally invalid models."""


@dataclass(frozen=True)
class Feature:
    """A factored feature ``f(x[scope])`` with its weight.

    ``table`` is row-major over ``{0,1}^arity``: for a pair scope ``(u, v)``
    entry ``2*x_u + x_v`` holds ``f(x_u, x_v)``.
    """

    scope: tuple[int, ...]
    table: tuple[float, ...]
    weight: float

    def __post_init__(self):
        scope = tuple(int(v) for v in self.scope)
        table = tuple(float(t) for t in self.table)
        object.__setattr__(self, "scope", scope)
        object.__setattr__(self, "table", table)
        object.__setattr__(self, "weight", float(self.weight))
        if len(scope) not in (1, 2):
            raise ModelError(f"feature arity must be 1 or 2, got scope {scope}")
        if any(v < 0 for v in scope):
            raise ModelError(f"negative variable index in scope {scope}")
        if len(scope) == 2 and not scope[0] < scope[1]:
            raise ModelError(f"scope must be strictly ascending, got {scope}")
        if len(table) != 2 ** len(scope):
            raise ModelError(
                f"table for scope {scope} needs {2 ** len(scope)} entries, got {len(table)}"
            )
        if not all(np.isfinite(table)) or not np.isfinite(self.weight):
            raise ModelError("feature table and weight must be finite")
        if not is_irreducible(table):
            raise ModelError(f"feature on {scope} does not depend on all its arguments: {table}")

    @property
    def arity(self) -> int:
        return len(self.scope)

    @property
    def is_symmetric(self) -> bool:
        """True for unary features and pair features with ``f(0,1) == f(1,0)``."""
        return self.arity == 1 or self.table[1] == self.table[2]

    def value(self, x: Sequence[int]) -> float:
        if self.arity == 1:
            return self.table[x[self.scope[0]]]
        return self.table[2 * x[self.scope[0]] + x[self.scope[1]]]


def is_irreducible(table: Sequence[float]) -> bool:
    if len(table) == 2:
        return table[0] != table[1]
    f00, f01, f10, f11 = table
    depends_on_first = f00 != f10 or f01 != f11
    depends_on_second = f00 != f01 or f10 != f11
    return depends_on_first and depends_on_second


@dataclass(frozen=True)
class Model:
    """Binary pairwise family with features and a tying partition.

    ``tying`` is a tuple of disjoint cells of feature indices covering all
    features.  Construction validates that tied features have equal weights.
    """

    num_vars: int
    features: tuple[Feature, ...]
    tying: tuple[tuple[int, ...], ...] = ()

    def __post_init__(self):
        features = tuple(self.features)
        object.__setattr__(self, "features", features)
        if self.num_vars < 0:
            raise ModelError("num_vars must be nonnegative")
        for f in features:
            if max(f.scope) >= self.num_vars:
                raise ModelError(f"scope {f.scope} out of range for {self.num_vars} variables")
        tying = self.tying or tuple((i,) for i in range(len(features)))
        tying = tuple(tuple(sorted(int(j) for j in cell)) for cell in tying)
        seen = sorted(j for cell in tying for j in cell)
        if seen != list(range(len(features))):
            raise ModelError("tying cells must partition the feature indices")
        if any(len(cell) == 0 for cell in tying):
            raise ModelError("tying cells must be nonempty")
        for cell in tying:
            w = features[cell[0]].weight
            if any(features[j].weight != w for j in cell):
                raise ModelError(f"tied features {cell} have different weights")
        object.__setattr__(self, "tying", tying)

    @property
    def num_features(self) -> int:
        return len(self.features)

    @property
    def weights(self) -> np.ndarray:
        return np.array([f.weight for f in self.features])

    def cell_of(self) -> list[int]:
        """Tying-cell id of every feature."""
        out = [0] * self.num_features
        for c, cell in enumerate(self.tying):
            for j in cell:
                out[j] = c
        return out

    def feature_vector(self, x: Sequence[int]) -> np.ndarray:
        """``Phi(x)``: every feature evaluated at configuration ``x``."""
        return np.array([f.value(x) for f in self.features])


@dataclass(frozen=True)
class OvercompleteParams:
    """Indicator-form parameters on the nodes and edges of the model graph.

    ``node_terms[v]`` is ``(theta_v:0, theta_v:1)``; ``edge_terms[(u, v)]``
    (``u < v``) is the 2x2 array indexed ``[x_u, x_v]``.
    """

    node_terms: dict[int, tuple[float, float]]
    edge_terms: dict[tuple[int, int], np.ndarray] = field(default_factory=dict)

    def inner(self, x: Sequence[int]) -> float:
        """``<theta_o, Phi_o(x)>`` for a configuration ``x``."""
        total = sum(terms[x[v]] for v, terms in self.node_terms.items())
        total += sum(float(t[x[u], x[v]]) for (u, v), t in self.edge_terms.items())
        return float(total)


def graph_structure(model: Model) -> tuple[int, list[tuple[int, int]]]:
    """Nodes and deduplicated, sorted edge list of the model graph."""
    edges = sorted({f.scope for f in model.features if f.arity == 2})
    return model.num_vars, edges


def to_overcomplete(model: Model) -> OvercompleteParams:
    node_terms = {v: [0.0, 0.0] for v in range(model.num_vars)}
    edge_terms: dict[tuple[int, int], np.ndarray] = {}
    for f in model.features:
        if f.arity == 1:
            (v,) = f.scope
            node_terms[v][0] += f.table[0] * f.weight
            node_terms[v][1] += f.table[1] * f.weight
        else:
            term = edge_terms.setdefault(f.scope, np.zeros((2, 2)))
            term += np.asarray(f.table).reshape(2, 2) * f.weight
    return OvercompleteParams({v: (a, b) for v, (a, b) in node_terms.items()}, edge_terms)


def score(model: Model, x: Sequence[int]) -> float:
    """Unnormalized log-density ``<Phi(x), theta>``."""
    if len(x) != model.num_vars:
        raise ModelError(f"configuration has length {len(x)}, model has {model.num_vars} variables")
    return float(sum(f.weight * f.value(x) for f in model.features))


def all_configurations(n: int) -> Iterable[tuple[int, ...]]:
    return itertools.product((0, 1), repeat=n)


# -- JSON I/O ---------------------------------------------------------------


def model_to_dict(model: Model) -> dict:
    cells = model.cell_of()
    return {
        "num_vars": model.num_vars,
        "features": [
            {"scope": list(f.scope), "table": list(f.table), "weight": f.weight, "tie_cell": cells[j]}
            for j, f in enumerate(model.features)
        ],
    }


def model_from_dict(data: dict) -> Model:
    try:
        num_vars = int(data["num_vars"])
        raw = data["features"]
    except (KeyError, TypeError) as exc:
        raise ModelError(f"model JSON needs 'num_vars' and 'features': {exc}") from None
    features = []
    cells: dict[object, list[int]] = {}
    for j, item in enumerate(raw):
        try:
            scope, table, weight = item["scope"], item["table"], item["weight"]
        except (KeyError, TypeError) as exc:
            raise ModelError(f"feature {j}: missing field {exc}") from None
        scope = tuple(scope)
        if len(scope) == 2 and scope[0] > scope[1]:
            # accept descending scopes by transposing the table
            scope = (scope[1], scope[0])
            table = [table[0], table[2], table[1], table[3]]
        features.append(Feature(scope, table, weight))
        cells.setdefault(item.get("tie_cell", f"_own{j}"), []).append(j)
    return Model(num_vars, tuple(features), tuple(tuple(c) for c in cells.values()))


def load_model(path) -> Model:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelError(f"invalid JSON in {path}: {exc}") from None
    return model_from_dict(data)


def dump_model(model: Model, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh, indent=1)
