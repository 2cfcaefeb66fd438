"""A small Markov logic front-end: parsing and grounding, plus renaming orbits.

Line-oriented grammar (``//`` and ``#`` start comments)::

    predicate pred/2
    domain 5
    constants A B
    -100: x != y ^ x != z => (pred(x,y) <=> pred(y,z))
    0.1 obs(x,y) => pred(x,y)
    evidence obs(A,B)
    evidence !obs(B,A)

Identifiers starting with a lowercase letter are logical variables, all
others are constants.  Operators by increasing binding strength: ``<=>``,
``=>`` (right associative), ``v``/``|``, ``^``/``&``/``,``, ``!``; the
guards ``t = t'`` and ``t != t'`` compare terms.  Predicates mentioned in
evidence are closed-world: their atoms not listed as true are false.
"""
from __future__ import annotations

import itertools
import json
import re
from dataclasses import dataclass, field
from typing import Iterator, Sequence, Union

from .autgroup import GraphOrbits, OrbitPartition
from .model import Feature, Model, graph_structure


class MLNError(ValueError):
    def __init__(self, message: str, line: int = 0, column: int = 0):
        self.line, self.column, self.message = line, column, message
        where = f"line {line}, column {column}: " if line else ""
        super().__init__(where + message)


# -- syntax tree ------------------------------------------------------------------


@dataclass(frozen=True)
class Atom:
    pred: str
    args: tuple[str, ...]


@dataclass(frozen=True)
class Compare:
    left: str
    right: str
    equal: bool


@dataclass(frozen=True)
class Not:
    arg: "Formula"


@dataclass(frozen=True)
class Junction:
    op: str  # "and" | "or"
    args: tuple["Formula", ...]


@dataclass(frozen=True)
class Binary:
    op: str  # "=>" | "<=>"
    left: "Formula"
    right: "Formula"


Formula = Union[Atom, Compare, Not, Junction, Binary]


def is_variable(term: str) -> bool:
    return term[:1].islower()


def atoms_of(f: Formula) -> Iterator[Atom]:
    if isinstance(f, Atom):
        yield f
    elif isinstance(f, Not):
        yield from atoms_of(f.arg)
    elif isinstance(f, Junction):
        for a in f.args:
            yield from atoms_of(a)
    elif isinstance(f, Binary):
        yield from atoms_of(f.left)
        yield from atoms_of(f.right)


def terms_of(f: Formula) -> Iterator[str]:
    if isinstance(f, Atom):
        yield from f.args
    elif isinstance(f, Compare):
        yield f.left
        yield f.right
    elif isinstance(f, Not):
        yield from terms_of(f.arg)
    elif isinstance(f, Junction):
        for a in f.args:
            yield from terms_of(a)
    elif isinstance(f, Binary):
        yield from terms_of(f.left)
        yield from terms_of(f.right)


def evaluate(f: Formula, subst: dict[str, str], truth) -> bool:
    """Truth of ``f`` under a substitution; ``truth(pred, args)`` decides atoms."""
    if isinstance(f, Atom):
        return truth(f.pred, tuple(subst.get(t, t) for t in f.args))
    if isinstance(f, Compare):
        return (subst.get(f.left, f.left) == subst.get(f.right, f.right)) == f.equal
    if isinstance(f, Not):
        return not evaluate(f.arg, subst, truth)
    if isinstance(f, Junction):
        if f.op == "and":
            return all(evaluate(a, subst, truth) for a in f.args)
        return any(evaluate(a, subst, truth) for a in f.args)
    left = evaluate(f.left, subst, truth)
    right = evaluate(f.right, subst, truth)
    return (not left or right) if f.op == "=>" else left == right


@dataclass(frozen=True)
class WeightedFormula:
    weight: float
    formula: Formula
    variables: tuple[str, ...]  # in order of first occurrence
    text: str = ""


@dataclass(frozen=True)
class Literal:
    atom: Atom
    positive: bool


@dataclass
class MLNProgram:
    predicates: dict[str, int] = field(default_factory=dict)
    formulas: list[WeightedFormula] = field(default_factory=list)
    constants: list[str] = field(default_factory=list)
    evidence: list[Literal] = field(default_factory=list)
    domain_size: int | None = None

    def observed_constants(self) -> list[str]:
        """Constants mentioned by formulas or evidence, in first-occurrence order."""
        seen: dict[str, None] = {}
        for wf in self.formulas:
            for t in terms_of(wf.formula):
                if not is_variable(t):
                    seen.setdefault(t)
        for lit in self.evidence:
            for t in lit.atom.args:
                seen.setdefault(t)
        return list(seen)

    def closed_predicates(self) -> set[str]:
        return {lit.atom.pred for lit in self.evidence}

    def domain(self, size: int | None = None) -> list[str]:
        """Named constants first (declared, then observed), then generated ones."""
        size = self.domain_size if size is None else size
        named = list(dict.fromkeys(self.constants + self.observed_constants()))
        if size is None:
            size = len(named)
        if size < len(named):
            raise MLNError(f"domain size {size} is smaller than the {len(named)} named constants")
        out, k = list(named), 1
        taken = set(named)
        while len(out) < size:
            name = f"O{k}"
            k += 1
            if name not in taken:
                out.append(name)
        return out


# -- parser -----------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<op><=>|=>|!=|[!^&|,()=])|(?P<name>[A-Za-z_][A-Za-z0-9_]*|[0-9][A-Za-z0-9_]*))"
)


@dataclass(frozen=True)
class _Tok:
    kind: str  # "op" | "name" | "end"
    text: str
    col: int


def _tokenize(s: str, line: int, offset: int) -> list[_Tok]:
    out, pos = [], 0
    while pos < len(s):
        if s[pos:].strip() == "":
            break
        m = _TOKEN.match(s, pos)
        if not m or m.end() == pos:
            col = pos + len(s[pos:]) - len(s[pos:].lstrip()) + 1
            raise MLNError(f"unexpected character {s[col - 1]!r}", line, offset + col)
        kind = "op" if m.group("op") else "name"
        start = m.start(kind)
        out.append(_Tok(kind, m.group(kind), offset + start + 1))
        pos = m.end()
    out.append(_Tok("end", "", offset + len(s) + 1))
    return out


class _FormulaParser:
    def __init__(self, toks: list[_Tok], line: int, predicates: dict[str, int]):
        self.toks, self.i, self.line, self.predicates = toks, 0, line, predicates

    def peek(self) -> _Tok:
        return self.toks[self.i]

    def take(self) -> _Tok:
        t = self.toks[self.i]
        self.i += 1
        return t

    def fail(self, msg: str, tok: _Tok | None = None):
        tok = tok or self.peek()
        raise MLNError(msg, self.line, tok.col)

    def expect(self, text: str) -> _Tok:
        t = self.take()
        if t.text != text or t.kind != "op":
            self.fail(f"expected {text!r}, found {t.text or 'end of line'!r}", t)
        return t

    def parse(self) -> Formula:
        f = self.iff()
        if self.peek().kind != "end":
            self.fail(f"unexpected {self.peek().text!r}")
        return f

    def iff(self) -> Formula:
        left = self.implies()
        while self.peek().text == "<=>":
            self.take()
            left = Binary("<=>", left, self.implies())
        return left

    def implies(self) -> Formula:
        left = self.disjunction()
        if self.peek().text == "=>":
            self.take()
            return Binary("=>", left, self.implies())
        return left

    def _is_or(self) -> bool:
        t = self.peek()
        if t.kind == "op":
            return t.text == "|"
        return t.text == "v" and self.toks[self.i + 1].text != "("

    def disjunction(self) -> Formula:
        args = [self.conjunction()]
        while self._is_or():
            self.take()
            args.append(self.conjunction())
        return args[0] if len(args) == 1 else Junction("or", tuple(args))

    def conjunction(self) -> Formula:
        args = [self.unary()]
        while self.peek().kind == "op" and self.peek().text in ("^", "&", ","):
            self.take()
            args.append(self.unary())
        return args[0] if len(args) == 1 else Junction("and", tuple(args))

    def unary(self) -> Formula:
        t = self.peek()
        if t.kind == "op" and t.text == "!":
            self.take()
            return Not(self.unary())
        if t.kind == "op" and t.text == "(":
            self.take()
            f = self.iff()
            self.expect(")")
            return f
        if t.kind != "name":
            self.fail(f"expected a formula, found {t.text or 'end of line'!r}")
        self.take()
        nxt = self.peek()
        if nxt.kind == "op" and nxt.text == "(":
            return self.atom(t)
        if nxt.kind == "op" and nxt.text in ("=", "!="):
            self.take()
            right = self.take()
            if right.kind != "name":
                self.fail("expected a term after comparison", right)
            return Compare(t.text, right.text, nxt.text == "=")
        self.fail(f"{t.text!r} is neither an atom nor a comparison", t)

    def atom(self, name: _Tok) -> Atom:
        if name.text not in self.predicates:
            self.fail(f"unknown predicate {name.text!r}", name)
        self.expect("(")
        args = []
        while True:
            t = self.take()
            if t.kind != "name":
                self.fail("expected a term", t)
            args.append(t.text)
            sep = self.take()
            if sep.text == ")":
                break
            if sep.text != ",":
                self.fail("expected ',' or ')'", sep)
        if len(args) != self.predicates[name.text]:
            self.fail(
                f"predicate {name.text!r} has arity {self.predicates[name.text]}, got {len(args)} arguments", name
            )
        return Atom(name.text, tuple(args))


_WEIGHT = re.compile(r"\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*:?")


def parse_mln(text: str) -> MLNProgram:
    prog = MLNProgram()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = re.split(r"//|#", raw, maxsplit=1)[0].rstrip()
        stripped = line.strip()
        if not stripped:
            continue
        indent = len(line) - len(line.lstrip())
        head, _, rest = stripped.partition(" ")
        if head == "predicate":
            m = re.fullmatch(r"\s*([A-Za-z_][A-Za-z0-9_]*)\s*/\s*(\d+)\s*", rest)
            if not m:
                raise MLNError("expected 'predicate name/arity'", lineno, indent + 1)
            name, arity = m.group(1), int(m.group(2))
            if name in prog.predicates:
                raise MLNError(f"predicate {name!r} declared twice", lineno, indent + 1)
            if arity < 1:
                raise MLNError("arity must be positive", lineno, indent + 1)
            prog.predicates[name] = arity
        elif head == "domain":
            if not rest.strip().isdigit():
                raise MLNError("expected 'domain <size>'", lineno, indent + 1)
            prog.domain_size = int(rest)
        elif head == "constants":
            for c in rest.split():
                if is_variable(c):
                    raise MLNError(f"constant {c!r} must not start with a lowercase letter", lineno, indent + 1)
                if c not in prog.constants:
                    prog.constants.append(c)
        elif head == "evidence":
            offset = indent + len("evidence") + 1
            toks = _tokenize(rest, lineno, offset)
            parser = _FormulaParser(toks, lineno, prog.predicates)
            f = parser.parse()
            positive = True
            if isinstance(f, Not):
                f, positive = f.arg, False
            if not isinstance(f, Atom):
                raise MLNError("evidence must be a single literal", lineno, offset + 1)
            if any(is_variable(t) for t in f.args):
                raise MLNError("evidence atoms must be ground", lineno, offset + 1)
            prog.evidence.append(Literal(f, positive))
        else:
            m = _WEIGHT.match(line)
            if not m:
                raise MLNError("expected a declaration or a weighted formula", lineno, indent + 1)
            weight = float(m.group(1))
            body = line[m.end():]
            toks = _tokenize(body, lineno, m.end())
            formula = _FormulaParser(toks, lineno, prog.predicates).parse()
            variables = tuple(dict.fromkeys(t for t in terms_of(formula) if is_variable(t)))
            in_atoms = {t for a in atoms_of(formula) for t in a.args}
            for v in variables:
                if v not in in_atoms:
                    raise MLNError(f"variable {v!r} occurs only in comparisons", lineno, m.end() + 1)
            prog.formulas.append(WeightedFormula(weight, formula, variables, body.strip()))
    return prog


# -- grounding --------------------------------------------------------------------


@dataclass(frozen=True)
class GroundIndex:
    domain: tuple[str, ...]
    observed: tuple[str, ...]  # D0
    atoms: tuple[tuple[str, tuple[str, ...]], ...]
    groundings: tuple[tuple[int, tuple[str, ...]], ...]  # (formula, substitution values)
    offset: float

    def atom_id(self) -> dict:
        return {a: i for i, a in enumerate(self.atoms)}

    def atom_name(self, i: int) -> str:
        pred, args = self.atoms[i]
        return f"{pred}({','.join(args)})"


def ground(prog: MLNProgram, domain_size: int | None = None) -> tuple[Model, GroundIndex]:
    """Ground and condition on evidence.

    Groundings that are constant after conditioning add their weight to the
    returned offset when true; the rest become features over their one or
    two unobserved atoms with 0/1 tables.  Each formula is one tying cell.
    """
    domain = prog.domain(domain_size)
    order = {c: k for k, c in enumerate(domain)}
    pred_order = {p: k for k, p in enumerate(prog.predicates)}
    closed = prog.closed_predicates()
    true_evidence = {(lit.atom.pred, lit.atom.args) for lit in prog.evidence if lit.positive}
    for lit in prog.evidence:
        for c in lit.atom.args:
            if c not in order:
                raise MLNError(f"evidence constant {c!r} is not in the domain")

    raw: list[tuple[int, tuple[str, ...], tuple, tuple[float, ...]]] = []
    offset = 0.0
    for fi, wf in enumerate(prog.formulas):
        for values in itertools.product(domain, repeat=len(wf.variables)):
            subst = dict(zip(wf.variables, values))
            unknown = []
            for a in atoms_of(wf.formula):
                g = (a.pred, tuple(subst.get(t, t) for t in a.args))
                if g[0] not in closed and g not in unknown:
                    unknown.append(g)

            def table_for(assign: dict) -> bool:
                def truth(pred, args):
                    if pred in closed:
                        return (pred, args) in true_evidence
                    return assign[(pred, args)]

                return evaluate(wf.formula, subst, truth)

            vals = {}
            for bits in itertools.product((0, 1), repeat=len(unknown)):
                vals[bits] = 1.0 if table_for(dict(zip(unknown, bits))) else 0.0
            relevant = [
                k for k in range(len(unknown))
                if any(vals[b] != vals[b[:k] + (1 - b[k],) + b[k + 1:]] for b in vals)
            ]
            if len(relevant) > 2:
                raise MLNError(
                    f"grounding of formula {fi + 1} with {subst} touches {len(relevant)} unobserved atoms; at most 2 are supported"
                )
            if not relevant:
                if vals[next(iter(vals))]:
                    offset += wf.weight
                continue
            atoms = sorted((unknown[k] for k in relevant), key=lambda g: (pred_order[g[0]], [order[c] for c in g[1]]))
            pos = [unknown.index(g) for g in atoms]
            table = []
            for bits in itertools.product((0, 1), repeat=len(atoms)):
                full = [0] * len(unknown)
                for p, b in zip(pos, bits):
                    full[p] = b
                table.append(vals[tuple(full)])
            raw.append((fi, values, tuple(atoms), tuple(table)))

    atom_list = sorted({g for _, _, atoms, _ in raw for g in atoms},
                       key=lambda g: (pred_order[g[0]], [order[c] for c in g[1]]))
    aid = {g: i for i, g in enumerate(atom_list)}
    features, groundings, cells = [], [], {}
    for fi, values, atoms, table in raw:
        cells.setdefault(fi, []).append(len(features))
        features.append(Feature(tuple(aid[g] for g in atoms), table, prog.formulas[fi].weight))
        groundings.append((fi, values))
    model = Model(len(atom_list), tuple(features), tuple(tuple(c) for c in cells.values()))
    observed = tuple(c for c in domain if c in set(prog.observed_constants()))
    index = GroundIndex(tuple(domain), observed, tuple(atom_list), tuple(groundings), offset)
    return model, index


def grounding_to_dict(model: Model, index: GroundIndex, prog: MLNProgram) -> dict:
    return {
        "domain": list(index.domain),
        "observed_constants": list(index.observed),
        "atoms": [index.atom_name(i) for i in range(len(index.atoms))],
        "features": [
            {
                "formula": fi,
                "substitution": dict(zip(prog.formulas[fi].variables, values)),
                "scope": list(f.scope),
                "table": list(f.table),
                "weight": f.weight,
            }
            for f, (fi, values) in zip(model.features, index.groundings)
        ],
        "tying": [list(c) for c in model.tying],
        "offset": index.offset,
    }


def dump_grounding(model: Model, index: GroundIndex, prog: MLNProgram) -> str:
    return json.dumps(grounding_to_dict(model, index, prog), indent=1)


# -- renaming group ---------------------------------------------------------------


def canonical_constants(constants: Sequence[str], fixed: frozenset | set) -> tuple:
    """Replace non-fixed constants by placeholders numbered by first occurrence."""
    names: dict[str, int] = {}
    out = []
    for c in constants:
        if c in fixed:
            out.append(c)
        else:
            out.append(names.setdefault(c, len(names)))
    return tuple(out)


def _atom_key(index: GroundIndex, i: int, fixed) -> tuple:
    pred, args = index.atoms[i]
    return (pred, canonical_constants(args, fixed))


def _pair_key(index: GroundIndex, a: int, b: int, fixed) -> tuple:
    (pa, xa), (pb, xb) = index.atoms[a], index.atoms[b]
    return (pa, len(xa), pb, canonical_constants(xa + xb, fixed))


@dataclass(frozen=True)
class RenamingOrbits:
    variables: OrbitPartition
    features: OrbitPartition


def renaming_orbits(index: GroundIndex, fixed_extra: Sequence[str] = ()) -> RenamingOrbits:
    """Orbits of atoms and ground formulas under permutations of the unobserved constants."""
    fixed = frozenset(index.observed) | frozenset(fixed_extra)
    var = OrbitPartition.from_labels([_atom_key(index, i, fixed) for i in range(len(index.atoms))])
    feat = OrbitPartition.from_labels(
        [(fi, canonical_constants(values, fixed)) for fi, values in index.groundings]
    )
    return RenamingOrbits(var, feat)


def renaming_graph_orbits(model: Model, index: GroundIndex, fixed_extra: Sequence[str] = ()) -> GraphOrbits:
    """Node, edge and arc orbits of the ground model graph under the renaming group."""
    fixed = frozenset(index.observed) | frozenset(fixed_extra)
    n, edges = graph_structure(model)
    nodes = OrbitPartition.from_labels([_atom_key(index, i, fixed) for i in range(n)])
    edge_keys = [min(_pair_key(index, u, v, fixed), _pair_key(index, v, u, fixed), key=repr) for u, v in edges]
    arc_keys = []
    for u, v in edges:
        arc_keys += [_pair_key(index, u, v, fixed), _pair_key(index, v, u, fixed)]
    return GraphOrbits(n, tuple(edges), nodes, OrbitPartition.from_labels(edge_keys), OrbitPartition.from_labels(arc_keys))


def renaming_fixed_node_orbits(model: Model, index: GroundIndex, i: int) -> GraphOrbits:
    """Orbits under renamings that fix atom ``i`` (i.e. fix each of its constants)."""
    if not 0 <= i < len(index.atoms):
        raise IndexError(f"atom {i} out of range")
    return renaming_graph_orbits(model, index, index.atoms[i][1])


def renaming_permutations(index: GroundIndex, limit: int = 6) -> Iterator[tuple[tuple[int, ...], tuple[int, ...]]]:
    """Every renaming as ``(atom permutation, feature permutation)``.

    Only available when at most ``limit`` constants are unobserved.
    """
    free = [c for c in index.domain if c not in set(index.observed)]
    if len(free) > limit:
        raise ValueError(f"{len(free)} unobserved constants exceed the enumeration limit {limit}")
    aid = index.atom_id()
    gid = {g: k for k, g in enumerate(index.groundings)}
    for image in itertools.permutations(free):
        r = dict(zip(free, image))
        rename = lambda cs: tuple(r.get(c, c) for c in cs)  # noqa: E731
        pi = tuple(aid[(p, rename(args))] for p, args in index.atoms)
        gamma = tuple(gid[(fi, rename(values))] for fi, values in index.groundings)
        yield pi, gamma


def load_mln(path) -> MLNProgram:
    with open(path, encoding="utf-8") as fh:
        return parse_mln(fh.read())

