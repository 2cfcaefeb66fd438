import numpy as np
import pytest

from liftmap.autgroup import graph_symmetry
from liftmap.instances import SEMI_TRANSITIVE_MLN
from liftmap.mln import (
    Atom,
    Compare,
    MLNError,
    canonical_constants,
    dump_grounding,
    evaluate,
    ground,
    parse_mln,
    renaming_fixed_node_orbits,
    renaming_graph_orbits,
    renaming_orbits,
    renaming_permutations,
)
from liftmap.model import all_configurations, score

ST = parse_mln(SEMI_TRANSITIVE_MLN)


def test_parse_semi_transitive():
    assert ST.predicates == {"pred": 2, "obs": 2}
    assert [wf.weight for wf in ST.formulas] == [-100.0, 0.1]
    assert ST.formulas[0].variables == ("x", "y", "z")
    assert ST.evidence[0].atom == Atom("obs", ("A", "B")) and ST.evidence[0].positive
    assert ST.observed_constants() == ["A", "B"]
    assert ST.closed_predicates() == {"obs"}


def test_domain_names():
    assert ST.domain(5) == ["A", "B", "O1", "O2", "O3"]
    prog = parse_mln("predicate p/1\nconstants O1 C\n1 p(x)\n")
    assert prog.domain(4) == ["O1", "C", "O2", "O3"]
    with pytest.raises(MLNError, match="smaller"):
        ST.domain(1)


@pytest.mark.parametrize("d", [3, 4, 5, 6])
def test_ground_counts(d):
    model, index = ground(ST, d)
    distinct_triples = d * (d - 1) * (d - 2)
    # every ordered pair of distinct constants is a query atom; pred(x, x) never occurs
    assert model.num_vars == d * (d - 1)
    assert model.num_features == distinct_triples + 1
    assert model.tying == (tuple(range(distinct_triples)), (distinct_triples,))
    # groundings with a false guard are constant true, as are obs(x, y) => pred(x, y) with obs false
    assert index.offset == pytest.approx(-100.0 * (d**3 - distinct_triples) + 0.1 * (d * d - 1))
    assert index.observed == ("A", "B")
    f = model.features[0]
    assert f.table == (1.0, 0.0, 0.0, 1.0) and f.weight == -100.0
    unary = model.features[-1]
    assert index.atom_name(unary.scope[0]) == "pred(A,B)" and unary.table == (0.0, 1.0)


def test_grounding_preserves_scores():
    model, index = ground(ST, 3)
    aid = index.atom_id()
    for x in all_configurations(model.num_vars):
        truth = {index.atoms[i]: bool(v) for i, v in enumerate(x)}
        total = 0.0
        for wf in ST.formulas:
            for a in ("A", "B", "O1"):
                for b in ("A", "B", "O1"):
                    for c in ("A", "B", "O1"):
                        subst = dict(zip(wf.variables, (a, b, c)))
                        if len(wf.variables) == 2 and c != "A":
                            continue

                        def lookup(pred, args):
                            if pred == "obs":
                                return (pred, args) == ("obs", ("A", "B"))
                            return truth.get((pred, args), False)

                        total += wf.weight * evaluate(wf.formula, subst, lookup)
        assert score(model, x) + index.offset == pytest.approx(total)
    assert len(aid) == model.num_vars


def test_evaluate_and_precedence():
    prog = parse_mln("predicate p/1\npredicate q/1\n1 p(x) v q(x) ^ !p(x) => q(x)\n")
    f = prog.formulas[0].formula
    # parsed as (p v (q ^ !p)) => q
    cases = {(False, False): True, (True, False): False, (False, True): True, (True, True): True}
    for (p, q), want in cases.items():
        truth = lambda pred, args: {"p": p, "q": q}[pred]  # noqa: E731
        assert evaluate(f, {"x": "C"}, truth) == want
    assert evaluate(Compare("x", "y", False), {"x": "A", "y": "B"}, None)
    iff = parse_mln("predicate p/1\n1 p(x) <=> p(y) => p(x)\n").formulas[0].formula
    assert iff.op == "<=>"


def test_closed_world_evidence():
    prog = parse_mln("predicate e/2\npredicate s/1\nconstants A B\n1 e(x,y) ^ s(x) => s(y)\nevidence e(A,B)\n")
    model, index = ground(prog, 2)
    names = [index.atom_name(i) for i in range(model.num_vars)]
    assert names == ["s(A)", "s(B)"]
    assert model.num_features == 1 and model.features[0].table == (1.0, 1.0, 0.0, 1.0)
    assert index.offset == 3.0


def test_negative_evidence():
    prog = parse_mln("predicate e/1\npredicate s/1\n1 e(x) => s(x)\nevidence !e(A)\nevidence e(B)\n")
    model, index = ground(prog, 2)
    assert [index.atom_name(i) for i in range(model.num_vars)] == ["s(B)"]
    assert index.offset == 1.0


def test_too_many_atoms():
    prog = parse_mln("predicate p/1\n1 p(x) ^ p(y) ^ p(z)\n")
    with pytest.raises(MLNError, match="at most 2"):
        ground(prog, 3)


@pytest.mark.parametrize(
    "text, line, column, message",
    [
        ("predicate p/1\n1 q(x)\n", 2, 3, "unknown predicate"),
        ("predicate p/1\n1 p(x, y)\n", 2, 3, "arity"),
        ("predicate p/1\npredicate p/2\n", 2, 1, "twice"),
        ("predicate p/1\n1 p(x) ^\n", 2, 9, "expected a formula"),
        ("predicate p/1\n1 p(x) ^ x != y\n", 2, 3, "only in comparisons"),
        ("predicate p/1\nevidence p(x)\n", 2, 10, "ground"),
        ("predicate p/1\n1 p(x) $\n", 2, 8, "unexpected character"),
        ("predicate p\n", 1, 1, "predicate name/arity"),
        ("predicate p/1\nhello\n", 2, 1, "weighted formula"),
        ("predicate p/1\n  1 (p(x)\n", 2, 10, r"expected '\)'"),
    ],
)
def test_parse_errors(text, line, column, message):
    with pytest.raises(MLNError, match=message) as info:
        parse_mln(text)
    assert (info.value.line, info.value.column) == (line, column)


def test_comments_and_blank_lines():
    prog = parse_mln("// header\npredicate p/1  # unary\n\n0.5: p(x) // trailing\n")
    assert len(prog.formulas) == 1 and prog.formulas[0].text == "p(x)"


def test_canonical_constants():
    assert canonical_constants(("A", "O3", "O1", "O3"), {"A"}) == ("A", 0, 1, 0)


@pytest.mark.parametrize("d", [4, 5, 6, 8])
def test_renaming_orbit_counts(d):
    model, index = ground(ST, d)
    orb = renaming_graph_orbits(model, index)
    # atom classes: (A,B) (B,A) (A,O) (O,A) (B,O) (O,B) (O,O')
    assert len(orb.nodes) == 7
    # edges come from distinct triples (x, y, z); patterns placing A and B among the
    # three positions: 1 + 3 + 3 + 6 = 13, minus the all-O pattern when only two O's exist
    edges = 13 if d >= 5 else 12
    assert (len(orb.edge_orbits), len(orb.arc_orbits)) == (edges, 2 * edges)
    # formula orbits: distinct-constant triples up to renaming, plus the single obs grounding
    assert len(renaming_orbits(index).features) == 1 + len(
        {canonical_constants(v, {"A", "B"}) for fi, v in index.groundings if fi == 0}
    )


def test_renaming_refines_graph_orbits():
    model, index = ground(ST, 5)
    ren = renaming_graph_orbits(model, index)
    _, graph = graph_symmetry(model)
    assert ren.nodes.refines(graph.nodes)
    assert ren.edge_orbits.refines(graph.edge_orbits)
    assert ren.arc_orbits.refines(graph.arc_orbits)


def test_renamings_are_automorphisms():
    model, index = ground(ST, 4)
    perms = list(renaming_permutations(index))
    assert len(perms) == 2  # O1 <-> O2
    configs = np.array(list(all_configurations(model.num_vars)))[::37]
    for pi, gamma in perms:
        for x in configs:
            y = [0] * model.num_vars
            for v, xv in enumerate(x):
                y[pi[v]] = xv
            assert np.array_equal(model.feature_vector(y)[list(gamma)], model.feature_vector(x))
    with pytest.raises(ValueError, match="limit"):
        list(renaming_permutations(ground(ST, 9)[1]))


def test_renaming_orbits_are_unions_of_generated_orbits():
    model, index = ground(ST, 5)
    orb = renaming_graph_orbits(model, index)
    perms = list(renaming_permutations(index))
    for pi, _ in perms:
        assert all(orb.nodes.rep[pi[v]] == orb.nodes.rep[v] for v in range(model.num_vars))
    reached = {v: {pi[v] for pi, _ in perms} for v in range(model.num_vars)}
    assert {frozenset(c) for c in orb.nodes.cells} == {frozenset(s) for s in reached.values()}


def test_fixing_an_atom_fixes_its_constants():
    model, index = ground(ST, 5)
    i = index.atom_id()[("pred", ("O1", "O2"))]
    orb = renaming_fixed_node_orbits(model, index, i)
    assert (i,) in orb.nodes.cells
    cell = next(c for c in orb.nodes.cells if index.atom_id()[("pred", ("O1", "O3"))] in c)
    assert {index.atom_name(v) for v in cell} == {"pred(O1,O3)"}
    with pytest.raises(IndexError):
        renaming_fixed_node_orbits(model, index, model.num_vars)


def test_dump_grounding_is_json():
    import json

    model, index = ground(ST, 3)
    data = json.loads(dump_grounding(model, index, ST))
    assert data["atoms"][0] == "pred(A,B)" and data["offset"] == pytest.approx(index.offset)
    assert data["features"][0]["substitution"] == {"x": "A", "y": "B", "z": "O1"}
