import numpy as np
import pytest

from corpus import full_corpus, tied_models, trees
from liftmap.autgroup import graph_symmetry
from liftmap.instances import frustrated_triangle, triangle
from liftmap.lift import build_lifted_graph, ground_lifted_graph, lift_parameters, lifted_local_constraints
from liftmap.lp import lp_solve
from liftmap.model import Feature, Model, score, to_overcomplete
from liftmap.mplp import edge_tables, lifted_score, mplp_solve
from liftmap.oracle import exact_map


def setups(model):
    theta = to_overcomplete(model)
    _, orb = graph_symmetry(model)
    for lg in (build_lifted_graph(model, orb), ground_lifted_graph(model)):
        yield lg, lift_parameters(theta, lg)


@pytest.mark.parametrize("model", full_corpus(), ids=lambda m: f"n{m.num_vars}f{m.num_features}")
def test_dual_is_monotone_and_matches_lp(model):
    for lg, params in setups(model):
        res = mplp_solve(lg, params)
        lp_opt = lp_solve(lifted_local_constraints(lg, params)).objective
        assert np.all(np.diff(res.dual_trace) <= 1e-9)
        # the dual bounds the LP from above and reaches it
        assert res.dual >= lp_opt - 1e-7
        assert res.dual - lp_opt <= 1e-4
        assert res.decoded_score == pytest.approx(score(model, res.config), abs=1e-9)
        assert res.decoded_score <= res.primal_bound + 1e-9 <= res.dual + 2e-9


@pytest.mark.parametrize("model", trees(), ids=lambda m: f"n{m.num_vars}")
def test_exact_on_trees(model):
    value, _ = exact_map(model)
    for lg, params in setups(model):
        res = mplp_solve(lg, params)
        assert res.dual == pytest.approx(value, abs=1e-6)


def test_smoothed_phase_recovers_from_a_stall():
    model = tied_models()[44]
    _, orb = graph_symmetry(model)
    lg = build_lifted_graph(model, orb)
    params = lift_parameters(to_overcomplete(model), lg)
    lp_opt = lp_solve(lifted_local_constraints(lg, params)).objective
    plain = mplp_solve(lg, params, smooth=False)
    # plain coordinate descent stops at a non-optimal fixed point here
    assert plain.dual - lp_opt > 0.4
    assert np.all(np.diff(plain.dual_trace) <= 1e-9)
    res = mplp_solve(lg, params)
    assert res.stalled_dual == pytest.approx(plain.dual)
    assert res.smoothing_sweeps > 0
    assert res.dual == pytest.approx(lp_opt, abs=1e-6)
    assert res.primal_bound <= lp_opt + 1e-9
    assert np.all(np.diff(res.dual_trace) <= 1e-9)


def test_certified_runs_skip_smoothing():
    model = trees()[0]
    g = ground_lifted_graph(model)
    res = mplp_solve(g, lift_parameters(to_overcomplete(model), g))
    assert res.smoothing_sweeps == 0 and res.stalled_dual is None
    assert res.primal_bound == pytest.approx(res.dual, abs=1e-7)


def test_merged_loop_table_is_split():
    model = frustrated_triangle(1.0)
    _, orb = graph_symmetry(model)
    lg = build_lifted_graph(model, orb)
    params = lift_parameters(to_overcomplete(model), lg)
    (t,) = edge_tables(lg, params)
    assert t.tolist() == [[0.0, 3.0], [3.0, 0.0]]
    res = mplp_solve(lg, params)
    # the merged loop reaches the LOCAL optimum 3, which no integral point attains
    assert res.dual == pytest.approx(3.0, abs=1e-6)


def test_lifted_score_of_constant_states():
    model = triangle()
    _, orb = graph_symmetry(model)
    lg = build_lifted_graph(model, orb)
    params = lift_parameters(to_overcomplete(model), lg)
    for states in ((0, 0), (0, 1), (1, 0), (1, 1)):
        x = [states[orb.nodes.rep[v]] for v in range(3)]
        assert lifted_score(lg, params, states) == pytest.approx(score(model, x))


def test_edgeless_model():
    model = Model(2, (Feature((0,), (0, 1), 1.0), Feature((1,), (0, 1), -1.0)))
    lg = ground_lifted_graph(model)
    res = mplp_solve(lg, lift_parameters(to_overcomplete(model), lg))
    assert res.converged and res.dual == 1.0 and res.config == (1, 0)
