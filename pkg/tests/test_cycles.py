import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from corpus import tied_models
from liftmap.autgroup import fixed_node_orbits, graph_symmetry, trivial_orbits
from liftmap.cycles import (
    CycleCut,
    build_separation,
    cutting_plane_solve,
    eval_cycle_constraint,
    ground_edge_lp_indices,
    min_slack_at,
    separate,
)
from liftmap.instances import clique, frustrated_triangle, random_tied_model, triangle
from liftmap.lift import (
    build_lifted_graph,
    ground_lifted_graph,
    lift_parameters,
    lifted_local_constraints,
    lifting_map,
)
from liftmap.lp import lp_solve
from liftmap.model import all_configurations, graph_structure, to_overcomplete
from liftmap.oracle import brute_separation, exact_map


def lifted_setup(model, symmetric=True):
    if symmetric:
        _, orb = graph_symmetry(model)
        lg = build_lifted_graph(model, orb)
        fixed = lambda i: fixed_node_orbits(model, i)  # noqa: E731
    else:
        lg = ground_lifted_graph(model)
        fixed = lambda i: trivial_orbits(model)  # noqa: E731
    lp = lifted_local_constraints(lg, lift_parameters(to_overcomplete(model), lg))
    return lg, lp, build_separation(model, lg, fixed)


def integral_point(model, lg, x) -> np.ndarray:
    """Orbit average of the ground indicator vector of ``x``."""
    n, edges = graph_structure(model)
    ground = [float(x[v] == t) for v in range(n) for t in (0, 1)]
    for u, v in edges:
        ground += [float((x[u], x[v]) == st) for st in ((0, 0), (0, 1), (1, 0), (1, 1))]
    rho = lifting_map(lg)
    size = len(lg.var_names())
    return np.bincount(rho, weights=ground, minlength=size) / np.bincount(rho, minlength=size)


def pair_marginals(model, lg, tau):
    n, edges = graph_structure(model)
    per_edge = ground_edge_lp_indices(lg)
    return {e: tau[per_edge[g]].reshape(2, 2) for g, e in enumerate(edges)}


def test_frustrated_triangle_needs_one_loop_cut():
    lg, lp, sep = lifted_setup(frustrated_triangle())
    assert len(lg.nodes) == 1 and lg.edges[0].is_loop
    res = cutting_plane_solve(lp, sep)
    assert res.objective_trace == pytest.approx((3.0, 2.0))
    assert res.rounds == 1 and res.stop_reason == "no-violated-cut"
    cut = res.cuts[0]
    # three nocut steps around the loop: all three edges agree on the fractional point
    assert cut.walk == (0, 0, 0) and cut.f_positions == (0, 1, 2)
    assert res.objective == pytest.approx(exact_map(frustrated_triangle())[0])


def test_ground_frustrated_triangle():
    _, lp, sep = lifted_setup(frustrated_triangle(), symmetric=False)
    res = cutting_plane_solve(lp, sep)
    assert res.objective == pytest.approx(2.0)


def test_cut_requires_odd_f():
    with pytest.raises(ValueError, match="odd"):
        CycleCut(0, (1, 2), (True, True), np.zeros(3))
    with pytest.raises(ValueError):
        CycleCut(0, (1, 2), (True,), np.zeros(3))


def test_cut_key_ignores_rotation_and_reflection():
    row = np.zeros(1)
    a = CycleCut(0, (1, 2, 3), (True, False, False), row)
    b = CycleCut(0, (2, 3, 1), (False, False, True), row)
    c = CycleCut(0, (3, 2, 1), (False, False, True), row)
    d = CycleCut(0, (1, 2, 3), (False, True, False), row)
    assert a.key() == b.key() == c.key() != d.key()
    assert a.f_positions == (0,)


@pytest.mark.parametrize("model", tied_models(20, 3, 8), ids=lambda m: f"n{m.num_vars}")
def test_no_cut_separates_an_integral_point(model):
    lg, lp, sep = lifted_setup(model)
    for x in all_configurations(model.num_vars):
        p = integral_point(model, lg, x)
        assert lp.max_violation(p) <= 1e-9
        for k in range(len(sep.mirrors)):
            s = min_slack_at(sep, k, p)
            assert s is None or s >= -1e-9, (x, k, s)
    res = cutting_plane_solve(lp, sep)
    assert res.status == "optimal" and all(rec.slack < 0 for rec in res.cuts)
    found = separate(sep, res.point)
    assert found is None or found[1] >= -1e-7


@given(st.integers(0, 2**32 - 1), st.booleans())
def test_separation_matches_enumeration(seed, symmetric):
    rng = np.random.default_rng(seed)
    model = random_tied_model(rng, int(rng.integers(3, 7)))
    lg, lp, sep = lifted_setup(model, symmetric)
    tau = lp_solve(lp).point if rng.random() < 0.5 else rng.random(lp.num_vars)
    slacks = [s for s in (min_slack_at(sep, k, tau) for k in range(len(sep.mirrors))) if s is not None]
    n = model.num_vars
    brute = brute_separation(n, pair_marginals(model, lg, tau), 2 * n - 1, max_len_limit=12)
    if brute is None:
        assert not slacks
        return
    assert min(slacks) == pytest.approx(brute.slack, abs=1e-9)
    found = separate(sep, tau)
    if brute.slack < -1e-9:
        assert found is not None and found[1] == pytest.approx(brute.slack, abs=1e-9)
        assert eval_cycle_constraint(found[0], tau) == pytest.approx(found[1], abs=1e-9)
    else:
        assert found is None


@pytest.mark.parametrize("model", tied_models(20, 3, 10, seed=99), ids=lambda m: f"n{m.num_vars}")
def test_lifted_and_ground_cutting_planes_agree(model):
    _, lp, sep = lifted_setup(model)
    _, glp, gsep = lifted_setup(model, symmetric=False)
    a, b = cutting_plane_solve(lp, sep), cutting_plane_solve(glp, gsep)
    assert a.objective == pytest.approx(b.objective, abs=1e-5)
    assert np.all(np.diff(a.objective_trace) <= 1e-9)
    assert a.rounds <= 500 and b.rounds <= 500
    assert exact_map(model)[0] <= a.objective + 1e-6 <= a.objective_trace[0] + 2e-6


def test_max_rounds_stops_early():
    _, lp, sep = lifted_setup(frustrated_triangle())
    res = cutting_plane_solve(lp, sep, max_rounds=0)
    assert res.stop_reason == "max-rounds" and res.objective == pytest.approx(3.0)


def test_clique_cycle_relaxation():
    model = clique(5, pair_weight=-1.0, unary_weight=0.0)
    _, lp, sep = lifted_setup(model)
    res = cutting_plane_solve(lp, sep)
    # an anti-ferromagnetic clique: the best cut of K5 splits 2/3, cutting 6 of 10 edges
    assert exact_map(model)[0] == -4.0
    assert res.objective <= lp_solve(lp).objective + 1e-9
    assert res.objective >= -4.0 - 1e-6


def test_weights_are_clamped(caplog):
    lg, lp, sep = lifted_setup(triangle())
    tau = np.full(lp.num_vars, -0.1)
    nocut, cut = sep.mirrors[0].weights(tau)
    assert np.all(nocut >= 0) and np.all(cut >= 0)
    assert "clamped" in caplog.text


def test_ground_edge_indices_cover_edges():
    lg, lp, _ = lifted_setup(triangle())
    idx = ground_edge_lp_indices(lg)
    assert idx.shape == (3, 4)
    names = lg.var_names()
    assert [names[i] for i in idx[2]] == ["e1_00", "e1_01", "e1_01", "e1_11"]
    assert set(itertools.chain.from_iterable(idx)) <= set(range(len(names)))
