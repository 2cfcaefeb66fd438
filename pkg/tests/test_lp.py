import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import linprog

from liftmap.instances import frustrated_triangle
from liftmap.lift import LinearProgram, ground_local_lp
from liftmap.lp import Simplex, implied_upper_bounds, lp_solve

SCIPY_STATUS = {0: "optimal", 2: "infeasible", 3: "unbounded"}


def random_lp(rng) -> LinearProgram:
    nv = int(rng.integers(1, 8))
    me, mu = int(rng.integers(0, 4)), int(rng.integers(0, 5))
    A_eq = rng.integers(-2, 3, (me, nv)).astype(float)
    x0 = rng.random(nv)
    b_eq = A_eq @ x0 if rng.random() < 0.8 else rng.random(me)
    A_ub = rng.integers(-2, 3, (mu, nv)).astype(float)
    b_ub = A_ub @ x0 + rng.random(mu) * rng.integers(0, 2)
    upper = np.where(rng.random(nv) < 0.7, 1.0, np.inf)
    lower = np.where(rng.random(nv) < 0.8, 0.0, -rng.random(nv))
    return LinearProgram([f"v{i}" for i in range(nv)], rng.normal(size=nv), A_eq, b_eq, A_ub, b_ub, lower, upper)


def reference(lp: LinearProgram):
    res = linprog(
        -lp.c,
        A_ub=lp.A_ub if len(lp.b_ub) else None,
        b_ub=lp.b_ub if len(lp.b_ub) else None,
        A_eq=lp.A_eq if len(lp.b_eq) else None,
        b_eq=lp.b_eq if len(lp.b_eq) else None,
        bounds=[(lo, None if np.isinf(hi) else hi) for lo, hi in zip(lp.lower, lp.upper)],
        method="highs",
    )
    return SCIPY_STATUS[res.status], (-res.fun if res.status == 0 else None)


@given(st.integers(0, 2**32 - 1))
def test_matches_reference_solver(seed):
    lp = random_lp(np.random.default_rng(seed))
    sol = lp_solve(lp)
    status, value = reference(lp)
    assert sol.status == status
    if status == "optimal":
        assert sol.objective == pytest.approx(value, abs=1e-7)
        assert lp.max_violation(sol.point) <= 1e-8
        assert lp.objective(sol.point) == pytest.approx(sol.objective, abs=1e-9)


@given(st.integers(0, 2**32 - 1))
def test_warm_started_rows_match_cold_solve(seed):
    rng = np.random.default_rng(seed)
    lp = random_lp(rng)
    solver = Simplex(lp)
    if not solver.solve().optimal:
        return
    current = lp
    for _ in range(3):
        row = rng.integers(-2, 3, lp.num_vars).astype(float)
        rhs = float(rng.normal())
        warm = solver.add_constraint(row, rhs)
        current = current.with_inequality(row, rhs, "<=")
        cold = lp_solve(current)
        assert warm.status == cold.status
        if not warm.optimal:
            return
        assert warm.objective == pytest.approx(cold.objective, abs=1e-7)
        assert current.max_violation(warm.point) <= 1e-8


def test_small_known_lps():
    # maximize x + y s.t. x + 2y <= 4, 3x + y <= 6, 0 <= x, y
    lp = LinearProgram(("x", "y"), [1, 1], np.zeros((0, 2)), [], [[1, 2], [3, 1]], [4, 6], None, [np.inf, np.inf])
    sol = lp_solve(lp)
    assert sol.optimal and sol.objective == pytest.approx(2.8)
    assert sol.point == pytest.approx([1.6, 1.2])
    infeasible = LinearProgram(("x",), [1], [[1]], [2])  # x = 2 with x <= 1
    assert lp_solve(infeasible).status == "infeasible"
    unbounded = LinearProgram(("x", "y"), [1, 0], [[1, -1]], [0], None, None, None, [np.inf, np.inf])
    assert lp_solve(unbounded).status == "unbounded"


def test_redundant_equalities():
    lp = LinearProgram(("x", "y"), [1, 2], [[1, 1], [2, 2], [1, 1]], [1, 2, 1])
    sol = lp_solve(lp)
    assert sol.optimal and sol.objective == pytest.approx(2.0)


def test_iteration_limit():
    lp = ground_local_lp(frustrated_triangle())
    assert lp_solve(lp, max_iters=1).status == "iteration-limit"


def test_implied_bounds_ignore_explicit_upper_bounds():
    lp = LinearProgram(("a", "b", "c"), [0, 0, 0], [[1, 1, 0]], [1], None, None, None, [0.5, 1, 1])
    up = implied_upper_bounds(lp)
    assert up[0] == 1.0 and up[1] == 1.0 and np.isinf(up[2])


def test_add_constraint_needs_optimal_basis():
    solver = Simplex(LinearProgram(("x",), [1], [[1]], [2]))
    solver.solve()
    with pytest.raises(RuntimeError):
        solver.add_constraint([1.0], 0.0)
    with pytest.raises(ValueError):
        Simplex(LinearProgram(("x",), [1], np.zeros((0, 1)), [], lower=[-np.inf]))


def test_cutting_local_to_integral_point():
    lp = ground_local_lp(frustrated_triangle())
    solver = Simplex(lp)
    assert solver.solve().objective == pytest.approx(3.0)
    idx = lp.index()
    row = np.zeros(lp.num_vars)
    for u, v in ((0, 1), (0, 2), (1, 2)):
        row[idx[f"x{u}_{v}_01"]] = row[idx[f"x{u}_{v}_10"]] = 1.0
    # at most two of the three edges of a triangle can disagree
    sol = solver.add_constraint(row, 2.0)
    assert sol.optimal and sol.objective == pytest.approx(2.0)


def test_deterministic():
    lp = ground_local_lp(frustrated_triangle())
    a, b = lp_solve(lp), lp_solve(lp)
    assert np.array_equal(a.point, b.point) and a.iterations == b.iterations
