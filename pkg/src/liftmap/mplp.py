"""MPLP: block-coordinate descent on the dual of the (lifted) LOCAL LP.

Each edge orbit ``k`` is a 2x2 table over ``(state of slot 0, state of
slot 1)`` whose slots attach to the node orbits ``ends``.  Messages
``lam[k][slot]`` are indexed by edge orbit and slot, so parallel edges and
self-loops are unambiguous.  The dual objective is

    sum_p max_t belief_p(t) + sum_k max_{s,t} [T_k(s,t) - lam_k0(s) - lam_k1(t)]

with ``belief_p = theta_p + sum of incoming messages``.  A merged-arc
self-loop carries one variable for both mixed states; splitting its weight
evenly over the two mixed table entries gives the same LP because the
consistency constraints force both mixed entries to be equal.

Plain max-based coordinate descent can stall above the LP optimum.  When
the decoded configuration does not certify optimality, a second phase runs
the same slot-wise block updates on the entropy-smoothed dual (max replaced
by ``T * logsumexp(./T)``) for a decreasing temperature schedule; the
smoothed dual is differentiable, so coordinate descent cannot stall there,
and its minimizer is within ``T * log(4) * blocks`` of the LP optimum.  The
reported trace only records improvements of the true dual.  The phase stops
once a LOCAL-feasible point built from the smoothed node beliefs certifies
the dual value, or when the schedule ends.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lift import LiftedGraph, LiftedParams


@dataclass(frozen=True)
class MPLPResult:
    dual_trace: tuple[float, ...]
    node_states: tuple[int, ...]  # per node orbit
    config: tuple[int, ...]  # ground configuration
    decoded_score: float
    iterations: int
    converged: bool
    smoothing_sweeps: int = 0  # sweeps spent in the smoothed phase (0 if not needed)
    stalled_dual: float | None = None  # plain-MPLP fixed point when the smoothed phase ran
    primal_bound: float | None = None  # value of a LOCAL-feasible point, a lower bound on the LP

    @property
    def dual(self) -> float:
        return self.dual_trace[-1]


def edge_tables(lg: LiftedGraph, params: LiftedParams) -> list[np.ndarray]:
    tables = []
    for k, e in enumerate(lg.edges):
        t = np.empty((2, 2))
        t[0, 0], t[1, 1] = params.edge_same[(k, 0)], params.edge_same[(k, 1)]
        if e.arc_merged:
            t[0, 1] = t[1, 0] = params.arc[e.arc_uv] / 2.0
        else:
            t[0, 1], t[1, 0] = params.arc[e.arc_uv], params.arc[e.arc_vu]
        tables.append(t)
    return tables


class _Dual:
    def __init__(self, lg: LiftedGraph, params: LiftedParams):
        self.ends = [e.ends for e in lg.edges]
        self.tables = edge_tables(lg, params)
        self.theta = np.array([[params.node[(p, 0)], params.node[(p, 1)]] for p in range(len(lg.nodes))])
        self.lam = np.zeros((len(lg.edges), 2, 2))
        self.belief = self.theta.copy()

    def value(self) -> float:
        total = float(self.belief.max(axis=1).sum())
        for k, t in enumerate(self.tables):
            total += float((t - self.lam[k, 0][:, None] - self.lam[k, 1][None, :]).max())
        return total

    def update(self, k: int) -> None:
        pu, pv = self.ends[k]
        t, lam, bel = self.tables[k], self.lam[k], self.belief
        if pu != pv:
            a = bel[pu] - lam[0]
            b = bel[pv] - lam[1]
            new0 = 0.5 * (t + b[None, :]).max(axis=1) - 0.5 * a
            new1 = 0.5 * (t + a[:, None]).max(axis=0) - 0.5 * b
            bel[pu] = a + new0
            bel[pv] = b + new1
            lam[0], lam[1] = new0, new1
            return
        # self-loop: both slots feed the same node.  With d = lam0 + lam1 the
        # edge term is max(T00 - d0, T11 - d1, (T01 + T10 - d0 - d1) / 2) once
        # lam0(1) - lam0(0) balances the two mixed entries, so the block is
        # minimized exactly by handing the node its max-marginals.
        rest = bel[pu] - lam[0] - lam[1]
        mixed = 0.5 * (rest[0] + rest[1] + t[0, 1] + t[1, 0])
        marg = np.array([max(rest[0] + t[0, 0], mixed), max(rest[1] + t[1, 1], mixed)])
        d = marg - rest
        delta = 0.5 * ((t[1, 0] - d[0]) - (t[0, 1] - d[1]))
        lam[0] = np.array([0.0, delta])
        lam[1] = d - lam[0]
        bel[pu] = marg


def _lse(x: np.ndarray, temp: float, axis=None) -> np.ndarray:
    top = x.max(axis=axis, keepdims=True)
    out = top + temp * np.log(np.exp((x - top) / temp).sum(axis=axis, keepdims=True))
    return out.squeeze() if axis is None else out.squeeze(axis=axis)


def _soft_sweep(dual: _Dual, temp: float) -> None:
    """Exact single-slot minimization of the smoothed dual, for every slot."""
    for k, (pu, pv) in enumerate(dual.ends):
        t, lam, bel = dual.tables[k], dual.lam[k], dual.belief
        for slot, node in ((0, pu), (1, pv)):
            rest = bel[node] - lam[slot]
            if slot == 0:
                best = _lse(t - lam[1][None, :], temp, axis=1)
            else:
                best = _lse(t - lam[0][:, None], temp, axis=0)
            lam[slot] = 0.5 * (best - rest)
            bel[node] = rest + lam[slot]


def _soft_value(dual: _Dual, temp: float) -> float:
    total = sum(float(_lse(b, temp)) for b in dual.belief)
    for k, t in enumerate(dual.tables):
        total += float(_lse(t - dual.lam[k, 0][:, None] - dual.lam[k, 1][None, :], temp))
    return total


def _feasible_value(dual: _Dual, nu: np.ndarray) -> float:
    """Best LOCAL objective with node marginals ``nu``: each edge table is a
    2x2 transport plan with one free entry, optimized at an endpoint."""
    total = float((dual.theta * nu).sum())
    for (pu, pv), t in zip(dual.ends, dual.tables):
        a0, b0 = nu[pu, 0], nu[pv, 0]
        best = -np.inf
        for t00 in (max(0.0, a0 + b0 - 1.0), min(a0, b0)):
            plan = np.array([[t00, a0 - t00], [b0 - t00, 1.0 - a0 - b0 + t00]])
            best = max(best, float((t * plan).sum()))
        total += best
    return total


def _soft_marginals(dual: _Dual, temp: float) -> np.ndarray:
    z = (dual.belief - dual.belief.max(axis=1, keepdims=True)) / temp
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _decode(dual: _Dual) -> tuple[int, ...]:
    return tuple(int(b[1] > b[0]) for b in dual.belief)


def lifted_score(lg: LiftedGraph, params: LiftedParams, states) -> float:
    """Objective of the orbit-constant configuration given by node-orbit states."""
    total = sum(params.node[(p, s)] for p, s in enumerate(states))
    for t, e in zip(edge_tables(lg, params), lg.edges):
        total += t[states[e.ends[0]], states[e.ends[1]]]
    return float(total)


def mplp_solve(
    lg: LiftedGraph,
    params: LiftedParams,
    max_iters: int = 5000,
    tol: float = 1e-10,
    smooth: bool = True,
    gap_tol: float = 1e-7,
    max_sweeps: int = 2000,
) -> MPLPResult:
    """Sweep edge orbits in id order until a sweep lowers the dual by less than ``tol``.

    With ``smooth`` the annealed smoothed phase runs whenever the decoded
    configuration leaves a duality gap above ``gap_tol``, and stops once the
    gap to a LOCAL-feasible point is below ``gap_tol`` times the parameter scale.
    """
    dual = _Dual(lg, params)
    trace = [dual.value()]
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        for k in range(len(lg.edges)):
            dual.update(k)
        trace.append(dual.value())
        if trace[-2] - trace[-1] <= tol:
            converged = True
            break
    if not lg.edges:
        it, converged = 1, True
        trace.append(trace[-1])
    states = _decode(dual)
    primal = lifted_score(lg, params, states)
    bound = primal
    sweeps, stalled = 0, None
    if smooth and lg.edges and trace[-1] - bound > gap_tol:
        stalled = trace[-1]
        scale = 1.0 + max(abs(v) for v in (*params.node.values(), *params.edge_same.values(), *params.arc.values()))
        best = trace[-1]
        keep = (dual.lam.copy(), dual.belief.copy())
        temp = 0.1 * scale
        while temp > 1e-8 * scale and best - bound > gap_tol * scale:
            prev = np.inf
            for _ in range(max_sweeps):
                _soft_sweep(dual, temp)
                sweeps += 1
                value = dual.value()
                if value < best - tol:
                    best = value
                    keep = (dual.lam.copy(), dual.belief.copy())
                    trace.append(value)
                    cand = _decode(dual)
                    cand_score = lifted_score(lg, params, cand)
                    if cand_score > primal:
                        primal, states = cand_score, cand
                bound = max(bound, primal, _feasible_value(dual, _soft_marginals(dual, temp)))
                if best - bound <= gap_tol * scale:
                    break
                smoothed = _soft_value(dual, temp)
                if prev - smoothed < 1e-4 * temp:
                    break
                prev = smoothed
            temp *= 0.3
        dual.lam, dual.belief = keep
        cand = _decode(dual)
        if lifted_score(lg, params, cand) > primal:
            primal, states = lifted_score(lg, params, cand), cand
    config = tuple(states[p] for p in lg.orbits.nodes.rep)
    return MPLPResult(
        tuple(trace), states, config, primal, it, converged, sweeps, stalled, bound
    )
