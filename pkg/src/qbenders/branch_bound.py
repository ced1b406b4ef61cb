"""Best-first branch-and-bound MILP solver over the simplex core.

Serves as the exact reference path: direct solves of the original model and
the exact master-problem backend of the decomposition engine.  Branching is
on the most fractional integer variable (ties by lowest index); node LPs are
solved cold (no warm starts) with bounds tightened per branch.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass

import numpy as np

from .model import StandardMilp, lp_relaxation, fix_integers
from .simplex import solve_lp, OPTIMAL, INFEASIBLE, UNBOUNDED

INT_TOL = 1e-6


@dataclass
class MipOutcome:
    status: str                 # optimal | infeasible | unbounded | node_limit
    x: np.ndarray = None
    y: np.ndarray = None
    objective: float = None
    bound: float = None         # best LP bound (<= objective for minimization)
    gap: float = None
    nodes: int = 0
    wall_time: float = 0.0


def _rel_gap(ub, lb):
    if ub is None or lb is None or math.isinf(ub) or math.isinf(lb):
        return math.inf
    return (ub - lb) / max(1e-9, abs(ub))


def branch_and_bound(m: StandardMilp, gap_tol: float = 1e-6,
                     node_limit: int = 200_000, int_tol: float = INT_TOL) -> MipOutcome:
    """Solve the MILP to within gap_tol relative optimality."""
    t0 = time.perf_counter()
    base = lp_relaxation(m)
    nc, ni = m.n_cont, m.n_int

    root = solve_lp(base, validate=False)
    nodes = 1
    if root.status == INFEASIBLE:
        return MipOutcome(status="infeasible", nodes=nodes, wall_time=time.perf_counter() - t0)
    if root.status == UNBOUNDED:
        return MipOutcome(status="unbounded", nodes=nodes, wall_time=time.perf_counter() - t0)
    if ni == 0:
        return MipOutcome(status="optimal", x=root.x[:nc], y=np.zeros(0),
                          objective=root.objective, bound=root.objective, gap=0.0,
                          nodes=nodes, wall_time=time.perf_counter() - t0)

    incumbent = None
    ub = math.inf
    seq = 0
    # heap of (lp bound, tiebreak, y lower bounds, y upper bounds)
    heap = [(root.objective, seq, np.zeros(ni), m.int_upper.copy(), root)]

    def frontier_bound():
        return heap[0][0] if heap else ub

    status = "optimal"
    while heap:
        bound, _, lo, hi, sol = heapq.heappop(heap)
        if _rel_gap(ub, bound) <= gap_tol:
            break
        if nodes >= node_limit:
            status = "node_limit"
            break
        yv = sol.x[nc:]
        frac = np.abs(yv - np.floor(yv) - 0.5)
        frac[np.abs(yv - np.round(yv)) <= int_tol] = math.inf
        j = int(np.argmin(frac))
        if math.isinf(frac[j]):
            # integral relaxation: complete with an exact continuous solve at rounded y
            y_int = np.round(yv)
            comp = solve_lp(fix_integers(m, y_int), validate=False)
            nodes += 1
            if comp.status == OPTIMAL and comp.objective < ub - 1e-12:
                ub = comp.objective
                incumbent = (comp.x, y_int)
            continue
        val = yv[j]
        for lo_j, hi_j in ((math.ceil(val - int_tol), None), (None, math.floor(val + int_tol))):
            lo2, hi2 = lo.copy(), hi.copy()
            if lo_j is not None:
                lo2[j] = max(lo2[j], lo_j)
            else:
                hi2[j] = min(hi2[j], hi_j)
            if lo2[j] > hi2[j]:
                continue
            child = _node_lp(base, nc, lo2, hi2)
            out = solve_lp(child, validate=False)
            nodes += 1
            if out.status == UNBOUNDED:
                return MipOutcome(status="unbounded", nodes=nodes,
                                  wall_time=time.perf_counter() - t0)
            if out.status != OPTIMAL or out.objective >= ub - 1e-9 * max(1.0, abs(ub) if math.isfinite(ub) else 1.0):
                continue
            seq += 1
            heapq.heappush(heap, (out.objective, seq, lo2, hi2, out))

    best_bound = min(frontier_bound(), ub)
    wall = time.perf_counter() - t0
    if incumbent is None:
        if status == "node_limit":
            return MipOutcome(status="node_limit", bound=best_bound, nodes=nodes, wall_time=wall)
        return MipOutcome(status="infeasible", nodes=nodes, wall_time=wall)
    x, y = incumbent
    return MipOutcome(status=status, x=x, y=y, objective=ub, bound=best_bound,
                      gap=_rel_gap(ub, best_bound), nodes=nodes, wall_time=wall)


def _node_lp(base, nc, lo, hi):
    lb = base.lb.copy()
    ub = base.ub.copy()
    lb[nc:] = lo
    ub[nc:] = hi
    return type(base)(c=base.c, a=base.a, senses=base.senses, b=base.b,
                      lb=lb, ub=ub, obj_offset=base.obj_offset)
