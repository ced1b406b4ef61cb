"""Dense two-phase revised simplex.

Solves the primal LP and reports row duals (for optimality cuts) or a Farkas
ray certifying infeasibility (for feasibility cuts).  Internals follow the
classic scheme: shift variables to zero lower bounds, materialize finite upper
bounds as rows, convert to equality form with slack/surplus columns, run
phase 1 over explicit artificial columns, then phase 2.  The basis inverse is
kept explicitly with eta updates and refactorized periodically.

Pivot selection is Dantzig's rule until a run of degenerate pivots, then
Bland's rule for the anti-cycling guarantee.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import LpProblem

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

FEAS_TOL = 1e-7
OPT_TOL = 1e-7
PIVOT_TOL = 1e-9
DEGENERATE_STALL = 100   # degenerate pivots before switching to Bland's rule
REFACTOR_EVERY = 50      # pivots between basis refactorizations


class SimplexError(RuntimeError):
    """Numerical failure (singular basis, stalling); distinct from infeasibility."""


@dataclass
class LpOutcome:
    status: str
    x: np.ndarray = None          # primal solution (optimal)
    objective: float = None      # includes the problem's obj_offset
    duals: np.ndarray = None      # one per caller row (optimal)
    ray: np.ndarray = None        # Farkas ray per caller row (infeasible),
    iterations: int = 0           # or primal direction per variable (unbounded)


class _Tableau:
    """Equality-form working problem with an explicit basis inverse."""

    def __init__(self, a, b, n_struct):
        self.a = a                    # m x n_total, columns: struct | artificials
        self.b = b                    # >= 0
        self.m = a.shape[0]
        self.n = a.shape[1]
        self.n_struct = n_struct      # first columns that are not artificial
        self.basis = None
        self.binv = None
        self.allowed = np.ones(self.n, dtype=bool)
        self.pivots = 0
        self.degenerate = 0

    def set_basis(self, basis):
        self.basis = list(basis)
        self.refactor()

    def refactor(self):
        mat = self.a[:, self.basis]
        try:
            self.binv = np.linalg.inv(mat)
        except np.linalg.LinAlgError as exc:
            raise SimplexError("singular basis during refactorization") from exc

    def x_basic(self):
        xb = self.binv @ self.b
        xb[np.abs(xb) < 1e-12] = 0.0
        return xb

    def pivot(self, enter, leave_pos, w):
        piv = w[leave_pos]
        if abs(piv) < PIVOT_TOL:
            raise SimplexError("pivot element vanished")
        self.basis[leave_pos] = enter
        # eta update: premultiply binv by the elementary matrix of this pivot
        row = self.binv[leave_pos] / piv
        col = w.copy()
        col[leave_pos] = 0.0
        self.binv -= np.outer(col, row)
        self.binv[leave_pos] = row
        self.pivots += 1
        if self.pivots % REFACTOR_EVERY == 0:
            self.refactor()

    def run(self, costs, max_iters):
        """Minimize costs over the current basis. Returns 'optimal' or ('unbounded', j, w)."""
        use_bland = False
        for it in range(max_iters):
            xb = self.x_basic()
            cb = costs[self.basis]
            y = cb @ self.binv
            reduced = costs - y @ self.a
            reduced[self.basis] = 0.0
            cand = self.allowed & (reduced < -OPT_TOL * max(1.0, np.abs(costs).max()))
            if not cand.any():
                return OPTIMAL, it
            if use_bland:
                enter = int(np.flatnonzero(cand)[0])
            else:
                idx = np.flatnonzero(cand)
                enter = int(idx[np.argmin(reduced[idx])])
            w = self.binv @ self.a[:, enter]
            blocking = w > PIVOT_TOL
            if not blocking.any():
                return (UNBOUNDED, enter, w), it
            ratios = np.full(self.m, np.inf)
            ratios[blocking] = xb[blocking] / w[blocking]
            theta = ratios.min()
            ties = np.flatnonzero(ratios <= theta + 1e-12)
            if use_bland:
                # leave by smallest variable index for the termination guarantee
                leave_pos = int(ties[np.argmin(np.asarray(self.basis)[ties])])
            else:
                # prefer kicking artificials out, then largest pivot for stability
                art = np.asarray([self.basis[i] >= self.n_struct for i in ties])
                pool = ties[art] if art.any() else ties
                leave_pos = int(pool[np.argmax(np.abs(w[pool]))])
            if theta <= 1e-12:
                self.degenerate += 1
                if self.degenerate > DEGENERATE_STALL:
                    use_bland = True
            else:
                self.degenerate = 0
            self.pivot(enter, leave_pos, w)
        raise SimplexError(f"iteration limit ({max_iters}) exceeded")


def _prepare(lp: LpProblem):
    """Shift to zero lower bounds, add upper-bound rows, build equality form."""
    if not np.all(np.isfinite(lp.lb)):
        raise ValueError("solve_lp requires finite lower bounds")
    a_rows = [lp.a]
    senses = list(lp.senses)
    b = list(lp.b - lp.a @ lp.lb)
    const = float(lp.c @ lp.lb) + lp.obj_offset
    ub_shift = lp.ub - lp.lb
    n = lp.n_vars
    for j in np.flatnonzero(np.isfinite(ub_shift)):
        row = np.zeros(n)
        row[j] = 1.0
        a_rows.append(row.reshape(1, -1))
        senses.append("<=")
        b.append(float(ub_shift[j]))
    a = np.vstack(a_rows) if len(a_rows) > 1 else lp.a.copy()
    return a, np.asarray(b, dtype=float), senses, const


def solve_lp(lp: LpProblem, tol: float = FEAS_TOL, max_iters: int | None = None,
             validate: bool = True) -> LpOutcome:
    """Solve the LP; returns status plus duals (optimal) or a certificate ray.

    Duals and the Farkas ray are reported per caller row, in the caller's row
    order and sign convention (>= rows of a minimization have duals >= 0).
    Raises SimplexError on numerical failure, which is distinct from INFEASIBLE.
    """
    m_caller = lp.n_rows
    n = lp.n_vars
    a, b, senses, const = _prepare(lp)
    m = a.shape[0]
    if max_iters is None:
        max_iters = 2000 + 200 * (m + n)

    if n == 0 or m == 0:
        return _solve_degenerate(lp, a, b, senses, const, m_caller)

    # equality form: one slack per inequality row
    slack_rows = [i for i, s in enumerate(senses) if s != "=="]
    n_slack = len(slack_rows)
    full = np.zeros((m, n + n_slack + m))
    full[:, :n] = a
    for k, i in enumerate(slack_rows):
        full[i, n + k] = 1.0 if senses[i] == "<=" else -1.0
    flip = np.ones(m)
    neg = b < 0
    flip[neg] = -1.0
    full[neg] *= -1.0
    b = b * flip
    # artificial columns (identity)
    art0 = n + n_slack
    full[:, art0:] = np.eye(m)

    tab = _Tableau(full, b, n_struct=art0)
    slack_of_row = {i: n + k for k, i in enumerate(slack_rows)}
    basis = []
    art_used = []
    for i in range(m):
        # slack can start basic when its post-flip coefficient is +1
        k = slack_of_row.get(i, -1)
        if k >= 0 and full[i, k] > 0.5:
            basis.append(k)
        else:
            basis.append(art0 + i)
            art_used.append(art0 + i)
    tab.set_basis(basis)

    iters = 0
    if art_used:
        cost1 = np.zeros(full.shape[1])
        cost1[art0:] = 1.0
        status, it = tab.run(cost1, max_iters)
        iters += it
        if status != OPTIMAL:
            raise SimplexError("phase 1 reported unbounded")  # impossible for a bounded-below phase
        xb = tab.x_basic()
        phase1_obj = float(cost1[tab.basis] @ xb)
        if phase1_obj > tol * max(1.0, np.abs(b).max()):
            w = cost1[tab.basis] @ tab.binv
            ray_internal = flip * w
            ray = ray_internal[:m_caller].copy()
            ray[np.abs(ray) < 1e-12] = 0.0
            if validate and _pure_form(lp):
                _check_farkas(lp, ray, tol)
            return LpOutcome(status=INFEASIBLE, ray=ray, iterations=iters)
        _drive_out_artificials(tab, art0)
    tab.allowed[tab.n_struct:] = False

    cost2 = np.zeros(full.shape[1])
    cost2[:n] = lp.c
    status, it = tab.run(cost2, max_iters)
    iters += it
    if status != OPTIMAL:
        _, enter, w = status
        direction = np.zeros(full.shape[1])
        direction[enter] = 1.0
        for pos, var in enumerate(tab.basis):
            direction[var] = -w[pos]
        ray = direction[:n].copy()
        ray[np.abs(ray) < 1e-12] = 0.0
        return LpOutcome(status=UNBOUNDED, ray=ray, iterations=iters)

    xb = tab.x_basic()
    x_full = np.zeros(full.shape[1])
    x_full[tab.basis] = xb
    x = x_full[:n] + lp.lb
    objective = float(lp.c @ x) + lp.obj_offset
    y = cost2[tab.basis] @ tab.binv
    duals = (flip * y)[:m_caller].copy()
    duals[np.abs(duals) < 1e-12] = 0.0
    out = LpOutcome(status=OPTIMAL, x=x, objective=objective, duals=duals, iterations=iters)
    if validate and _pure_form(lp):
        _check_optimal(lp, out, tol)
    return out


def _solve_degenerate(lp, a, b, senses, const, m_caller):
    """No variables or no rows: resolve by inspection."""
    n = lp.n_vars
    if n > 0 and a.shape[0] == 0:
        if np.any(lp.c < 0):
            j = int(np.argmin(lp.c))
            ray = np.zeros(n)
            ray[j] = 1.0
            return LpOutcome(status=UNBOUNDED, ray=ray)
        x = lp.lb.copy()
        return LpOutcome(status=OPTIMAL, x=x, objective=float(lp.c @ x) + lp.obj_offset,
                         duals=np.zeros(m_caller))
    # n == 0: rows are pure constants
    for i, s in enumerate(senses):
        bad = (s == ">=" and b[i] > FEAS_TOL) or (s == "<=" and b[i] < -FEAS_TOL) \
            or (s == "==" and abs(b[i]) > FEAS_TOL)
        if bad:
            ray = np.zeros(m_caller)
            if i < m_caller:
                ray[i] = 1.0 if s == ">=" else -1.0
            return LpOutcome(status=INFEASIBLE, ray=ray)
    return LpOutcome(status=OPTIMAL, x=np.zeros(0), objective=const,
                     duals=np.zeros(m_caller))


def _drive_out_artificials(tab, art0):
    """Pivot zero-level artificials out of the basis; drop rows that prove redundant."""
    pos = 0
    while pos < tab.m:
        var = tab.basis[pos]
        if var < art0:
            pos += 1
            continue
        row = tab.binv[pos] @ tab.a
        cand = np.abs(row[: tab.n_struct])
        cand[~tab.allowed[: tab.n_struct]] = 0.0
        for i in tab.basis:
            if i < tab.n_struct:
                cand[i] = 0.0
        j = int(np.argmax(cand)) if cand.size else 0
        if cand.size and cand[j] > 1e-8:
            w = tab.binv @ tab.a[:, j]
            tab.pivot(j, pos, w)
            pos += 1
        else:
            # redundant row: remove it and the artificial occupying it
            keep = [i for i in range(tab.m) if i != pos]
            tab.a = tab.a[keep]
            tab.b = tab.b[keep]
            tab.m -= 1
            del tab.basis[pos]
            tab.refactor()


def _pure_form(lp):
    return (np.all(lp.lb == 0.0) and not np.any(np.isfinite(lp.ub))
            and all(s == ">=" for s in lp.senses))


def _check_optimal(lp, out, tol):
    """Dual feasibility, weak/strong duality, complementary slackness (pure >= form)."""
    scale = max(1.0, np.abs(lp.c).max(initial=0.0), np.abs(lp.b).max(initial=0.0),
                abs(out.objective))
    tchk = 1e3 * tol * scale
    v = out.duals
    if v.size and v.min() < -tchk:
        raise SimplexError(f"negative dual {v.min():.3e}")
    slack_dual = lp.c - lp.a.T @ v
    if slack_dual.size and slack_dual.min() < -tchk:
        raise SimplexError(f"dual infeasibility {slack_dual.min():.3e}")
    gap = abs(float(lp.b @ v) - (out.objective - lp.obj_offset))
    if gap > tchk:
        raise SimplexError(f"duality gap {gap:.3e}")
    row_slack = lp.a @ out.x - lp.b
    if row_slack.size and row_slack.min() < -tchk:
        raise SimplexError(f"primal infeasibility {row_slack.min():.3e}")
    comp = np.abs(v * row_slack).max(initial=0.0)
    if comp > 1e4 * tol * scale * max(1.0, np.abs(row_slack).max(initial=0.0)):
        raise SimplexError(f"complementary slackness violated ({comp:.3e})")


def _check_farkas(lp, ray, tol):
    scale = max(1.0, np.abs(lp.b).max(initial=0.0))
    tchk = 1e3 * tol * scale
    if ray.size and ray.min() < -tchk:
        raise SimplexError("Farkas ray has negative component")
    at_u = lp.a.T @ ray
    if at_u.size and at_u.max(initial=0.0) > 1e3 * tol * max(1.0, np.abs(lp.a).max(initial=0.0)):
        raise SimplexError("Farkas ray fails A^T u <= 0")
    if float(lp.b @ ray) <= tol:
        raise SimplexError("Farkas ray fails b.u > 0")
