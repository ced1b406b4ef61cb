"""Benders decomposition engine.

Routes pure-integer rows to a master problem over (y, zeta), keeps everything
else in a continuous subproblem template, and iterates: master backend
proposes integer candidates, each candidate's subproblem yields either an
optimality cut (from duals) or a feasibility cut (from a Farkas ray), the
best feasible completion drives the upper bound, and the optimality gap is
measured against the static lower bound from the root LP relaxation.

Master backends: 'exact' (branch-and-bound, also supplies a dynamic lower
bound), 'sa', 'decomposed-sa', and 'mock-annealer' (QUBO samplers; no lower
bounds, per the static-bound protocol).  The decomposed backends get a stop
callback that checks the gap between repeats and can end a master solve early.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import qubo as qb
from .model import (StandardMilp, RawMilp, LpProblem, ConstraintClass,
                    classify_constraints, lp_relaxation, normalize)
from .simplex import solve_lp, OPTIMAL, INFEASIBLE, UNBOUNDED
from .samplers import (SamplerParams, MockAnnealer, MockAnnealerConfig,
                       sample_sa, sample_decomposed, sampled_candidates,
                       exact_candidates)

ALL_CUT_SOURCES = ("subproblem-dual", "subproblem-ray", "lp-relaxation-seed",
                   "relaxed-master")

CONTINUE = "continue"
OPTIMAL_WITHIN_GAP = "optimal_within_gap"
ITERATION_LIMIT = "iteration_limit"
INFEASIBLE_MILP = "infeasible"
UNBOUNDED_MILP = "unbounded"

BACKENDS = ("exact", "sa", "decomposed-sa", "mock-annealer")


class CutRejected(RuntimeError):
    """Certificate check failed for a candidate cut."""


@dataclass
class Cut:
    kind: str                 # optimality | feasibility
    coeff_y: np.ndarray       # -(B_sub^T v); stored row reads zeta >= rhs + coeff_y . y
    coeff_zeta: float         # 1 for optimality cuts, 0 for feasibility cuts
    rhs: float                # b_sub . v
    origin_iteration: int
    origin_source: str        # subproblem-dual | subproblem-ray | lp-relaxation-seed | relaxed-master
    name: str

    def as_ge_row(self):
        return (self.name, self.coeff_zeta, -self.coeff_y, self.rhs)

    def value_at(self, y):
        """Lower bound the cut imposes on zeta at y (optimality cuts), or the
        certificate value u.(b - B y) that must be <= 0 (feasibility cuts)."""
        return self.rhs + float(self.coeff_y @ y)

    def same_coefficients(self, other, tol=1e-9):
        return (self.kind == other.kind
                and abs(self.rhs - other.rhs) <= tol
                and np.all(np.abs(self.coeff_y - other.coeff_y) <= tol))


@dataclass
class MasterProblem:
    d_cost: np.ndarray
    int_upper: np.ndarray
    base_rows: list                  # pure-integer rows: (name, ycoef, rhs)
    vi_rows: list = field(default_factory=list)
    cuts: list = field(default_factory=list)
    zeta_lo: float = 0.0
    zeta_hi: float = 0.0

    def ge_rows(self):
        rows = [(name, 0.0, yc, rhs) for name, yc, rhs in self.base_rows]
        rows += [(name, 0.0, yc, rhs) for name, yc, rhs in self.vi_rows]
        rows += [cut.as_ge_row() for cut in self.cuts]
        return rows

    def to_milp(self, extra_rows=None) -> StandardMilp:
        raw = RawMilp(name="master")
        raw.add_var("zeta", "continuous", self.zeta_lo, self.zeta_hi, 1.0)
        for j, ub in enumerate(self.int_upper):
            raw.add_var(f"y{j}", "integer", 0, float(ub), float(self.d_cost[j]))
        for name, zc, yc, rhs in list(self.ge_rows()) + list(extra_rows or []):
            coeffs = {}
            if zc != 0.0:
                coeffs["zeta"] = float(zc)
            for j in np.flatnonzero(yc):
                coeffs[f"y{j}"] = float(yc[j])
            if coeffs:
                raw.add_constr(name, coeffs, ">=", float(rhs))
        return normalize(raw)

    def relaxation_lp(self) -> LpProblem:
        """LP relaxation of the master (zeta and y continuous within bounds)."""
        n = 1 + len(self.int_upper)
        rows = self.ge_rows()
        a = np.zeros((len(rows), n))
        b = np.zeros(len(rows))
        senses = []
        for i, (_, zc, yc, rhs) in enumerate(rows):
            a[i, 0] = zc
            a[i, 1:] = yc
            b[i] = rhs
            senses.append(">=")
        return LpProblem(
            c=np.concatenate([[1.0], self.d_cost]),
            a=a, senses=senses, b=b,
            lb=np.concatenate([[self.zeta_lo], np.zeros(len(self.int_upper))]),
            ub=np.concatenate([[self.zeta_hi], self.int_upper]),
        )

    def integer_structure_ok(self, y, tol=1e-9):
        """Bounds, pure-integer rows and valid inequalities hold at y; this is
        what a candidate must satisfy for its subproblem completion to be a
        valid original-MILP point."""
        y = np.asarray(y, dtype=float)
        if np.any(y < -tol) or np.any(y > self.int_upper + tol):
            return False
        for name, yc, rhs in list(self.base_rows) + list(self.vi_rows):
            if float(yc @ y) < rhs - tol:
                return False
        return True

    def feasible_y(self, y, tol=1e-9):
        """integer_structure_ok plus the accumulated feasibility cuts.  The
        surrogate's value is the subproblem's business, so optimality cuts do
        not reject a candidate here."""
        if not self.integer_structure_ok(y, tol):
            return False
        return all(cut.value_at(np.asarray(y, dtype=float)) <= tol
                   for cut in self.cuts if cut.kind == "feasibility")

    def implied_objective(self, y):
        """Master objective at y with the surrogate at its cut-implied optimum."""
        y = np.asarray(y, dtype=float)
        zeta = max([c.value_at(y) for c in self.cuts if c.kind == "optimality"],
                   default=self.zeta_lo)
        return max(zeta, self.zeta_lo) + float(self.d_cost @ y)


@dataclass
class SubproblemTemplate:
    c: np.ndarray
    a: np.ndarray          # m_sub x n_cont
    b_cols: np.ndarray     # m_sub x n_int
    rhs: np.ndarray
    row_ids: np.ndarray    # rows of the StandardMilp this template kept

    def lp_for(self, y_bar) -> LpProblem:
        rhs = self.rhs - self.b_cols @ np.asarray(y_bar, dtype=float)
        m, n = self.a.shape
        return LpProblem(c=self.c.copy(), a=self.a, senses=[">="] * m, b=rhs,
                         lb=np.zeros(n), ub=np.full(n, math.inf))


def decompose(m: StandardMilp):
    """Split the normalized MILP: pure-integer rows to the master, the rest to
    the subproblem template."""
    classes = classify_constraints(m)
    pure = [i for i, cl in enumerate(classes) if cl is ConstraintClass.PURE_INTEGER]
    rest = [i for i, cl in enumerate(classes) if cl is not ConstraintClass.PURE_INTEGER]
    b_dense = m.b_mat.to_dense()
    a_dense = m.a.to_dense()
    base_rows = [(m.record.row_names[i], b_dense[i].copy(), float(m.b[i])) for i in pure]
    master = MasterProblem(d_cost=m.d_cost.copy(), int_upper=m.int_upper.copy(),
                           base_rows=base_rows)
    template = SubproblemTemplate(
        c=m.c.copy(),
        a=a_dense[rest].copy(),
        b_cols=b_dense[rest].copy(),
        rhs=m.b[rest].copy(),
        row_ids=np.asarray(rest, dtype=np.intp),
    )
    return master, template


def make_optimality_cut(v, template: SubproblemTemplate, iteration=0,
                        source="subproblem-dual", name=None,
                        y_bar=None, sub_value=None, tol=1e-6) -> Cut:
    """zeta >= b.v - (B^T v).y from optimal subproblem duals; tight at y_bar."""
    v = np.asarray(v, dtype=float)
    cut = Cut(kind="optimality",
              coeff_y=-(template.b_cols.T @ v),
              coeff_zeta=1.0,
              rhs=float(template.rhs @ v),
              origin_iteration=iteration, origin_source=source,
              name=name or f"opt_cut{iteration}")
    if y_bar is not None and sub_value is not None:
        scale = max(1.0, abs(sub_value))
        if abs(cut.value_at(y_bar) - sub_value) > tol * scale:
            raise CutRejected(
                f"optimality cut not tight at its origin: {cut.value_at(y_bar)} vs {sub_value}")
    return cut


def make_feasibility_cut(u, template: SubproblemTemplate, iteration=0,
                         source="subproblem-ray", name=None,
                         y_bar=None, tol=1e-9) -> Cut:
    """(b - B y).u <= 0 from a Farkas ray; must cut off the generating y_bar."""
    u = np.asarray(u, dtype=float)
    cut = Cut(kind="feasibility",
              coeff_y=-(template.b_cols.T @ u),
              coeff_zeta=0.0,
              rhs=float(template.rhs @ u),
              origin_iteration=iteration, origin_source=source,
              name=name or f"feas_cut{iteration}")
    if y_bar is not None and cut.value_at(y_bar) <= tol:
        raise CutRejected("feasibility cut does not exclude its generating point")
    return cut


def gap_value(ub, lb):
    """Relative gap against the lower bound; absolute when the bound is zero."""
    if ub is None or lb is None or math.isinf(ub) or math.isinf(lb):
        return math.inf
    if lb == 0.0:
        return ub - lb
    return (ub - lb) / abs(lb)


@dataclass
class BendersConfig:
    gap_tol: float = 0.05
    multi_cut_count: int = 1                  # candidates (and cuts) per iteration
    use_valid_inequalities: bool = True
    relaxed_master_first_iteration: bool = True
    max_iterations: int = 60
    master_backend: str = "exact"
    sampler: SamplerParams = field(default_factory=SamplerParams)
    mock: MockAnnealerConfig = field(default_factory=MockAnnealerConfig)
    penalty: qb.PenaltyPolicy = field(default_factory=qb.PenaltyPolicy)
    delta_zeta: float = 0.1
    exact_gap_tol: float = 1e-7               # master branch-and-bound tolerance
    seed: int = 0

    def __post_init__(self):
        if self.gap_tol <= 0:
            raise ValueError("gap_tol must be positive")
        if self.multi_cut_count < 1:
            raise ValueError("multi_cut_count must be >= 1")
        if self.master_backend not in BACKENDS:
            raise ValueError(f"unknown master backend {self.master_backend!r}")


@dataclass
class BendersState:
    iteration: int = 0
    ub: float = math.inf              # raw-space objective of the incumbent
    lb_static: float = -math.inf
    lb_dynamic: float = -math.inf     # exact master bound; unused for samplers
    incumbent_x: np.ndarray = None
    incumbent_y: np.ndarray = None
    incumbent_raw: dict = None
    timings: dict = field(default_factory=lambda: {
        "master": 0.0, "subproblem": 0.0, "data_processing": 0.0, "total": 0.0})
    history: list = field(default_factory=list)
    early_stops: int = 0
    failed_iterations: int = 0

    @property
    def lb(self):
        return max(self.lb_static, self.lb_dynamic)

    @property
    def gap(self):
        return gap_value(self.ub, self.lb)


def check_termination(state: BendersState, config: BendersConfig) -> str:
    if state.gap <= config.gap_tol:
        return OPTIMAL_WITHIN_GAP
    if state.iteration >= config.max_iterations:
        return ITERATION_LIMIT
    return CONTINUE


@dataclass
class BendersResult:
    status: str
    objective: float
    gap: float
    lb_static: float
    lb_dynamic: float
    iterations: int
    cuts_optimality: int
    cuts_feasibility: int
    incumbent: dict
    timings: dict
    history: list
    sampler_totals: dict
    early_stops: int
    seed: int


class BendersEngine:
    def __init__(self, milp: StandardMilp, config: BendersConfig = None,
                 raw: RawMilp = None, vi_rows=None, log=None):
        self.milp = milp
        self.config = config or BendersConfig()
        self.raw = raw
        self.log = log                     # callable(record dict), optional
        self.master, self.template = decompose(milp)
        if self.config.use_valid_inequalities and vi_rows:
            self.master.vi_rows = list(vi_rows)
        self.state = BendersState()
        self.sub_cache = {}
        self.tabu = set()
        self.rho_state = {}
        self.reads = self.config.sampler.reads
        self.sampler_totals = {"reads": 0, "sub_tasks": 0, "device_time_s": 0.0,
                               "queue_time_s": 0.0, "tasks": 0, "qubo_bits_last": 0}
        self._stop_time = 0.0
        self._offset = milp.record.obj_offset
        self._seeded = False

    # -- subproblem handling ------------------------------------------------

    def solve_sub(self, y_key):
        """Memoized, timed subproblem solve for an integer candidate."""
        if y_key in self.sub_cache:
            return self.sub_cache[y_key]
        t0 = time.perf_counter()
        out = solve_lp(self.template.lp_for(np.asarray(y_key, dtype=float)))
        self.state.timings["subproblem"] += time.perf_counter() - t0
        self.sub_cache[y_key] = out
        return out

    def total_objective(self, y, sub_value):
        return sub_value + float(self.milp.d_cost @ np.asarray(y, dtype=float)) + self._offset

    # -- seeding ------------------------------------------------------------

    def seed_from_lp_relaxation(self):
        """Static lower bound plus the first optimality cut from the root LP
        relaxation duals; also pins the surrogate's encodable range."""
        out = solve_lp(lp_relaxation(self.milp))
        if out.status == INFEASIBLE:
            return INFEASIBLE_MILP
        if out.status == UNBOUNDED:
            return UNBOUNDED_MILP
        self.state.lb_static = out.objective
        box_dy = float(np.maximum(self.milp.d_cost, 0.0) @ self.milp.int_upper)
        zeta_lo = (out.objective - self._offset) - box_dy
        if np.all(self.milp.c >= 0.0):
            zeta_lo = max(zeta_lo, 0.0)
        self.master.zeta_lo = zeta_lo
        self.master.zeta_hi = zeta_lo
        seed_duals = out.duals[self.template.row_ids]
        cut = make_optimality_cut(seed_duals, self.template, iteration=0,
                                  source="lp-relaxation-seed", name="seed_cut")
        self._grow_zeta_for_probe()
        self._append_cut(cut, None)
        self._seeded = True
        return CONTINUE

    def _grow_zeta_for_probe(self):
        """Estimate zeta_hi by reading the continuous objective part at naive
        candidates (all-upper and all-zero integer designs)."""
        best = None
        for y in (self.milp.int_upper.copy(), np.zeros(self.milp.n_int)):
            key = tuple(int(v) for v in y)
            out = self.solve_sub(key)
            if out.status == OPTIMAL:
                val = out.objective
                best = val if best is None else max(best, val)
        if best is None:
            best = self.master.zeta_lo + max(1.0, abs(self.master.zeta_lo))
        self.master.zeta_hi = max(self.master.zeta_hi, best)

    def _grow_zeta_for_cut(self, cut: Cut):
        """With the exact backend the surrogate range must cover every cut over
        the whole box, otherwise the master could exclude integer points and its
        optimum would no longer bound the MILP."""
        if self.config.master_backend == "exact" and cut.kind == "optimality":
            hi = cut.rhs + float(np.maximum(cut.coeff_y, 0.0) @ self.milp.int_upper)
            self.master.zeta_hi = max(self.master.zeta_hi, hi)

    def _append_cut(self, cut, y_key):
        for existing in self.master.cuts:
            if cut.same_coefficients(existing):
                if y_key is not None:
                    self.tabu.add(y_key)
                return False
        self._grow_zeta_for_cut(cut)
        self.master.cuts.append(cut)
        return True

    # -- master backends ----------------------------------------------------

    def _stop_callback(self, q):
        """Gap check between decomposed-sampler repeats: solve the candidate's
        subproblem and stop the master solve once the gap is already closed."""
        def stop(bits, energy):
            t0 = time.perf_counter()
            hit = False
            sol = qb.extract_solution(q, bits)
            if self.master.feasible_y(sol.y):
                key = tuple(int(round(v)) for v in sol.y)
                out = self.solve_sub(key)
                if out.status == OPTIMAL:
                    total = self.total_objective(sol.y, out.objective)
                    prospective = min(self.state.ub, total)
                    if gap_value(prospective, self.state.lb) <= self.config.gap_tol:
                        hit = True
            self._stop_time += time.perf_counter() - t0
            if hit:
                self.state.early_stops += 1
            return hit
        return stop

    def _backend_candidates(self, k):
        """Returns (candidates [(y, master_obj_std)], info dict). Master solve
        time lands in the master bucket; gap-check subproblem time does not.
        The tabu list only applies to this one solve."""
        cfg = self.config
        tabu, self.tabu = self.tabu, set()
        info = {}
        self._stop_time = 0.0
        t0 = time.perf_counter()
        if cfg.master_backend == "exact":
            nogood = list(tabu) if tabu and np.all(self.milp.int_upper <= 1) else []
            try:
                found, master_infeasible = exact_candidates(
                    self.master, k, exclude=nogood, gap_tol=cfg.exact_gap_tol)
            finally:
                self.state.timings["master"] += time.perf_counter() - t0
            if master_infeasible:
                return None, {"master_infeasible": True}
            if found and not nogood:
                self.state.lb_dynamic = max(self.state.lb_dynamic,
                                            found[0][2] + self._offset)
            return [(y, obj) for y, obj, _ in found], info

        params = SamplerParams(reads=self.reads, repeats=cfg.sampler.repeats,
                               sub_qubo_limit=cfg.sampler.sub_qubo_limit,
                               sweeps_per_read=cfg.sampler.sweeps_per_read,
                               seed=int(np.random.SeedSequence(
                                   [cfg.seed, self.state.iteration]).generate_state(1)[0]))
        if cfg.master_backend == "sa":
            backend = lambda q, p, stop=None: sample_sa(q, p)
        elif cfg.master_backend == "decomposed-sa":
            backend = lambda q, p, stop=None: sample_decomposed(q, p, inner=sample_sa,
                                                                stop=stop)
        else:  # mock-annealer
            annealer = MockAnnealer(cfg.mock)
            backend = lambda q, p, stop=None: annealer.sample(q, p, stop=stop)
        try:
            cands, sinfo = sampled_candidates(
                self.master, k, backend, params, policy=cfg.penalty,
                delta_zeta=cfg.delta_zeta, rho_state=self.rho_state,
                exclude=tabu, stop_builder=self._stop_callback)
        finally:
            self.state.timings["master"] += time.perf_counter() - t0 - self._stop_time
        self.rho_state = sinfo.get("rho_state", self.rho_state)
        meta = sinfo.get("sample_meta", {})
        self.sampler_totals["reads"] += meta.get("reads", params.reads)
        self.sampler_totals["sub_tasks"] += meta.get("sub_tasks", 0)
        self.sampler_totals["tasks"] += meta.get("tasks", 0)
        self.sampler_totals["device_time_s"] += meta.get("device_time_s", 0.0)
        self.sampler_totals["queue_time_s"] += meta.get("queue_time_s", 0.0)
        self.sampler_totals["qubo_bits_last"] = sinfo.get("qubo_bits", 0)
        info.update(sinfo)
        info["early_stop"] = meta.get("early_stop", False)
        return cands, info

    def _relaxed_master_candidate(self):
        """First-iteration improvement: solve the master LP relaxation and round
        the fractional y to the nearest integers (ties toward zero)."""
        t0 = time.perf_counter()
        out = solve_lp(self.master.relaxation_lp(), validate=False)
        self.state.timings["master"] += time.perf_counter() - t0
        if out.status != OPTIMAL:
            return None
        yfrac = out.x[1:]
        y = np.floor(yfrac)
        y += (yfrac - y) > 0.5
        y = np.clip(y, 0.0, self.milp.int_upper)
        return y

    # -- main loop ----------------------------------------------------------

    def solve(self) -> BendersResult:
        t_start = time.perf_counter()
        status = self.seed_from_lp_relaxation()
        if status == CONTINUE:
            status = self._loop()
        self.state.timings["total"] = time.perf_counter() - t_start
        self.state.timings["data_processing"] = max(
            0.0, self.state.timings["total"] - self.state.timings["master"]
            - self.state.timings["subproblem"])
        return self._result(status)

    def _loop(self):
        cfg = self.config
        st = self.state
        while True:
            st.iteration += 1
            t_master0 = st.timings["master"]
            t_sub0 = st.timings["subproblem"]
            record = {"iteration": st.iteration, "cuts": [], "candidates": 0,
                      "early_stop": False, "failed": False}
            if st.iteration == 1 and cfg.relaxed_master_first_iteration:
                y = self._relaxed_master_candidate()
                if y is None:
                    return INFEASIBLE_MILP
                candidates = [(y, None)]
                record["backend"] = "relaxed-master"
            else:
                candidates, info = self._backend_candidates(cfg.multi_cut_count)
                if candidates is None:
                    return INFEASIBLE_MILP     # exact master proved infeasible
                record["backend"] = cfg.master_backend
                record["qubo_bits"] = info.get("qubo_bits")
                record["early_stop"] = bool(info.get("early_stop"))
                if info.get("escalations"):
                    record["escalations"] = info["escalations"]
            if not candidates:
                st.failed_iterations += 1
                record["failed"] = True
                self.reads = min(self.reads * 2, 8 * cfg.sampler.reads)
                record["reads_escalated_to"] = self.reads
            record["candidates"] = len(candidates)

            for y, _ in candidates:
                source = "relaxed-master" if record["backend"] == "relaxed-master" \
                    else ("subproblem-dual", "subproblem-ray")
                outcome = self._process_candidate(y, source, record)
                if outcome is not None:
                    return outcome

            record.update(ub=st.ub, lb_static=st.lb_static, lb=st.lb, gap=st.gap,
                          master_time=st.timings["master"] - t_master0,
                          subproblem_time=st.timings["subproblem"] - t_sub0)
            st.history.append(record)
            if self.log:
                self.log(record)
            verdict = check_termination(st, cfg)
            if verdict != CONTINUE:
                return verdict

    def _process_candidate(self, y, source, record):
        st = self.state
        y = np.asarray(y, dtype=float)
        key = tuple(int(round(v)) for v in y)
        if not self.master.integer_structure_ok(y):
            # a rounded relaxed-master point can land outside the pure-integer
            # rows; its completion would not be a valid original-MILP point
            record["cuts"].append(("skipped", "structure-violating"))
            return None
        out = self.solve_sub(key)
        it = st.iteration
        if out.status == UNBOUNDED:
            return UNBOUNDED_MILP
        if out.status == OPTIMAL:
            sub_value = out.objective
            self.master.zeta_hi = max(self.master.zeta_hi, sub_value)
            total = self.total_objective(y, sub_value)
            if total < st.ub - 1e-12:
                self._take_incumbent(y, out.x, total)
            src = source if isinstance(source, str) else source[0]
            try:
                cut = make_optimality_cut(out.duals, self.template, iteration=it,
                                          source=src, name=f"cut{len(self.master.cuts)}",
                                          y_bar=y, sub_value=sub_value)
            except CutRejected:
                record["cuts"].append(("optimality", "rejected"))
                return None
            added = self._append_cut(cut, key)
            record["cuts"].append(("optimality", src if added else "duplicate"))
        else:
            src = source if isinstance(source, str) else source[1]
            try:
                cut = make_feasibility_cut(out.ray, self.template, iteration=it,
                                           source=src, name=f"cut{len(self.master.cuts)}",
                                           y_bar=y)
            except CutRejected:
                record["cuts"].append(("feasibility", "rejected"))
                return None
            if not self._feasibility_cut_satisfiable(cut):
                return INFEASIBLE_MILP
            added = self._append_cut(cut, key)
            record["cuts"].append(("feasibility", src if added else "duplicate"))
        return None

    def _feasibility_cut_satisfiable(self, cut):
        """A feasibility cut no box point satisfies proves the MILP infeasible."""
        best = -cut.rhs + float(np.maximum(-cut.coeff_y, 0.0) @ self.milp.int_upper)
        return best >= -1e-9

    def _take_incumbent(self, y, x, total):
        st = self.state
        st.incumbent_x = x.copy()
        st.incumbent_y = y.copy()
        st.ub = total
        st.incumbent_raw = self._raw_point(x, y)
        if self.raw is not None and st.incumbent_raw is not None:
            if not self.raw.check_feasible(st.incumbent_raw, tol=1e-5):
                raise RuntimeError("incumbent failed raw-model feasibility recheck")

    def _raw_point(self, x, y):
        full_x = np.zeros(self.milp.n_cont)
        full_x[: len(x)] = x
        return self.milp.denormalize(full_x, y)

    def _result(self, status):
        st = self.state
        return BendersResult(
            status=status,
            objective=st.ub if math.isfinite(st.ub) else None,
            gap=st.gap if math.isfinite(st.gap) else None,
            lb_static=st.lb_static if math.isfinite(st.lb_static) else None,
            lb_dynamic=st.lb_dynamic if math.isfinite(st.lb_dynamic) else None,
            iterations=st.iteration,
            cuts_optimality=sum(1 for c in self.master.cuts if c.kind == "optimality"),
            cuts_feasibility=sum(1 for c in self.master.cuts if c.kind == "feasibility"),
            incumbent=st.incumbent_raw,
            timings=dict(st.timings),
            history=list(st.history),
            sampler_totals=dict(self.sampler_totals),
            early_stops=st.early_stops,
            seed=self.config.seed,
        )


def solve_benders(milp: StandardMilp, config: BendersConfig = None, raw: RawMilp = None,
                  vi_rows=None, log=None) -> BendersResult:
    return BendersEngine(milp, config, raw=raw, vi_rows=vi_rows, log=log).solve()
