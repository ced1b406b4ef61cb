"""Master-problem sampling backends behind one interface.

Four ways to draw integer candidates from a compiled master QUBO: vectorized
simulated annealing (the desk-scale stand-in for an annealer), an exhaustive
enumerator (test oracle, <= 24 bits), a decomposing sampler that solves
impact-ordered sub-QUBOs under a bit limit, and a mock remote-annealer client
that adds queue/device-time accounting on top of the SA outcomes.

All samplers are deterministic for a fixed (qubo, params, seed) and recompute
reported energies through the encoder's energy function.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import qubo as qb
from .branch_bound import branch_and_bound


@dataclass
class SamplerParams:
    reads: int = 100
    repeats: int = 10            # improvement-free passes before the decomposed sampler stops
    sub_qubo_limit: int = 160
    sweeps_per_read: int = None  # single-flip attempts per read; default 10 * bits
    seed: int = 0

    def __post_init__(self):
        if self.reads < 1 or self.repeats < 1:
            raise ValueError("reads and repeats must be >= 1")
        if self.sub_qubo_limit < 8:
            raise ValueError("sub_qubo_limit must be >= 8")


@dataclass
class SampleRecord:
    bits: np.ndarray
    energy: float
    count: int = 1


@dataclass
class SampleSet:
    records: list
    metadata: dict = field(default_factory=dict)

    @property
    def best(self) -> SampleRecord:
        return self.records[0]

    def __iter__(self):
        return iter(self.records)


def _finish(q, bit_rows, metadata):
    """Dedup, recompute energies exactly, sort by (energy, lexicographic bits)."""
    uniq = {}
    for row in bit_rows:
        key = row.tobytes()
        if key in uniq:
            uniq[key].count += 1
        else:
            uniq[key] = SampleRecord(bits=row.copy(), energy=0.0, count=1)
    records = list(uniq.values())
    if records:
        energies = q.energy_batch(np.stack([r.bits for r in records]))
        for rec, e in zip(records, energies):
            rec.energy = float(e)
    records.sort(key=lambda r: (r.energy, r.bits.tobytes()))
    return SampleSet(records=records, metadata=metadata)


def sample_sa(q: qb.Qubo, p: SamplerParams, stop=None) -> SampleSet:
    """Independent Metropolis anneal chains with geometric cooling.

    Chains run vectorized but each read consumes its own derived random stream,
    so results are reproducible regardless of batching."""
    t0 = time.perf_counter()
    n = q.n_bits
    if n == 0:
        return SampleSet([SampleRecord(np.zeros(0, dtype=np.int8), q.constant)],
                         {"reads": p.reads, "wall_time_s": time.perf_counter() - t0})
    reads = p.reads
    steps = p.sweeps_per_read if p.sweeps_per_read else 10 * n
    root = np.random.SeedSequence(p.seed)
    probe_ss, *read_ss = root.spawn(reads + 1)

    jsym = q.quad + q.quad.T
    # self-scaling schedule: hot enough to accept almost any probe flip,
    # cold end tied to the linear term scale
    probe_rng = np.random.default_rng(probe_ss)
    probe = probe_rng.integers(0, 2, n).astype(float)
    fields = q.linear + jsym @ probe
    dE = (1.0 - 2.0 * probe) * fields
    t_hi = max(float(np.abs(dE).max()), 1e-6)
    t_lo = max(1e-3 * float(np.abs(q.linear).mean()), 1e-9)
    if t_lo >= t_hi:
        t_lo = t_hi * 1e-4
    temps = t_hi * (t_lo / t_hi) ** (np.arange(steps) / max(steps - 1, 1))

    state = np.empty((reads, n))
    flip_cols = np.empty((steps, reads), dtype=np.intp)
    unif = np.empty((steps, reads))
    for r, ss in enumerate(read_ss):
        rng = np.random.default_rng(ss)
        state[r] = rng.integers(0, 2, n)
        flip_cols[:, r] = rng.integers(0, n, steps)
        unif[:, r] = rng.random(steps)

    fields = q.linear[None, :] + state @ jsym
    energies = q.energy_batch(state)
    best_bits = state.copy()
    best_energy = energies.copy()
    rows = np.arange(reads)

    for k in range(steps):
        cols = flip_cols[k]
        dE = (1.0 - 2.0 * state[rows, cols]) * fields[rows, cols]
        accept = unif[k] < np.exp(-np.maximum(dE, 0.0) / temps[k])
        if accept.any():
            r_acc = rows[accept]
            c_acc = cols[accept]
            delta = 1.0 - 2.0 * state[r_acc, c_acc]
            state[r_acc, c_acc] += delta
            fields[r_acc] += delta[:, None] * jsym[c_acc]
            energies[r_acc] += dE[accept]
            improved = r_acc[energies[r_acc] < best_energy[r_acc] - 1e-12]
            if improved.size:
                best_bits[improved] = state[improved]
                best_energy[improved] = energies[improved]

    meta = {"reads": reads, "sweeps_per_read": steps, "t_hi": t_hi, "t_lo": t_lo,
            "seed": p.seed, "wall_time_s": time.perf_counter() - t0}
    return _finish(q, [best_bits[r].astype(np.int8) for r in range(reads)], meta)


def sample_exact(q: qb.Qubo, max_bits: int = 24) -> SampleSet:
    """Full enumeration oracle; returns every tie for the global minimum."""
    t0 = time.perf_counter()
    n = q.n_bits
    if n > max_bits:
        raise ValueError(f"exact sampler limited to {max_bits} bits, QUBO has {n}")
    if n == 0:
        return SampleSet([SampleRecord(np.zeros(0, dtype=np.int8), q.constant)],
                         {"enumerated": 1, "wall_time_s": time.perf_counter() - t0})
    total = 1 << n
    chunk = 1 << min(n, 18)
    shifts = np.arange(n, dtype=np.int64)
    best_e = math.inf
    best_codes = []
    for start in range(0, total, chunk):
        codes = np.arange(start, min(start + chunk, total), dtype=np.int64)
        bits = ((codes[:, None] >> shifts) & 1).astype(float)
        e = q.energy_batch(bits)
        emin = float(e.min())
        if emin < best_e - 1e-15:
            best_e = emin
            best_codes = []
        if emin <= best_e:
            best_codes.extend(int(c) for c in codes[e == best_e])
    records = []
    for code in best_codes:
        bits = ((code >> shifts) & 1).astype(np.int8)
        records.append(SampleRecord(bits=bits, energy=float(q.energy(bits))))
    records.sort(key=lambda r: (r.energy, r.bits.tobytes()))
    return SampleSet(records, {"enumerated": total, "ties": len(records),
                               "wall_time_s": time.perf_counter() - t0})


def _partition(q, limit):
    """Deterministic blocks of <= limit bits, by descending local impact
    (|linear| + summed |couplings|).  Coupled components are kept whole where
    they fit, so a block-separable QUBO decomposes exactly."""
    n = q.n_bits
    jsym_abs = np.abs(q.quad) + np.abs(q.quad.T)
    impact = np.abs(q.linear) + jsym_abs.sum(axis=1)
    adj = [np.flatnonzero(jsym_abs[i]) for i in range(n)]
    comp_id = -np.ones(n, dtype=int)
    comps = []
    for i in range(n):
        if comp_id[i] >= 0:
            continue
        stack, members = [i], []
        comp_id[i] = len(comps)
        while stack:
            u = stack.pop()
            members.append(u)
            for v in adj[u]:
                if comp_id[v] < 0:
                    comp_id[v] = len(comps)
                    stack.append(v)
        # chunk oversized components by impact order
        members = sorted(members, key=lambda b: (-impact[b], b))
        for s in range(0, len(members), limit):
            comps.append(members[s:s + limit])
    comps.sort(key=lambda ms: (-max(impact[b] for b in ms), ms[0]))
    blocks, current = [], []
    for ms in comps:
        if len(current) + len(ms) > limit and current:
            blocks.append(np.sort(np.asarray(current, dtype=np.intp)))
            current = []
        current.extend(ms)
    if current:
        blocks.append(np.sort(np.asarray(current, dtype=np.intp)))
    return blocks


def _sub_qubo(q, idx, current):
    """Clamp all bits outside idx to `current` and restrict to idx (sorted)."""
    jsym = q.quad + q.quad.T
    tmp = current.astype(float).copy()
    tmp[idx] = 0.0
    const = q.energy(tmp)
    linear = q.linear[idx] + (jsym[idx] @ tmp)
    quad = q.quad[np.ix_(idx, idx)]
    return qb.Qubo(n_bits=len(idx), linear=linear, quad=quad, constant=const)


def sample_decomposed(q: qb.Qubo, p: SamplerParams, inner=sample_sa, stop=None) -> SampleSet:
    """QBSolv-style decomposition: impact-ordered blocks within the bit limit,
    solved with `inner` while the rest of the assignment is clamped.

    A repeat is a full improvement-free pass; the sampler stops after
    p.repeats consecutive ones or when `stop` (the engine's gap check,
    evaluated between passes) says the caller is satisfied."""
    t0 = time.perf_counter()
    n = q.n_bits
    if n <= p.sub_qubo_limit:
        out = inner(q, p)
        out.metadata.setdefault("delegated", True)
        return out

    blocks = _partition(q, p.sub_qubo_limit)

    current = np.zeros(n, dtype=np.int8)
    best_e = q.energy(current)
    stale = 0
    passes = 0
    tasks = 0
    early_stop = False
    last_improving_pass = 0
    while stale < p.repeats:
        passes += 1
        improved = False
        for bi, idx in enumerate(blocks):
            sub = _sub_qubo(q, idx, current)
            child_seed = int(np.random.SeedSequence([p.seed, passes, bi]).generate_state(1)[0])
            sub_out = inner(sub, replace(p, seed=child_seed))
            tasks += 1
            cand = current.copy()
            cand[idx] = sub_out.best.bits
            cand_e = q.energy(cand)
            if cand_e < best_e - 1e-12:
                current = cand
                best_e = cand_e
                improved = True
        if improved:
            stale = 0
            last_improving_pass = passes
        else:
            stale += 1
        if stop is not None and stop(current.copy(), best_e):
            early_stop = True
            break
    meta = {"passes": passes, "repeats_limit": p.repeats, "sub_tasks": tasks,
            "blocks": len(blocks), "early_stop": early_stop, "seed": p.seed,
            "last_improving_pass": last_improving_pass,
            "wall_time_s": time.perf_counter() - t0}
    return _finish(q, [current], meta)


@dataclass
class MockAnnealerConfig:
    capacity_bits: int = 160
    queue_latency_s: float = 0.0
    task_device_time_s: float = 0.02


class MockAnnealer:
    """Remote-annealer stand-in: SA outcomes plus queue/device-time accounting.

    Oversized QUBOs are routed through the decomposed sampler, one simulated
    device task per sub-QUBO, mirroring the hardware pipeline."""

    def __init__(self, config: MockAnnealerConfig = None):
        self.config = config or MockAnnealerConfig()

    def sample(self, q: qb.Qubo, p: SamplerParams, stop=None) -> SampleSet:
        cfg = self.config
        tasks = 0

        def device(sub_q, sub_p):
            nonlocal tasks
            tasks += 1
            if cfg.queue_latency_s > 0:
                time.sleep(cfg.queue_latency_s)
            return sample_sa(sub_q, sub_p)

        if q.n_bits <= cfg.capacity_bits:
            out = device(q, p)
        else:
            out = sample_decomposed(q, replace(p, sub_qubo_limit=min(p.sub_qubo_limit,
                                                                     cfg.capacity_bits)),
                                    inner=device, stop=stop)
        out.metadata["tasks"] = tasks
        out.metadata["device_time_s"] = tasks * cfg.task_device_time_s
        out.metadata["queue_time_s"] = tasks * cfg.queue_latency_s
        return out


def sample_mock_annealer(q, p, config: MockAnnealerConfig = None, stop=None) -> SampleSet:
    return MockAnnealer(config).sample(q, p, stop=stop)


# ---------------------------------------------------------------------------
# Candidate generation for the decomposition engine.

def _nogood_rows(exclusions, n_int, int_upper):
    rows = []
    if exclusions and np.any(np.asarray(int_upper) > 1):
        raise ValueError("exclusion-based multi-candidate search requires binary masters")
    for t, y in enumerate(exclusions):
        coeffs = {}
        rhs = 1.0
        for j, v in enumerate(y):
            if v >= 0.5:
                coeffs[j] = -1.0
                rhs -= 1.0
            else:
                coeffs[j] = 1.0
        ycoef = np.zeros(n_int)
        for j, c in coeffs.items():
            ycoef[j] = c
        rows.append((f"__nogood{t}", 0.0, ycoef, rhs))
    return rows


def exact_candidates(master, k: int, exclude=(), gap_tol: float = 1e-7):
    """k best distinct integer solutions of the master via iterative exclusion.

    Returns (candidates, master_infeasible): candidates are (y, objective, bound)
    triples best-first; master_infeasible is True when the unexcluded master
    already has no solution (which certifies original-MILP infeasibility,
    since cuts and valid inequalities only remove infeasible points)."""
    found = []
    exclusions = [np.asarray(e, dtype=float) for e in exclude]
    first_unexcluded = not exclusions
    for _ in range(k):
        rows = _nogood_rows(exclusions, len(master.int_upper), master.int_upper)
        out = branch_and_bound(master.to_milp(extra_rows=rows), gap_tol=gap_tol)
        if out.status != "optimal":
            return found, (first_unexcluded and out.status == "infeasible" and not found)
        found.append((out.y.copy(), float(out.objective), float(out.bound)))
        exclusions.append(out.y.copy())
        first_unexcluded = False
    return found, False


def sampled_candidates(master, k: int, backend, params: SamplerParams,
                       policy: qb.PenaltyPolicy = None, delta_zeta: float = 0.1,
                       rho_state: dict = None, exclude=(), stop_builder=None):
    """Compile, sample, decode: up to k distinct master-feasible y, best first.

    On an all-infeasible sample set the violated rows' penalties escalate and
    sampling retries until the escalation budget runs out (empty result).
    stop_builder(q) may produce a between-repeats stop callback for
    decomposing backends."""
    policy = policy or qb.PenaltyPolicy()
    exclude = {tuple(int(round(v)) for v in np.asarray(e)) for e in exclude}
    q = qb.compile_master(master, policy, delta_zeta, rho_state=rho_state)
    info = {"escalations": 0, "qubo_bits": q.n_bits, "sample_meta": {}}
    for _ in range(policy.max_escalations + 1):
        stop = stop_builder(q) if stop_builder else None
        sset = backend(q, params, stop=stop)
        info["sample_meta"] = sset.metadata
        seen = {}
        for rec in sset:
            sol = qb.extract_solution(q, rec.bits)
            key = tuple(int(round(v)) for v in sol.y)
            if key in exclude or key in seen or not master.feasible_y(sol.y):
                continue
            seen[key] = (np.asarray(key, dtype=float), master.implied_objective(sol.y))
        if seen:
            ranked = sorted(seen.values(), key=lambda t: t[1])
            info["rho_state"] = {rec.name: (rec.rho, rec.escalations) for rec in q.penalties}
            return ranked[:k], info
        best = qb.extract_solution(q, sset.best.bits)
        try:
            q = qb.escalate_penalties(q, _y_level_violations(q, best.y, master.zeta_hi))
        except qb.PenaltyBudgetError:
            break
        info["escalations"] += 1
    info["rho_state"] = {rec.name: (rec.rho, rec.escalations) for rec in q.penalties}
    return [], info


def _y_level_violations(q, y, zeta_hi):
    """Row violations attributable to the integer point itself: for zeta-free
    rows the plain inequality residual, for optimality-cut rows the amount by
    which even the largest encodable surrogate misses the requirement."""
    out = []
    for rec in q.penalties:
        need = rec.rhs - float(rec.ycoef @ y)
        if rec.zcoef != 0.0:
            out.append(max(0.0, need - rec.zcoef * zeta_hi))
        else:
            out.append(max(0.0, need))
    return np.asarray(out)
