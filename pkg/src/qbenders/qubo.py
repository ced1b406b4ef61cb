"""Master-problem to QUBO compilation.

Bounded values (the continuous surrogate, integer variables, inequality
slacks) become weighted sums of bits with step delta: value = offset +
sum_k delta * 2^k * f_k, using the fewest bits that cover the range.  Every
>=-row is turned into an equality with a slack encoded over its violation-free
range and folded into the objective as rho * (lhs - rhs - slack)^2.  The
constant term is kept, so on feasible assignments the QUBO energy equals the
master objective; on every assignment the penalty identity

    energy(bits) = objective(decoded) + sum_i rho_i * residual_i^2

holds (exactly for integer-coefficient data, to rounding otherwise).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ZETA = "zeta"


class CompileError(ValueError):
    """Row not encodable (unsatisfiable over the box or slack range overflow)."""


class PenaltyBudgetError(RuntimeError):
    """All violated rows already exhausted their escalation budget."""


@dataclass
class BinaryEncoding:
    owner: str
    step: float
    k_max: int            # highest bit index; -1 encodes the constant `offset`
    offset: float
    bit_ids: list = field(default_factory=list)

    @property
    def num_bits(self):
        return self.k_max + 1

    @property
    def max_value(self):
        return self.offset + self.step *veclen(self.k_max)

    def decode(self, bits):
        bits = np.asarray(bits)
        if bits.size != self.num_bits:
            raise ValueError(f"{self.owner}: expected {self.num_bits} bits, got {bits.size}")
        weight = int(sum(1 << k for k in range(self.num_bits) if bits[k]))
        return self.offset + self.step * weight

    def quantize(self, value):
        """Nearest representable codeword (clipped into range)."""
        if self.num_bits == 0:
            return np.zeros(0, dtype=np.int8)
        code = int(round((value - self.offset) / self.step))
        code = min(max(code, 0), veclen(self.k_max))
        return np.array([(code >> k) & 1 for k in range(self.num_bits)], dtype=np.int8)


def veclen(k_max):
    return (1 << (k_max + 1)) - 1


def encode_value(lo: float, hi: float, step: float, owner: str = "value") -> BinaryEncoding:
    """Minimal-width encoding of [lo, hi]: smallest k_max with
    step * (2^(k_max+1) - 1) >= hi - lo.  hi == lo yields a zero-bit constant."""
    if step <= 0:
        raise ValueError("step must be positive")
    if hi < lo:
        raise ValueError(f"{owner}: empty range [{lo}, {hi}]")
    span = hi - lo
    if span == 0:
        return BinaryEncoding(owner, step, -1, lo)
    k = 0
    while step * veclen(k) < span:
        k += 1
        if k > 62:
            raise CompileError(f"{owner}: range {span} not encodable at step {step}")
    return BinaryEncoding(owner, step, k, lo)


def decode(enc: BinaryEncoding, bits):
    return enc.decode(bits)


@dataclass
class PenaltyPolicy:
    rho0: float = None          # None: 2 * bound of |master objective| over the box
    escalation_factor: float = 10.0
    max_escalations: int = 3


@dataclass
class PenaltyRecord:
    row: int                    # index into the compiled row list
    name: str
    rho: float
    escalations: int
    zcoef: float
    ycoef: np.ndarray
    rhs: float
    slack: BinaryEncoding
    integral: bool              # integer coefficients + unit slack step: exact residuals


@dataclass
class Qubo:
    n_bits: int
    linear: np.ndarray
    quad: np.ndarray            # strictly upper triangular, dense
    constant: float
    zeta_enc: BinaryEncoding = None
    y_encs: list = None
    penalties: list = None
    var_map: list = None        # per bit: (owner, bit index k)
    source: object = field(default=None, repr=False)   # master the QUBO was compiled from
    policy: PenaltyPolicy = field(default=None, repr=False)
    delta_zeta: float = None

    def energy(self, bits):
        bits = np.asarray(bits, dtype=float)
        if bits.shape != (self.n_bits,):
            raise ValueError(f"expected {self.n_bits} bits, got shape {bits.shape}")
        return float(self.constant + self.linear @ bits + bits @ self.quad @ bits)

    def energy_batch(self, bit_matrix):
        f = np.asarray(bit_matrix, dtype=float)
        return self.constant + f @ self.linear + np.einsum("ki,ij,kj->k", f, self.quad, f)


def _interval_max(zcoef, ycoef, zeta_lo, zeta_hi, int_upper):
    hi = zcoef * (zeta_hi if zcoef > 0 else zeta_lo)
    hi += float(np.where(ycoef > 0, ycoef * int_upper, 0.0).sum())
    return hi


def _is_integral(values, tol=1e-12):
    return bool(np.all(np.abs(values - np.round(values)) <= tol))


def default_rho0(d_cost, int_upper, zeta_lo, zeta_hi):
    """2 x interval bound of |zeta + d.y| over the encoded box."""
    lo = zeta_lo + float(np.minimum(d_cost, 0.0) @ int_upper)
    hi = zeta_hi + float(np.maximum(d_cost, 0.0) @ int_upper)
    return 2.0 * max(abs(lo), abs(hi), 0.5)


def _row_rho(rho0, zcoef, ycoef, integral):
    """Integer-coefficient rows keep the full rho0 (a unit violation then costs
    more than the whole objective span).  Rows with fractional data (cut rows:
    dual-sized coefficients, often ~1e5 here) get rho0 scaled by the squared
    row norm, otherwise their squared penalties dwarf the objective by many
    orders and no annealer can sample the landscape; violation-driven
    escalation recovers strictness where it is actually needed."""
    if integral:
        return rho0
    scale = max(1.0, abs(zcoef), float(np.abs(ycoef).max(initial=0.0)))
    return rho0 / (scale * scale)


def compile_master(master, policy: PenaltyPolicy = None, delta_zeta: float = 0.1,
                   rho_state: dict = None) -> Qubo:
    """Compile a master problem (duck-typed: d_cost, int_upper, zeta_lo, zeta_hi,
    ge_rows()) into a QUBO.  rho_state maps row name -> (rho, escalations) and
    carries penalty escalation across recompiles."""
    policy = policy or PenaltyPolicy()
    d_cost = np.asarray(master.d_cost, dtype=float)
    int_upper = np.asarray(master.int_upper, dtype=float)
    zeta_lo, zeta_hi = float(master.zeta_lo), float(master.zeta_hi)

    y_encs = [encode_value(0.0, ub, 1.0, owner=f"y{j}") for j, ub in enumerate(int_upper)]
    zeta_enc = encode_value(zeta_lo, zeta_hi, delta_zeta, owner=ZETA)

    rows = [(name, float(zc), np.asarray(yc, dtype=float), float(rhs))
            for (name, zc, yc, rhs) in master.ge_rows()]
    # encodings can overshoot declared bounds; pin such variables with bound rows
    for j, enc in enumerate(y_encs):
        if enc.max_value > int_upper[j] + 1e-9:
            yc = np.zeros(len(int_upper))
            yc[j] = -1.0
            rows.append((f"__bound_y{j}", 0.0, yc, -float(int_upper[j])))

    rho0 = policy.rho0 if policy.rho0 is not None else default_rho0(
        d_cost, int_upper, zeta_lo, zeta_hi)

    # assign bit ids: zeta block, then y blocks, then slack blocks
    var_map = []
    next_bit = 0

    def place(enc):
        nonlocal next_bit
        enc.bit_ids = list(range(next_bit, next_bit + enc.num_bits))
        var_map.extend((enc.owner, k) for k in range(enc.num_bits))
        next_bit += enc.num_bits

    place(zeta_enc)
    for enc in y_encs:
        place(enc)

    penalties = []
    for i, (name, zcoef, ycoef, rhs) in enumerate(rows):
        smax = _interval_max(zcoef, ycoef, zeta_lo, zeta_hi, int_upper) - rhs
        if smax < -1e-9:
            raise CompileError(f"row {name!r} unsatisfiable over the encoded box")
        integral = zcoef == 0.0 and _is_integral(ycoef) and _is_integral(np.array([rhs]))
        step = 1.0 if integral else delta_zeta
        smax = max(smax, 0.0)
        if integral:
            smax = round(smax)
        slack = encode_value(0.0, smax, step, owner=f"slack:{name}")
        place(slack)
        default = rho0 if policy.rho0 is not None else _row_rho(rho0, zcoef, ycoef, integral)
        rho, esc = (rho_state or {}).get(name, (default, 0))
        penalties.append(PenaltyRecord(i, name, rho, esc, zcoef, ycoef, rhs, slack, integral))

    n = next_bit
    linear = np.zeros(n)
    quad = np.zeros((n, n))
    constant = 0.0

    # objective: zeta + d.y
    constant += zeta_enc.offset
    for k, b in enumerate(zeta_enc.bit_ids):
        linear[b] += zeta_enc.step * (1 << k)
    for j, enc in enumerate(y_encs):
        for k, b in enumerate(enc.bit_ids):
            linear[b] += d_cost[j] * (1 << k)

    # penalties: rho * (sum_b w_b f_b + C)^2 with f^2 = f
    for rec in penalties:
        ids, weights = [], []
        for k, b in enumerate(zeta_enc.bit_ids):
            if rec.zcoef != 0.0:
                ids.append(b)
                weights.append(rec.zcoef * zeta_enc.step * (1 << k))
        for j, enc in enumerate(y_encs):
            if rec.ycoef[j] != 0.0:
                for k, b in enumerate(enc.bit_ids):
                    ids.append(b)
                    weights.append(rec.ycoef[j] * (1 << k))
        for k, b in enumerate(rec.slack.bit_ids):
            ids.append(b)
            weights.append(-rec.slack.step * (1 << k))
        cterm = rec.zcoef * zeta_enc.offset - rec.rhs  # variable offsets are all zero
        w = np.asarray(weights)
        rho = rec.rho
        constant += rho * cterm * cterm
        for t, b in enumerate(ids):
            linear[b] += rho * (w[t] * w[t] + 2.0 * cterm * w[t])
        for t1 in range(len(ids)):
            for t2 in range(t1 + 1, len(ids)):
                b1, b2 = ids[t1], ids[t2]
                lo_b, hi_b = (b1, b2) if b1 < b2 else (b2, b1)
                quad[lo_b, hi_b] += rho * 2.0 * w[t1] * w[t2]

    return Qubo(n_bits=n, linear=linear, quad=quad, constant=constant,
                zeta_enc=zeta_enc, y_encs=y_encs, penalties=penalties,
                var_map=var_map, source=master, policy=policy, delta_zeta=delta_zeta)


def energy(q: Qubo, bits):
    return q.energy(bits)


@dataclass
class ExtractedSolution:
    y: np.ndarray
    zeta: float
    slacks: np.ndarray
    residuals: np.ndarray        # lhs - rhs - slack, signed, per compiled row
    violations: np.ndarray       # |residuals|
    ineq_violations: np.ndarray  # max(0, rhs - lhs): violation of the >= row itself
    in_bounds: bool
    master_objective: float

    @property
    def feasible(self):
        tol = 1e-9
        return self.in_bounds and bool(np.all(self.ineq_violations <= tol))


def extract_solution(q: Qubo, bits) -> ExtractedSolution:
    """Decode a bit vector to (y, zeta), per-row residuals and violations."""
    bits = np.asarray(bits)
    if bits.size != q.n_bits:
        raise ValueError(f"expected {q.n_bits} bits, got {bits.size}")
    zeta = q.zeta_enc.decode(bits[q.zeta_enc.bit_ids]) if q.zeta_enc.num_bits else q.zeta_enc.offset
    y = np.array([enc.decode(bits[enc.bit_ids]) if enc.num_bits else enc.offset
                  for enc in q.y_encs])
    slacks, residuals, ineq = [], [], []
    in_bounds = True
    for j, enc in enumerate(q.y_encs):
        ub = q.source.int_upper[j] if q.source is not None else enc.max_value
        if y[j] > ub + 1e-9:
            in_bounds = False
    for rec in q.penalties:
        s = rec.slack.decode(bits[rec.slack.bit_ids]) if rec.slack.num_bits else rec.slack.offset
        lhs = rec.zcoef * zeta + float(rec.ycoef @ y)
        slacks.append(s)
        residuals.append(lhs - rec.rhs - s)
        ineq.append(max(0.0, rec.rhs - lhs))
    d_cost = np.asarray(q.source.d_cost, dtype=float) if q.source is not None else np.zeros(len(y))
    return ExtractedSolution(
        y=y, zeta=zeta, slacks=np.asarray(slacks), residuals=np.asarray(residuals),
        violations=np.abs(np.asarray(residuals)), ineq_violations=np.asarray(ineq),
        in_bounds=in_bounds, master_objective=float(zeta + d_cost @ y))


def escalate_penalties(q: Qubo, violations, tol: float = 1e-9) -> Qubo:
    """Recompile with rho scaled up on violated rows only.  No violations: identity.
    Raises PenaltyBudgetError once every violated row is out of escalations."""
    violations = np.asarray(violations)
    violated = [rec for rec, v in zip(q.penalties, violations) if v > tol]
    if not violated:
        return q
    fresh = [rec for rec in violated if rec.escalations < q.policy.max_escalations]
    if not fresh:
        raise PenaltyBudgetError(
            f"{len(violated)} violated rows, all at max escalations ({q.policy.max_escalations})")
    rho_state = {rec.name: (rec.rho, rec.escalations) for rec in q.penalties}
    for rec in fresh:
        rho_state[rec.name] = (rec.rho * q.policy.escalation_factor, rec.escalations + 1)
    return compile_master(q.source, q.policy, q.delta_zeta, rho_state=rho_state)


# ---------------------------------------------------------------------------
# Plain-text coordinate export: bit count, constant, linear list, quadratic
# triplets.  Floats are written with repr, so save/load round-trips bit-exactly.

QUBO_FORMAT = "qbenders-qubo 1"


def save_qubo(q: Qubo, path):
    with open(path, "w") as fh:
        fh.write(QUBO_FORMAT + "\n")
        fh.write(f"bits {q.n_bits}\n")
        fh.write(f"constant {q.constant!r}\n")
        for i in np.flatnonzero(q.linear):
            fh.write(f"linear {i} {q.linear[i]!r}\n")
        for i, j in zip(*np.nonzero(q.quad)):
            fh.write(f"quad {i} {j} {q.quad[i, j]!r}\n")


def load_qubo(path) -> Qubo:
    with open(path) as fh:
        header = fh.readline().strip()
        if header != QUBO_FORMAT:
            raise ValueError(f"{path}: not a {QUBO_FORMAT} file")
        n = None
        constant = 0.0
        lin_entries, quad_entries = [], []
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "bits":
                n = int(parts[1])
            elif parts[0] == "constant":
                constant = float(parts[1])
            elif parts[0] == "linear":
                lin_entries.append((int(parts[1]), float(parts[2])))
            elif parts[0] == "quad":
                quad_entries.append((int(parts[1]), int(parts[2]), float(parts[3])))
            else:
                raise ValueError(f"{path}: unknown record {parts[0]!r}")
    if n is None:
        raise ValueError(f"{path}: missing bit count")
    linear = np.zeros(n)
    quad = np.zeros((n, n))
    for i, v in lin_entries:
        linear[i] = v
    for i, j, v in quad_entries:
        quad[i, j] = v
    return Qubo(n_bits=n, linear=linear, quad=quad, constant=constant,
                zeta_enc=BinaryEncoding(ZETA, 1.0, -1, 0.0), y_encs=[], penalties=[],
                var_map=[])
