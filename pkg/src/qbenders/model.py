"""Canonical MILP representation and standard-form normalization.

Everything downstream (LP solver, decomposition engine, QUBO compiler) works
on a `StandardMilp`: minimize c.x + d.y subject to A x + B y >= b with
x >= 0 continuous and y >= 0 integer with finite upper bounds.  Models are
built as a `RawMilp` (mixed senses, general bounds) and normalized once;
the normalization keeps a reversible record so solutions can be reported in
the original variable space.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

CONTINUOUS = "continuous"
INTEGER = "integer"

SENSES = ("<=", "==", ">=")


class ModelError(ValueError):
    """Raised for structurally invalid models (bad bounds, dimensions, senses)."""


class ConstraintClass(Enum):
    PURE_INTEGER = "pure_integer"
    MIXED = "mixed"
    PURE_CONTINUOUS = "pure_continuous"


@dataclass
class RawVariable:
    name: str
    kind: str = CONTINUOUS
    lb: float = 0.0
    ub: float = math.inf
    cost: float = 0.0


@dataclass
class RawConstraint:
    name: str
    coeffs: dict  # var name -> coefficient, sparse
    sense: str
    rhs: float


@dataclass
class RawMilp:
    """Mixed-sense MILP builder; the on-disk problem format mirrors this."""

    name: str = "problem"
    variables: list = field(default_factory=list)
    constraints: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def add_var(self, name, kind=CONTINUOUS, lb=0.0, ub=math.inf, cost=0.0):
        if kind not in (CONTINUOUS, INTEGER):
            raise ModelError(f"unknown variable kind {kind!r}")
        if any(v.name == name for v in self.variables):
            raise ModelError(f"duplicate variable {name!r}")
        if not (lb <= ub):
            raise ModelError(f"variable {name!r} has empty domain [{lb}, {ub}]")
        self.variables.append(RawVariable(name, kind, float(lb), float(ub), float(cost)))
        return name

    def add_constr(self, name, coeffs, sense, rhs):
        if sense not in SENSES:
            raise ModelError(f"constraint {name!r}: unknown sense {sense!r}")
        if not coeffs:
            raise ModelError(f"constraint {name!r} has no coefficients")
        known = {v.name for v in self.variables}
        for vn in coeffs:
            if vn not in known:
                raise ModelError(f"constraint {name!r} references unknown variable {vn!r}")
        self.constraints.append(RawConstraint(name, dict(coeffs), sense, float(rhs)))
        return name

    def var(self, name):
        for v in self.variables:
            if v.name == name:
                return v
        raise KeyError(name)

    def objective_value(self, assignment):
        return sum(v.cost * assignment[v.name] for v in self.variables)

    def check_feasible(self, assignment, tol=1e-6):
        """Feasibility of a name->value assignment against the raw model."""
        for v in self.variables:
            val = assignment[v.name]
            if val < v.lb - tol or val > v.ub + tol:
                return False
            if v.kind == INTEGER and abs(val - round(val)) > tol:
                return False
        for con in self.constraints:
            lhs = sum(coef * assignment[vn] for vn, coef in con.coeffs.items())
            if con.sense == ">=" and lhs < con.rhs - tol:
                return False
            if con.sense == "<=" and lhs > con.rhs + tol:
                return False
            if con.sense == "==" and abs(lhs - con.rhs) > tol:
                return False
        return True


@dataclass
class TripletMatrix:
    """Sparse triplet storage with an optional cached dense view."""

    shape: tuple
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    _dense: np.ndarray = field(default=None, repr=False, compare=False)

    @classmethod
    def from_entries(cls, shape, entries):
        if entries:
            rr, cc, vv = zip(*entries)
        else:
            rr, cc, vv = (), (), ()
        return cls(shape, np.asarray(rr, dtype=np.intp), np.asarray(cc, dtype=np.intp),
                   np.asarray(vv, dtype=float))

    def to_dense(self):
        if self._dense is None:
            dense = np.zeros(self.shape)
            np.add.at(dense, (self.rows, self.cols), self.vals)
            self._dense = dense
        return self._dense

    def row_nonzero(self):
        """Boolean mask: rows with at least one structurally nonzero entry."""
        mask = np.zeros(self.shape[0], dtype=bool)
        mask[self.rows[self.vals != 0.0]] = True
        return mask


@dataclass
class NormalizationRecord:
    """Reversible record of the raw -> standard transform."""

    cont_names: list
    int_names: list
    cont_shift: np.ndarray   # raw lower bounds subtracted from x
    int_shift: np.ndarray    # raw lower bounds subtracted from y
    obj_offset: float        # constant dropped from the objective
    row_names: list


@dataclass
class StandardMilp:
    """min c.x + d.y  s.t.  A x + B y >= b,  x >= 0,  0 <= y <= int_upper, y integer."""

    n_cont: int
    n_int: int
    c: np.ndarray
    d_cost: np.ndarray
    a: TripletMatrix
    b_mat: TripletMatrix
    b: np.ndarray
    int_upper: np.ndarray
    record: NormalizationRecord

    def __post_init__(self):
        rows = len(self.b)
        if self.a.shape != (rows, self.n_cont) or self.b_mat.shape != (rows, self.n_int):
            raise ModelError("A/B row counts must both equal len(b)")
        if len(self.c) != self.n_cont or len(self.d_cost) != self.n_int:
            raise ModelError("cost vector lengths do not match variable counts")
        if len(self.int_upper) != self.n_int:
            raise ModelError("int_upper length does not match integer count")
        bad = np.flatnonzero(~np.isfinite(self.int_upper) | (self.int_upper < 0))
        if bad.size:
            name = self.record.int_names[bad[0]]
            raise ModelError(f"integer variable {name!r} lacks a finite nonnegative upper bound")

    @property
    def n_rows(self):
        return len(self.b)

    def denormalize(self, x, y):
        """Map a standard-space point back to raw variable values by name."""
        out = {}
        for j, name in enumerate(self.record.cont_names):
            out[name] = float(x[j] + self.record.cont_shift[j])
        for j, name in enumerate(self.record.int_names):
            out[name] = float(y[j] + self.record.int_shift[j])
        return out

    def objective(self, x, y):
        return float(self.c @ x + self.d_cost @ y)


@dataclass
class LpProblem:
    """Plain LP: min c.x s.t. rows with mixed senses, lb <= x <= ub. No integrality."""

    c: np.ndarray
    a: np.ndarray          # dense rows x vars
    senses: list           # per row, one of '<=', '==', '>='
    b: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    obj_offset: float = 0.0

    @property
    def n_rows(self):
        return self.a.shape[0]

    @property
    def n_vars(self):
        return self.a.shape[1]


def normalize(raw: RawMilp) -> StandardMilp:
    """Normalize a mixed-sense model: <= rows negated, == rows split into opposing
    >= rows, variables shifted so every lower bound is 0, finite continuous upper
    bounds materialized as rows.  Integer upper bounds stay data (the encoder and
    the branch-and-bound honor them directly)."""
    cont = [v for v in raw.variables if v.kind == CONTINUOUS]
    ints = [v for v in raw.variables if v.kind == INTEGER]
    for v in raw.variables:
        if not math.isfinite(v.lb):
            raise ModelError(f"variable {v.name!r} needs a finite lower bound")
    for v in ints:
        if not math.isfinite(v.ub):
            raise ModelError(f"integer variable {v.name!r} needs a finite upper bound")
        if abs(v.lb - round(v.lb)) > 1e-9 or abs(v.ub - round(v.ub)) > 1e-9:
            raise ModelError(f"integer variable {v.name!r} has non-integral bounds")

    cont_idx = {v.name: j for j, v in enumerate(cont)}
    int_idx = {v.name: j for j, v in enumerate(ints)}
    cont_shift = np.array([v.lb for v in cont])
    int_shift = np.array([round(v.lb) for v in ints], dtype=float)
    obj_offset = sum(v.cost * v.lb for v in raw.variables)

    a_entries, b_entries, rhs, row_names = [], [], [], []

    def emit(coeffs, rhs_val, name, negate=False):
        sign = -1.0 if negate else 1.0
        row = len(rhs)
        shift_amount = 0.0
        for vn, coef in coeffs.items():
            coef = sign * coef
            if vn in cont_idx:
                j = cont_idx[vn]
                a_entries.append((row, j, coef))
                shift_amount += coef * cont_shift[j]
            else:
                j = int_idx[vn]
                b_entries.append((row, j, coef))
                shift_amount += coef * int_shift[j]
        rhs.append(sign * rhs_val - shift_amount)
        row_names.append(name)

    for con in raw.constraints:
        if con.sense == ">=":
            emit(con.coeffs, con.rhs, con.name)
        elif con.sense == "<=":
            emit(con.coeffs, con.rhs, con.name, negate=True)
        else:  # equality splits into two opposing inequalities
            emit(con.coeffs, con.rhs, con.name + "__ge")
            emit(con.coeffs, con.rhs, con.name + "__le", negate=True)

    # finite continuous upper bounds become -x >= -(ub - lb) rows
    for v in cont:
        if math.isfinite(v.ub):
            emit({v.name: -1.0}, -(v.ub), f"__ub_{v.name}")

    n_rows = len(rhs)
    record = NormalizationRecord(
        cont_names=[v.name for v in cont],
        int_names=[v.name for v in ints],
        cont_shift=cont_shift,
        int_shift=int_shift,
        obj_offset=obj_offset,
        row_names=row_names,
    )
    return StandardMilp(
        n_cont=len(cont),
        n_int=len(ints),
        c=np.array([v.cost for v in cont]),
        d_cost=np.array([v.cost for v in ints]),
        a=TripletMatrix.from_entries((n_rows, len(cont)), a_entries),
        b_mat=TripletMatrix.from_entries((n_rows, len(ints)), b_entries),
        b=np.asarray(rhs, dtype=float),
        int_upper=np.array([round(v.ub - v.lb) for v in ints], dtype=float),
        record=record,
    )


def classify_constraints(m: StandardMilp):
    """Per-row partition into PURE_INTEGER / MIXED / PURE_CONTINUOUS.

    Pure-integer rows (zero continuous part) are the ones routed to the
    decomposition master; everything else feeds the subproblem."""
    has_a = m.a.row_nonzero()
    has_b = m.b_mat.row_nonzero()
    out = []
    for i in range(m.n_rows):
        if has_b[i] and not has_a[i]:
            out.append(ConstraintClass.PURE_INTEGER)
        elif has_a[i] and not has_b[i]:
            out.append(ConstraintClass.PURE_CONTINUOUS)
        else:
            out.append(ConstraintClass.MIXED)
    return out


def lp_relaxation(m: StandardMilp) -> LpProblem:
    """Drop integrality, keep bounds and objective. Variables ordered x then y."""
    n = m.n_cont + m.n_int
    a = np.zeros((m.n_rows, n))
    a[:, : m.n_cont] = m.a.to_dense()
    a[:, m.n_cont:] = m.b_mat.to_dense()
    return LpProblem(
        c=np.concatenate([m.c, m.d_cost]),
        a=a,
        senses=[">="] * m.n_rows,
        b=m.b.copy(),
        lb=np.zeros(n),
        ub=np.concatenate([np.full(m.n_cont, math.inf), m.int_upper]),
        obj_offset=m.record.obj_offset,
    )


def fix_integers(m: StandardMilp, y_bar) -> LpProblem:
    """Restrict to continuous variables at fixed y: min c.x s.t. A x >= b - B y_bar.

    The constant d.y_bar lands in obj_offset so reported objectives stay comparable
    with the full model."""
    y_bar = np.asarray(y_bar, dtype=float)
    if y_bar.shape != (m.n_int,):
        raise ModelError(f"y_bar has length {y_bar.size}, expected {m.n_int}")
    rhs = m.b - m.b_mat.to_dense() @ y_bar
    return LpProblem(
        c=m.c.copy(),
        a=m.a.to_dense().copy(),
        senses=[">="] * m.n_rows,
        b=rhs,
        lb=np.zeros(m.n_cont),
        ub=np.full(m.n_cont, math.inf),
        obj_offset=float(m.d_cost @ y_bar) + m.record.obj_offset,
    )


def encoded_bit_count(upper: float, step: float = 1.0) -> int:
    """Bits needed to cover [0, upper] with weights step * 2^k (see qubo.encode_value)."""
    if upper <= 0:
        return 0
    k = 0
    while step * (2 ** (k + 1) - 1) < upper:
        k += 1
    return k + 1


def model_stats(m: StandardMilp) -> dict:
    """Instance-size summary: rows, total variables, continuous count, and the
    number of binaries the integer block occupies after binary encoding."""
    return {
        "constraints": m.n_rows,
        "variables": m.n_cont + m.n_int,
        "continuous": m.n_cont,
        "binary_after_encoding": int(sum(encoded_bit_count(u) for u in m.int_upper)),
    }


# ---------------------------------------------------------------------------
# Problem file format: a single JSON object, documented in README.  Floats are
# serialized with repr so load(save(m)) == m bit-exactly.

FORMAT_NAME = "qbenders-problem"
FORMAT_VERSION = 1


def save_problem(raw: RawMilp, path):
    doc = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "name": raw.name,
        "metadata": raw.metadata,
        "variables": [
            {
                "name": v.name,
                "kind": v.kind,
                "lb": v.lb,
                "ub": None if math.isinf(v.ub) else v.ub,
                "cost": v.cost,
            }
            for v in raw.variables
        ],
        "constraints": [
            {"name": c.name, "sense": c.sense, "rhs": c.rhs, "coeffs": c.coeffs}
            for c in raw.constraints
        ],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_problem(path) -> RawMilp:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format") != FORMAT_NAME:
        raise ModelError(f"{path}: not a {FORMAT_NAME} file")
    if doc.get("version") != FORMAT_VERSION:
        raise ModelError(f"{path}: unsupported format version {doc.get('version')!r}")
    raw = RawMilp(name=doc.get("name", "problem"), metadata=doc.get("metadata", {}))
    for v in doc["variables"]:
        ub = math.inf if v["ub"] is None else v["ub"]
        raw.add_var(v["name"], v["kind"], v["lb"], ub, v["cost"])
    for c in doc["constraints"]:
        raw.add_constr(c["name"], c["coeffs"], c["sense"], c["rhs"])
    return raw
