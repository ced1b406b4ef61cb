"""Multi-energy-system design instances.

Generates the case-study MILP: heat pump, compression chiller, CHP engine,
photovoltaic and battery supplying heating, cooling and electricity demand
over T typical time steps.  Purchase binaries, per-step on/off and two-segment
part-load binaries, and storage charge/discharge binaries make up the integer
block; the layout is fixed at 8T+4 binaries and 10T+1 continuous variables.

Dispatchable units come as fixed candidate sizes with a purchase decision;
PV capacity is continuous (with a purchase binary gating it); the battery is
an always-available fixed-size store, so it contributes neither a purchase
binary nor a capacity variable.  Storage balance is cyclic: step T wraps to
step 1.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .model import RawMilp, StandardMilp, normalize, ModelError

HEAT, COOL, ELEC = "heat", "cool", "elec"
DISPATCHABLE = ("hp", "ch", "chp")


@dataclass
class ComponentSpec:
    kind: str
    cap: float                  # MW (PV: upper bound on built capacity; battery: MWh)
    invest_annual: float        # currency/yr (PV: currency/MW/yr)
    op_cost: float = 0.0        # currency/MWh of output
    cop: float = None           # heat pump: heat out per elec in
    eer: float = None           # chiller: cool out per elec in
    eta_e: float = None         # CHP: elec out per gas in
    heat_ratio: float = None    # CHP: heat out per elec out
    min_load: float = 0.0       # fraction of cap
    seg_break: float = 1.0      # part-load breakpoint as fraction of cap
    seg2_extra: float = 0.0     # extra input per MWh of output above the breakpoint
    eff_charge: float = None    # battery
    eff_discharge: float = None
    charge_max: float = None    # MW
    discharge_max: float = None
    throughput_cost: float = 0.0

    def __post_init__(self):
        for eff in (self.eff_charge, self.eff_discharge):
            if eff is not None and not (0.0 < eff <= 1.0):
                raise ModelError(f"{self.kind}: efficiency {eff} outside (0, 1]")
        if not (0.0 <= self.min_load < 1.0):
            raise ModelError(f"{self.kind}: min_load {self.min_load} outside [0, 1)")
        if self.cap < 0:
            raise ModelError(f"{self.kind}: negative capacity")


@dataclass
class DemandProfile:
    heat: np.ndarray        # MW per typical step
    cool: np.ndarray
    elec: np.ndarray
    weight_h: np.ndarray    # hours represented by each step
    pv_avail: np.ndarray    # in [0, 1]

    def __post_init__(self):
        for name in ("heat", "cool", "elec", "weight_h", "pv_avail"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        t = len(self.weight_h)
        for name in ("heat", "cool", "elec", "pv_avail"):
            if len(getattr(self, name)) != t:
                raise ModelError(f"profile field {name} length != {t}")
        if np.any(self.weight_h <= 0):
            raise ModelError("time-step weights must be positive")
        if self.heat.min(initial=0) < 0 or self.cool.min(initial=0) < 0 \
                or self.elec.min(initial=0) < 0:
            raise ModelError("demands must be nonnegative")
        if self.pv_avail.min(initial=0) < 0 or self.pv_avail.max(initial=0) > 1:
            raise ModelError("pv availability must lie in [0, 1]")

    @property
    def steps(self):
        return len(self.weight_h)


@dataclass
class Prices:
    grid_elec: float
    gas: float


@dataclass
class MesInstance:
    components: dict
    profile: DemandProfile
    prices: Prices
    raw: RawMilp
    milp: StandardMilp
    seed: int = None

    @property
    def steps(self):
        return self.profile.steps

    def int_index(self, name):
        return self.milp.record.int_names.index(name)


def build_instance(components: dict, profile: DemandProfile, prices: Prices,
                   seed=None) -> MesInstance:
    """Assemble the MILP.  Raises ModelError when the candidate fleet cannot
    structurally cover a positive demand."""
    hp, ch, chp = components["hp"], components["ch"], components["chp"]
    pv, batt = components["pv"], components["battery"]
    T = profile.steps

    heat_cap = hp.cap + chp.heat_ratio * chp.cap
    if profile.heat.max(initial=0.0) > heat_cap + 1e-9:
        raise ModelError(f"peak heating demand {profile.heat.max():.3f} MW exceeds "
                         f"purchasable heat capacity {heat_cap:.3f} MW")
    if profile.cool.max(initial=0.0) > ch.cap + 1e-9:
        raise ModelError(f"peak cooling demand {profile.cool.max():.3f} MW exceeds "
                         f"chiller capacity {ch.cap:.3f} MW")

    raw = RawMilp(name=f"mes_t{T}")
    raw.metadata["time_steps"] = T

    # continuous block: 10 per step + PV capacity
    for t in range(T):
        w = profile.weight_h[t]
        raw.add_var(f"op_hp_{t}", cost=w * hp.op_cost)
        raw.add_var(f"op_ch_{t}", cost=w * ch.op_cost)
        raw.add_var(f"op_chp_{t}", cost=w * (chp.op_cost + prices.gas / chp.eta_e))
        raw.add_var(f"seg_hp_{t}")                       # extra elec lands in the balance
        raw.add_var(f"seg_ch_{t}")
        raw.add_var(f"seg_chp_{t}", cost=w * prices.gas * chp.seg2_extra)
        raw.add_var(f"soc_{t}")
        raw.add_var(f"chgf_{t}", cost=w * batt.throughput_cost)
        raw.add_var(f"disf_{t}")
        raw.add_var(f"grid_{t}", cost=w * prices.grid_elec)
    raw.add_var("cap_pv", cost=pv.invest_annual)

    # integer block: 8 per step + 4 purchases
    for t in range(T):
        for u in DISPATCHABLE:
            raw.add_var(f"on_{u}_{t}", kind="integer", ub=1)
        for u in DISPATCHABLE:
            raw.add_var(f"mode_{u}_{t}", kind="integer", ub=1)
        raw.add_var(f"chg_{t}", kind="integer", ub=1)
        raw.add_var(f"dis_{t}", kind="integer", ub=1)
    raw.add_var("buy_hp", kind="integer", ub=1, cost=hp.invest_annual)
    raw.add_var("buy_ch", kind="integer", ub=1, cost=ch.invest_annual)
    raw.add_var("buy_chp", kind="integer", ub=1, cost=chp.invest_annual)
    raw.add_var("buy_pv", kind="integer", ub=1)

    for t in range(T):
        raw.add_constr(f"heat_balance_{t}",
                       {f"op_hp_{t}": 1.0, f"op_chp_{t}": chp.heat_ratio},
                       ">=", float(profile.heat[t]))
        raw.add_constr(f"cool_balance_{t}", {f"op_ch_{t}": 1.0},
                       ">=", float(profile.cool[t]))
        raw.add_constr(
            f"elec_balance_{t}",
            {f"grid_{t}": 1.0, f"op_chp_{t}": 1.0, "cap_pv": float(profile.pv_avail[t]),
             f"disf_{t}": 1.0, f"chgf_{t}": -1.0,
             f"op_hp_{t}": -1.0 / hp.cop, f"seg_hp_{t}": -hp.seg2_extra,
             f"op_ch_{t}": -1.0 / ch.eer, f"seg_ch_{t}": -ch.seg2_extra},
            ">=", float(profile.elec[t]))
        for u, spec in (("hp", hp), ("ch", ch), ("chp", chp)):
            raw.add_constr(f"cap_link_{u}_{t}",
                           {f"op_{u}_{t}": 1.0, f"on_{u}_{t}": -spec.cap}, "<=", 0.0)
            # minimum part load with big-M = capacity: op >= ml*cap - cap*(1 - on)
            raw.add_constr(f"min_load_{u}_{t}",
                           {f"op_{u}_{t}": 1.0, f"on_{u}_{t}": -spec.cap},
                           ">=", (spec.min_load - 1.0) * spec.cap)
            raw.add_constr(f"seg_base_{u}_{t}",
                           {f"op_{u}_{t}": 1.0, f"seg_{u}_{t}": -1.0},
                           "<=", spec.seg_break * spec.cap)
            raw.add_constr(f"seg_gate_{u}_{t}",
                           {f"seg_{u}_{t}": 1.0,
                            f"mode_{u}_{t}": -(1.0 - spec.seg_break) * spec.cap},
                           "<=", 0.0)
            raw.add_constr(f"on_gate_{u}_{t}",
                           {f"on_{u}_{t}": 1.0, f"buy_{u}": -1.0}, "<=", 0.0)
            raw.add_constr(f"mode_gate_{u}_{t}",
                           {f"mode_{u}_{t}": 1.0, f"on_{u}_{t}": -1.0}, "<=", 0.0)
        nxt = (t + 1) % T
        w = profile.weight_h[t]
        raw.add_constr(f"storage_balance_{t}",
                       {f"soc_{nxt}": 1.0, f"soc_{t}": -1.0,
                        f"chgf_{t}": -batt.eff_charge * w,
                        f"disf_{t}": w / batt.eff_discharge},
                       "==", 0.0)
        raw.add_constr(f"soc_cap_{t}", {f"soc_{t}": 1.0}, "<=", batt.cap)
        raw.add_constr(f"charge_link_{t}",
                       {f"chgf_{t}": 1.0, f"chg_{t}": -batt.charge_max}, "<=", 0.0)
        raw.add_constr(f"discharge_link_{t}",
                       {f"disf_{t}": 1.0, f"dis_{t}": -batt.discharge_max}, "<=", 0.0)
        raw.add_constr(f"charge_xor_{t}", {f"chg_{t}": 1.0, f"dis_{t}": 1.0}, "<=", 1.0)
    raw.add_constr("pv_link", {"cap_pv": 1.0, "buy_pv": -pv.cap}, "<=", 0.0)

    milp = normalize(raw)
    return MesInstance(components=components, profile=profile, prices=prices,
                       raw=raw, milp=milp, seed=seed)


def peak_demand_inequalities(inst: MesInstance):
    """Valid inequalities over the master's binaries, all redundant for the
    MILP (implied by the balances plus capacity linking) but tightening the
    master: per energy form without a fallback supplier, (a) the summed
    purchased capacity covers the peak demand and (b) per time step, the
    summed capacity of units switched ON covers that step's demand.  The
    per-step tier spares the decomposition one feasibility cut per
    (step, form) it would otherwise have to discover.  Electricity is skipped:
    grid import is always available."""
    hp, ch, chp = (inst.components[u] for u in DISPATCHABLE)
    n_int = inst.milp.n_int
    rows = []

    def coverage_row(name, caps, demand):
        if demand <= 0:
            return
        if sum(c for _, c in caps) < demand - 1e-9:
            raise ModelError(f"valid inequality {name} infeasible: coverable "
                             f"capacity below demand {demand:.3f}")
        coef = np.zeros(n_int)
        for var, c in caps:
            coef[inst.int_index(var)] = c
        rows.append((name, coef, float(demand)))

    heat_caps = [("buy_hp", hp.cap), ("buy_chp", chp.heat_ratio * chp.cap)]
    coverage_row("vi_peak_heat", heat_caps, float(inst.profile.heat.max(initial=0.0)))
    coverage_row("vi_peak_cool", [("buy_ch", ch.cap)],
                 float(inst.profile.cool.max(initial=0.0)))
    for t in range(inst.steps):
        coverage_row(f"vi_step_heat_{t}",
                     [(f"on_hp_{t}", hp.cap), (f"on_chp_{t}", chp.heat_ratio * chp.cap)],
                     float(inst.profile.heat[t]))
        coverage_row(f"vi_step_cool_{t}", [(f"on_ch_{t}", ch.cap)],
                     float(inst.profile.cool[t]))
    return rows


def default_dataset(seed: int = 0, steps: int = 2):
    """Deterministic synthetic dataset: fixed component fleet, seeded demand
    jitter.  Magnitudes are tuned so optimal annual costs land near 1e5 and
    the root LP relaxation stays within the 5% protocol gap."""
    rng = np.random.default_rng(seed)
    T = steps

    def jitter(scale=0.1, n=T):
        return 1.0 + rng.uniform(-scale, scale, n)

    season = np.linspace(1.3, 0.7, T)
    profile = DemandProfile(
        heat=np.round(1.5 * season * jitter(), 4),
        cool=np.round(0.7 * season[::-1] * jitter(), 4),
        elec=np.round(0.9 * jitter(0.15), 4),
        weight_h=np.full(T, 8760.0 / T),
        pv_avail=np.round(np.clip(0.18 * season[::-1] * jitter(0.2), 0.05, 0.35), 4),
    )
    prices = Prices(grid_elec=float(np.round(55.0 * (1 + rng.uniform(-0.1, 0.1)), 3)),
                    gas=float(np.round(18.0 * (1 + rng.uniform(-0.1, 0.1)), 3)))
    # investment annuities and minimum part loads kept small relative to the
    # operating cost so the root LP relaxation stays comfortably inside the
    # 5% protocol gap on every T
    components = {
        "hp": ComponentSpec(kind="hp", cap=3.0, invest_annual=2000.0, op_cost=1.5,
                            cop=3.5, min_load=0.05, seg_break=0.7, seg2_extra=0.05),
        "ch": ComponentSpec(kind="ch", cap=2.0, invest_annual=1200.0, op_cost=1.0,
                            eer=4.0, min_load=0.05, seg_break=0.75, seg2_extra=0.04),
        "chp": ComponentSpec(kind="chp", cap=1.5, invest_annual=3500.0, op_cost=2.0,
                             eta_e=0.38, heat_ratio=1.1, min_load=0.10,
                             seg_break=0.7, seg2_extra=0.3),
        "pv": ComponentSpec(kind="pv", cap=1.5, invest_annual=1200.0),
        "battery": ComponentSpec(kind="battery", cap=1.5, invest_annual=0.0,
                                 eff_charge=0.92, eff_discharge=0.92,
                                 charge_max=0.8, discharge_max=0.8,
                                 throughput_cost=2.0),
    }
    return components, profile, prices


def default_instance(seed: int = 0, steps: int = 2) -> MesInstance:
    components, profile, prices = default_dataset(seed, steps)
    return build_instance(components, profile, prices, seed=seed)


# ---------------------------------------------------------------------------
# Dataset files: the core problem format plus a sidecar with the component,
# profile and price tables.

def save_instance(inst: MesInstance, problem_path, meta_path):
    from .model import save_problem
    save_problem(inst.raw, problem_path)
    meta = {
        "format": "qbenders-mes-meta",
        "version": 1,
        "seed": inst.seed,
        "time_steps": inst.steps,
        "prices": asdict(inst.prices),
        "components": {k: {f: v for f, v in asdict(spec).items() if v is not None}
                       for k, spec in inst.components.items()},
        "profile": {
            "heat": inst.profile.heat.tolist(),
            "cool": inst.profile.cool.tolist(),
            "elec": inst.profile.elec.tolist(),
            "weight_h": inst.profile.weight_h.tolist(),
            "pv_avail": inst.profile.pv_avail.tolist(),
        },
    }
    with open(meta_path, "w") as fh:
        json.dump(meta, fh, indent=1)
        fh.write("\n")


def load_instance(problem_path, meta_path) -> MesInstance:
    from .model import load_problem
    raw = load_problem(problem_path)
    with open(meta_path) as fh:
        meta = json.load(fh)
    profile = DemandProfile(**meta["profile"])
    prices = Prices(**meta["prices"])
    components = {k: ComponentSpec(**v) for k, v in meta["components"].items()}
    return MesInstance(components=components, profile=profile, prices=prices,
                       raw=raw, milp=normalize(raw), seed=meta.get("seed"))
