"""Command-line front end.

Verbs: generate (emit dataset files), stats (model size dump), solve (one
instance, one solver configuration), compare (instances x configurations with
CSV, plot-data and figures), extrapolate (best-case projection from a
mock-annealer report).

Configuration precedence: command-line flags > --config-file > defaults.
Exit codes: 0 solved within gap, 3 iteration/node limit, 4 infeasible,
5 unbounded, 6 bad input or internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import mes
from .model import load_problem, normalize, model_stats, ModelError
from .report import (RunReport, run_solver, attach_reference, write_csv,
                     write_plot_data, ordering_flags, extrapolate_best_case,
                     STATUS_EXIT_CODES, CONFIG_NAMES)


def _load_config_file(path):
    if not path:
        return {}
    with open(path) as fh:
        return json.load(fh)


def _overrides(args, file_cfg):
    """Merge config file with flag overrides (flags win)."""
    out = dict(file_cfg)
    for key in ("gap_tol", "max_iterations", "multi_cut_count", "delta_zeta", "seed"):
        val = getattr(args, key, None)
        if val is not None:
            out[key] = val
    sampler = dict(out.get("sampler", {}))
    for flag, key in (("reads", "reads"), ("repeats", "repeats"),
                      ("sub_qubo_limit", "sub_qubo_limit")):
        val = getattr(args, flag, None)
        if val is not None:
            sampler[key] = val
    if sampler:
        out["sampler"] = sampler
    mock = dict(out.get("mock", {}))
    for flag, key in (("capacity_bits", "capacity_bits"),
                      ("device_time", "task_device_time_s"),
                      ("queue_latency", "queue_latency_s")):
        val = getattr(args, flag, None)
        if val is not None:
            mock[key] = val
    if mock:
        out["mock"] = mock
    if getattr(args, "no_valid_inequalities", False):
        out["use_valid_inequalities"] = False
    if getattr(args, "no_relaxed_first", False):
        out["relaxed_master_first_iteration"] = False
    return out


def _load_instance(args):
    """Instance from --instance file (with optional sidecar) or the generator."""
    if args.instance:
        path = Path(args.instance)
        meta_path = Path(args.meta) if args.meta else Path(
            str(path).removesuffix(".json") + ".meta.json")
        if meta_path.exists():
            inst = mes.load_instance(path, meta_path)
            vi = mes.peak_demand_inequalities(inst)
            return inst.milp, inst.raw, vi, path.stem, inst.steps
        raw = load_problem(path)
        return normalize(raw), raw, None, path.stem, raw.metadata.get("time_steps")
    inst = mes.default_instance(args.seed or 0, args.steps)
    vi = mes.peak_demand_inequalities(inst)
    return inst.milp, inst.raw, vi, f"mes_t{args.steps}_seed{args.seed or 0}", inst.steps


def _jsonl_logger(path):
    fh = open(path, "w")

    def clean(v):
        if isinstance(v, float):
            return v if abs(v) != float("inf") else None
        if isinstance(v, dict):
            return {k: clean(x) for k, x in v.items()}
        if isinstance(v, (list, tuple)):
            return [clean(x) for x in v]
        return v

    def log(record):
        fh.write(json.dumps(clean(record), default=float) + "\n")
        fh.flush()
    return log, fh


def cmd_generate(args):
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    steps = [int(s) for s in args.steps.split(",")]
    for t in steps:
        inst = mes.default_instance(args.seed, t)
        stem = f"mes_t{t}_seed{args.seed}"
        mes.save_instance(inst, outdir / f"{stem}.json", outdir / f"{stem}.meta.json")
        print(f"wrote {outdir / (stem + '.json')} (+ sidecar)")
    return 0


def cmd_stats(args):
    milp, raw, vi, label, t = _load_instance(args)
    stats = model_stats(milp)
    stats["instance"] = label
    if t is not None:
        stats["time_steps"] = t
    if vi is not None:
        stats["valid_inequality_rows"] = len(vi)
    from .model import classify_constraints, ConstraintClass
    classes = classify_constraints(milp)
    stats["pure_integer_rows"] = sum(
        1 for c in classes if c is ConstraintClass.PURE_INTEGER)
    print(json.dumps(stats, indent=1))
    return 0


def cmd_solve(args):
    milp, raw, vi, label, t = _load_instance(args)
    overrides = _overrides(args, _load_config_file(args.config_file))
    log, fh = (None, None)
    if args.log:
        log, fh = _jsonl_logger(args.log)
    try:
        rep = run_solver(None, args.solver, overrides, instance_label=label,
                         log=log, milp=milp, raw=raw, vi_rows=vi)
    finally:
        if fh:
            fh.close()
    if t is not None:
        rep.meta["time_steps"] = t
    out_path = args.out or f"{label}_{args.solver}.report.json"
    rep.to_json(out_path)
    print(f"{label} [{args.solver}]: {rep.status}"
          + (f" objective={rep.objective:.6g}" if rep.objective is not None else "")
          + (f" gap={rep.gap_static:.4f}" if rep.gap_static is not None else "")
          + f" iterations={rep.iterations} -> {out_path}")
    return STATUS_EXIT_CODES.get(rep.status, 6)


def cmd_compare(args):
    from . import plots
    outdir = Path(args.out_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    steps = [int(s) for s in args.steps.split(",")]
    configs = [c.strip() for c in args.configs.split(",")]
    for c in configs:
        if c not in CONFIG_NAMES:
            print(f"unknown configuration {c!r}", file=sys.stderr)
            return 6
    file_cfg = _load_config_file(args.config_file)
    reports = []
    for t in steps:
        inst = mes.default_instance(args.seed, t)
        vi = mes.peak_demand_inequalities(inst)
        label = f"mes_t{t}_seed{args.seed}"
        per_instance = []
        for cname in configs:
            sweep = [None]
            if args.multi_cut_sweep and cname.startswith("benders"):
                sweep = [1, 2, 3]
            for s in sweep:
                overrides = _overrides(args, file_cfg)
                overrides.setdefault("seed", args.seed)
                if s is not None:
                    overrides["multi_cut_count"] = s
                try:
                    rep = run_solver(None, cname, overrides, instance_label=label,
                                     milp=inst.milp, raw=inst.raw, vi_rows=vi)
                except Exception as exc:  # record, keep comparing
                    rep = RunReport(instance=label, config=cname, status="error",
                                    meta={"error": str(exc)})
                if s is not None and s != 1:
                    rep.config = f"{cname}-s{s}"
                rep.meta["time_steps"] = t
                per_instance.append(rep)
        ref = next((r for r in per_instance if r.config == "direct"), None)
        if ref:
            attach_reference(per_instance, ref)
        reports.extend(per_instance)
        for r in per_instance:
            print(f"  {label} [{r.config}]: {r.status} obj="
                  f"{r.objective if r.objective is None else round(r.objective, 2)} "
                  f"total={r.timings.get('total', 0):.2f}s")
    write_csv(reports, outdir / "compare.csv")
    write_plot_data(reports, outdir / "compare_plotdata.csv")
    plots.save_comparison_figure(reports, outdir / "compare_times.png")
    qa_reports = [r for r in reports if r.config == "benders-qa"]
    if qa_reports:
        plots.save_breakdown_figure(qa_reports, outdir / "compare_breakdown.png",
                                    config="benders-qa")
    flags = ordering_flags(reports)
    with open(outdir / "compare_flags.txt", "w") as fh:
        for f in flags:
            fh.write(f + "\n")
    for f in flags:
        print(f"FLAG: {f}")
    print(f"wrote {outdir}/compare.csv, compare_plotdata.csv, compare_times.png"
          + (", compare_breakdown.png" if qa_reports else ""))
    return 0


def cmd_extrapolate(args):
    from . import plots
    rep = RunReport.from_json(args.report)
    try:
        best = extrapolate_best_case(rep)
    except ValueError as exc:
        print(str(exc), file=sys.stderr)
        return 6
    out_path = args.out or str(Path(args.report).with_suffix("")) + ".best_case.json"
    with open(out_path, "w") as fh:
        json.dump(best, fh, indent=1)
        fh.write("\n")
    if args.figure:
        plots.save_extrapolation_figure([best], args.figure)
    print(f"raw total {best['raw_total_s']:.4g}s -> best case "
          f"{best['best_case_total_s']:.4g}s ({out_path})")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="qbenders",
                                description="Benders MILP solver with QUBO "
                                            "master backends and MES benchmark")
    sub = p.add_subparsers(dest="verb", required=True)

    def add_instance_args(sp):
        sp.add_argument("--instance", help="problem file (JSON)")
        sp.add_argument("--meta", help="sidecar metadata file for MES instances")
        sp.add_argument("--steps", type=int, default=2,
                        help="typical time steps for a generated instance")
        sp.add_argument("--seed", type=int, default=None)

    def add_solver_args(sp):
        sp.add_argument("--config-file", help="JSON file of solver settings")
        sp.add_argument("--gap-tol", dest="gap_tol", type=float, default=None)
        sp.add_argument("--max-iterations", dest="max_iterations", type=int,
                        default=None)
        sp.add_argument("--multi-cut", dest="multi_cut_count", type=int, default=None)
        sp.add_argument("--delta-zeta", dest="delta_zeta", type=float, default=None)
        sp.add_argument("--reads", type=int, default=None)
        sp.add_argument("--repeats", type=int, default=None)
        sp.add_argument("--sub-qubo-limit", dest="sub_qubo_limit", type=int,
                        default=None)
        sp.add_argument("--capacity-bits", dest="capacity_bits", type=int,
                        default=None)
        sp.add_argument("--device-time", dest="device_time", type=float, default=None)
        sp.add_argument("--queue-latency", dest="queue_latency", type=float,
                        default=None)
        sp.add_argument("--no-valid-inequalities", action="store_true")
        sp.add_argument("--no-relaxed-first", action="store_true")

    sp = sub.add_parser("generate", help="emit MES dataset files")
    sp.add_argument("--steps", default="2,3,4,5")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", default="datasets")
    sp.set_defaults(func=cmd_generate)

    sp = sub.add_parser("stats", help="model size summary")
    add_instance_args(sp)
    sp.set_defaults(func=cmd_stats)

    sp = sub.add_parser("solve", help="run one solver configuration")
    add_instance_args(sp)
    add_solver_args(sp)
    sp.add_argument("--solver", default="benders-qa", choices=CONFIG_NAMES)
    sp.add_argument("--out", help="report JSON path")
    sp.add_argument("--log", help="run log JSONL path")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("compare", help="instances x configurations benchmark")
    add_solver_args(sp)
    sp.add_argument("--steps", default="2,3,4,5")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--configs", default=",".join(CONFIG_NAMES))
    sp.add_argument("--multi-cut-sweep", action="store_true",
                    help="run benders configs at 1, 2 and 3 cuts per iteration")
    sp.add_argument("--out-dir", default="bench_out")
    sp.set_defaults(func=cmd_compare)

    sp = sub.add_parser("extrapolate", help="best-case projection from a report")
    sp.add_argument("--report", required=True)
    sp.add_argument("--out")
    sp.add_argument("--figure")
    sp.set_defaults(func=cmd_extrapolate)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ModelError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 6


if __name__ == "__main__":
    sys.exit(main())
