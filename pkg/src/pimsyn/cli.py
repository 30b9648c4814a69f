"""Command-line entry point: synth / ablate / convert-check.

Exit codes: 0 success, 1 usage or input errors, 2 infeasible constraints.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

from .dse import (DseConfig, WTDUP_ONES, WTDUP_PROPORTIONAL, WTDUP_SA,
                  run_dse)
from .errors import GlobalInfeasibilityError, PimsynError
from .hwconfig import DseDomains, load_hw_params
from .macroplan import EaConfig, decode_gene
from .model import load_model
from .reports import (write_ablation_csv, write_pareto_csv, write_result_json,
                      write_summary)
from .weightdup import SaConfig

HW_ENV_VAR = "PIMSYN_HW_PARAMS"

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INFEASIBLE = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        sys.exit(EXIT_ERROR)


def _build_parser() -> _Parser:
    parser = _Parser(prog="pimsyn",
                     description="Synthesize a crossbar PIM accelerator "
                                 "for a quantized CNN under a power budget.")
    sub = parser.add_subparsers(dest="command", required=True)

    synth = sub.add_parser("synth", help="run the full synthesis flow")
    _add_run_args(synth)

    ablate = sub.add_parser("ablate", help="run the design-space ablations")
    _add_run_args(ablate)

    check = sub.add_parser("convert-check",
                           help="validate a model description file")
    check.add_argument("model", help="model JSON file")
    return parser


def _add_run_args(cmd):
    cmd.add_argument("model", help="model JSON file")
    cmd.add_argument("--power", type=float, required=True,
                     help="total power budget in watts")
    cmd.add_argument("--hw", default=os.environ.get(HW_ENV_VAR),
                     help="hardware parameter file "
                          f"(default: ${HW_ENV_VAR} or packaged defaults)")
    cmd.add_argument("-o", "--out", default="out",
                     help="output directory (default: out/)")
    cmd.add_argument("--seed", type=int, default=2024, help="master seed")
    cmd.add_argument("--config", help="JSON config overriding domains/sa/ea")
    cmd.add_argument("--jobs", type=int, default=1,
                     help="parallel workers over outer design triples")
    cmd.add_argument("--no-weight-duplication", action="store_true",
                     help="force all duplication factors to 1")
    cmd.add_argument("--wtdup-proportional", action="store_true",
                     help="use the output-map-proportional duplication heuristic")
    cmd.add_argument("--identical-macros", action="store_true",
                     help="force identical component counts in every macro")
    cmd.add_argument("--no-macro-sharing", action="store_true",
                     help="disable inter-layer macro sharing")
    cmd.add_argument("--dump-candidates", action="store_true",
                     help="write the winning triple's duplication candidates CSV")
    cmd.add_argument("--dump-audit", action="store_true",
                     help="write the continuous-vs-integer allocation audit CSV")
    cmd.add_argument("--dump-dag", action="store_true",
                     help="write the winning point's dataflow graph dump")
    cmd.add_argument("--dump-trace", action="store_true",
                     help="write the winning point's event trace CSV")
    cmd.add_argument("--quiet", action="store_true")


def _config_from_args(args) -> DseConfig:
    domains = DseDomains()
    sa = SaConfig()
    ea = EaConfig()
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        if "domains" in doc:
            d = doc["domains"]
            domains = DseDomains(
                ratio_rram=tuple(d.get("ratio_rram", domains.ratio_rram)),
                xb_sizes=tuple(d.get("xb_sizes", domains.xb_sizes)),
                res_rram=tuple(d.get("res_rram", domains.res_rram)),
                res_dac=tuple(d.get("res_dac", domains.res_dac)),
                sa_top_k=d.get("sa_top_k", domains.sa_top_k))
        if "sa" in doc:
            sa = SaConfig(**{**sa.__dict__, **doc["sa"]})
        if "ea" in doc:
            ea = EaConfig(**{**ea.__dict__, **doc["ea"]})

    mode = WTDUP_SA
    if args.no_weight_duplication:
        mode = WTDUP_ONES
    elif args.wtdup_proportional:
        mode = WTDUP_PROPORTIONAL
    return DseConfig(domains=domains, sa=sa, ea=ea, master_seed=args.seed,
                     wtdup_mode=mode,
                     identical_macros=args.identical_macros,
                     enable_sharing=not args.no_macro_sharing,
                     jobs=args.jobs)


def _run_meta(args, cfg: DseConfig) -> dict:
    return {
        "model_path": str(args.model),
        "hw_path": str(args.hw) if args.hw else "builtin:isaac_like",
        "total_power_w": args.power,
        "master_seed": cfg.master_seed,
        "wtdup_mode": cfg.wtdup_mode,
        "identical_macros": cfg.identical_macros,
        "enable_sharing": cfg.enable_sharing,
    }


def _cmd_synth(args) -> int:
    model = load_model(args.model)
    hw = load_hw_params(args.hw)
    cfg = _config_from_args(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        result = run_dse(model, hw, args.power, cfg)
    except GlobalInfeasibilityError as exc:
        sys.stderr.write(f"infeasible: {exc}\n")
        return EXIT_INFEASIBLE
    meta = _run_meta(args, cfg)
    write_summary(out / "summary.txt", result, model, meta)
    write_result_json(out / "result.json", result, meta)
    write_pareto_csv(out / "pareto.csv", result)
    _write_optional_dumps(args, cfg, model, hw, result, out)
    if not args.quiet:
        with open(out / "summary.txt", "r", encoding="utf-8") as fh:
            sys.stdout.write(fh.read())
        sys.stdout.write(f"(explored {result.explored_count} points in "
                         f"{result.wall_time_s:.1f}s on the {result.backend} "
                         "kernel)\n")
    return EXIT_OK


def _write_optional_dumps(args, cfg, model, hw, result, out: Path) -> None:
    from .dse import best_point_audit, best_point_candidates, rebuild_point
    from .dse import resimulate_point
    from .dataflow import dump_dag
    from .reports import (write_alloc_audit_csv, write_candidates_csv,
                          write_trace_csv)

    point = result.best_point
    if args.dump_candidates:
        candidates = best_point_candidates(point, model, hw, args.power, cfg)
        write_candidates_csv(out / "candidates.csv", candidates)
    if args.dump_audit:
        audit = best_point_audit(point, model, hw, args.power)
        write_alloc_audit_csv(out / "alloc_audit.csv", audit)
    if args.dump_dag:
        dag, _, _, _ = rebuild_point(point, model, hw, args.power)
        with open(out / "dataflow.txt", "w", encoding="utf-8") as fh:
            dump_dag(dag, fh)
    if args.dump_trace:
        _, trace = resimulate_point(point, model, hw, args.power,
                                    collect_trace=True)
        write_trace_csv(out / "trace.csv", trace)


def ablation_suite(model, hw, total_power: float, cfg: DseConfig, log=None):
    """The three design-space ablations, sharing one master seed.

    The sharing-enabled and specialized-macro runs are warm-started with the
    best gene of their restricted counterpart, so their search space is a
    strict superset and the comparison cannot be lost to search noise.
    """
    rows = []

    def record(variant, result):
        ev = result.best_eval
        rows.append({
            "variant": variant,
            "power_efficiency_tops_w": ev.power_efficiency_tops_w,
            "throughput_ops_s": ev.throughput_ops_s,
            "latency_s": ev.total_latency_s,
            "edp_js": ev.edp_js,
        })
        if log:
            log(f"{variant}: {ev.power_efficiency_tops_w:.4f} TOPS/W, "
                f"{ev.throughput_ops_s / 1e12:.4f} TOPS")
        return result

    ones = record("wtdup_ones",
                  run_dse(model, hw, total_power,
                          replace(cfg, wtdup_mode=WTDUP_ONES)))
    record("wtdup_proportional",
           run_dse(model, hw, total_power,
                   replace(cfg, wtdup_mode=WTDUP_PROPORTIONAL)))

    no_share = record("sharing_off",
                      run_dse(model, hw, total_power,
                              replace(cfg, enable_sharing=False)))
    warm = (decode_gene(no_share.best_point.mac_alloc, model),)
    share = record("sharing_on",
                   run_dse(model, hw, total_power,
                           replace(cfg, enable_sharing=True,
                                   warm_start_genes=warm)))

    identical = record("identical_macros",
                       run_dse(model, hw, total_power,
                               replace(cfg, identical_macros=True)))
    warm_spec = (decode_gene(identical.best_point.mac_alloc, model),)
    specialized = record("specialized_macros",
                         run_dse(model, hw, total_power,
                                 replace(cfg, identical_macros=False,
                                         warm_start_genes=warm_spec)))

    comparisons = {
        "weight_duplication_throughput_x":
            specialized.best_eval.throughput_ops_s
            / ones.best_eval.throughput_ops_s,
        "sharing_gain_pct":
            100.0 * (share.best_eval.power_efficiency_tops_w
                     / no_share.best_eval.power_efficiency_tops_w - 1.0),
        "specialized_gain_pct":
            100.0 * (specialized.best_eval.power_efficiency_tops_w
                     / identical.best_eval.power_efficiency_tops_w - 1.0),
    }
    return rows, comparisons


def _cmd_ablate(args) -> int:
    model = load_model(args.model)
    hw = load_hw_params(args.hw)
    cfg = _config_from_args(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    log = None if args.quiet else (lambda msg: sys.stdout.write(msg + "\n"))
    try:
        rows, comparisons = ablation_suite(model, hw, args.power, cfg, log=log)
    except GlobalInfeasibilityError as exc:
        sys.stderr.write(f"infeasible: {exc}\n")
        return EXIT_INFEASIBLE
    write_ablation_csv(out / "ablation.csv", rows)
    with open(out / "ablation_summary.txt", "w", encoding="utf-8") as fh:
        for key, value in comparisons.items():
            fh.write(f"{key}: {value:.4f}\n")
    if not args.quiet:
        for key, value in comparisons.items():
            sys.stdout.write(f"{key}: {value:.4f}\n")
    return EXIT_OK


def _cmd_convert_check(args) -> int:
    model = load_model(args.model)
    sys.stdout.write(f"name: {model.name}\n")
    sys.stdout.write(f"layers: {len(model.layers)}\n")
    sys.stdout.write(f"weight_bearing: {len(model.weight_bearing)}\n")
    for layer in model.layers:
        tag = "wb" if layer.weight_bearing else "alu"
        sys.stdout.write(
            f"  {layer.index:>3} {layer.kind:<12} {tag} "
            f"k={layer.kernel} {layer.c_in}->{layer.c_out} "
            f"{layer.out_w}x{layer.out_h}\n")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "synth":
            return _cmd_synth(args)
        if args.command == "ablate":
            return _cmd_ablate(args)
        if args.command == "convert-check":
            return _cmd_convert_check(args)
    except PimsynError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_ERROR
    except OSError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_ERROR
    parser.error("unknown command")
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
