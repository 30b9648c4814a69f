"""Report emission: human summary, machine-readable result, plot CSVs.

result.json is canonical (sorted keys, fixed separators, no timestamps), so
two runs with the same master seed produce byte-identical files.
"""

from __future__ import annotations

import csv
import json

from .dse import DesignPoint, DseResult, resimulate_point
from .evaluator import EvalResult
from .hwconfig import HardwareParams
from .model import CnnModel, load_model


def result_document(result: DseResult, run_meta: dict) -> dict:
    return {
        "run": run_meta,
        "best_point": result.best_point.to_dict(),
        "best_eval": result.best_eval.to_dict(),
        "explored_count": result.explored_count,
        "skipped_count": len(result.skipped),
        "skipped": result.skipped,
        "pareto": [list(p) for p in result.pareto],
        "history": [list(h) for h in result.history],
        "backend": result.backend,
    }


def write_result_json(path, result: DseResult, run_meta: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(result_document(result, run_meta), fh,
                  sort_keys=True, indent=1, separators=(",", ": "))
        fh.write("\n")


def load_result(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def resimulate_result(result_path, model_path, hw: HardwareParams) -> tuple[EvalResult, dict]:
    """Re-run the stored best design point; returns (fresh eval, stored doc)."""
    doc = load_result(result_path)
    model = load_model(model_path)
    point = DesignPoint.from_dict(doc["best_point"])
    ev = resimulate_point(point, model, hw, doc["run"]["total_power_w"])
    return ev, doc


def write_pareto_csv(path, result: DseResult) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["power_efficiency_tops_w", "throughput_ops_s"])
        for eff, thr in result.pareto:
            writer.writerow([repr(eff), repr(thr)])


def write_candidates_csv(path, candidates) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rank", "energy", "crossbars_used", "factors"])
        for rank, cand in enumerate(candidates):
            writer.writerow([rank, repr(cand.energy), cand.crossbars_used,
                             " ".join(str(f) for f in cand.factors)])


def write_alloc_audit_csv(path, audit: dict) -> None:
    """Per-(group, class) table: workload, continuous vs integer counts, delay."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["group_row", "layers", "class", "workload_per_step",
                         "continuous", "integer", "delay_s"])
        for row, layers in enumerate(audit["groups"]):
            for col, cls in enumerate(audit["classes"]):
                if audit["workload"][row][col] <= 0:
                    continue
                writer.writerow([
                    row, " ".join(str(l) for l in layers), cls,
                    repr(audit["workload"][row][col]),
                    repr(audit["continuous"][row][col]),
                    audit["integer"][row][col],
                    repr(audit["delay_s"][row][col]),
                ])


def write_trace_csv(path, trace) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["node", "start_s", "finish_s", "pool"])
        for node, start, finish, pool in trace:
            writer.writerow([node, repr(start), repr(finish), pool])


def _fmt(value: float, unit: str = "") -> str:
    return f"{value:.6g}{unit}"


def summary_text(result: DseResult, model: CnnModel, run_meta: dict) -> str:
    point = result.best_point
    ev = result.best_eval
    lines = [
        "== synthesis summary ==",
        f"model: {model.name} ({len(model.layers)} layers, "
        f"{len(model.weight_bearing)} weight-bearing)",
        f"power budget: {_fmt(run_meta['total_power_w'], ' W')}",
        f"design points evaluated: {result.explored_count} "
        f"(skipped {len(result.skipped)})",
        "",
        "-- best architecture --",
        f"reram power share: {point.ratio_rram}",
        f"crossbar size: {point.xb_size}",
        f"cell resolution: {point.res_rram} bit",
        f"dac resolution: {point.res_dac} bit",
        f"adc resolution: {point.adc_resolution} bit",
        f"crossbars used: {point.used_crossbars}",
        f"duplication factors: {' '.join(str(f) for f in point.wtdup)}",
        f"macro allocation codes: {' '.join(str(c) for c in point.mac_alloc)}",
        "",
        "-- metrics --",
        f"peak power efficiency: {_fmt(ev.peak_tops_w, ' TOPS/W')}",
        f"power efficiency: {_fmt(ev.power_efficiency_tops_w, ' TOPS/W')}",
        f"throughput: {_fmt(ev.throughput_ops_s / 1e12, ' TOPS')}",
        f"latency: {_fmt(ev.total_latency_s * 1e3, ' ms')}",
        f"power: {_fmt(ev.power_w, ' W')}",
        f"energy: {_fmt(ev.energy_j * 1e3, ' mJ')}",
        f"EDP: {_fmt(ev.edp_js * 1e6, ' ms*mJ')}",
        "",
        "-- power breakdown (W) --",
    ]
    for key, value in ev.power_breakdown.items():
        lines.append(f"{key:>12}: {_fmt(value)}")
    lines.append("")
    lines.append("-- component allocation (group rows x classes) --")
    lines.append("row  " + "  ".join(f"{c:>14}" for c in point.comp_classes))
    for row, counts in enumerate(point.comp_alloc):
        lines.append(f"{row:>3}  " + "  ".join(f"{c:>14}" for c in counts))
    return "\n".join(lines) + "\n"


def write_summary(path, result: DseResult, model: CnnModel, run_meta: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(summary_text(result, model, run_meta))


def write_ablation_csv(path, rows: list[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["variant", "power_efficiency_tops_w",
                         "throughput_ops_s", "latency_s", "edp_js"])
        for row in rows:
            writer.writerow([row["variant"],
                             repr(row["power_efficiency_tops_w"]),
                             repr(row["throughput_ops_s"]),
                             repr(row["latency_s"]),
                             repr(row["edp_js"])])
