"""Design-space exploration driver.

Nested loops over the power split, cell resolution and crossbar size feed a
simulated-annealing duplication filter; each surviving duplication vector is
compiled per DAC resolution, then partitioned and allocated by the
evolutionary explorer whose fitness is the simulated power efficiency.
Infeasible combinations are skipped with a logged reason; everything is
deterministic for a fixed master seed (per-stage seeds derive from the loop
coordinates, so outer triples may also run in parallel workers).
"""

from __future__ import annotations

import hashlib
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .compalloc import (build_workload_matrix, class_rates, continuous_alloc,
                        identical_round, integer_round, CompAllocMatrix)
from .dataflow import compile_dataflow, effective_dup, host_map
from .errors import (DegenerateWorkloadError, GlobalInfeasibilityError,
                     InfeasibleBudgetError, InfeasiblePartitionError,
                     InfeasiblePeripheralPowerError, InfeasiblePrecisionError)
from .evaluator import EvalContext, EvalResult, simulate, used_crossbar_count
from .hwconfig import DseDomains, HardwareParams
from .macroplan import (EaConfig, EaResult, build_macro_plan, decode_gene,
                        ea_explore, encode_gene)
from .model import CnnModel
from .weightdup import (SaConfig, crossbar_budget, layer_sets, ones_vector,
                        proportional_vector, sa_filter)

WTDUP_SA = "sa"
WTDUP_ONES = "ones"
WTDUP_PROPORTIONAL = "proportional"


@dataclass
class DseConfig:
    domains: DseDomains = field(default_factory=DseDomains)
    sa: SaConfig = field(default_factory=SaConfig)
    ea: EaConfig = field(default_factory=EaConfig)
    master_seed: int = 2024
    alpha: float | None = None
    wtdup_mode: str = WTDUP_SA
    identical_macros: bool = False
    enable_sharing: bool = True
    warm_start_genes: tuple = ()
    jobs: int = 1


@dataclass
class DesignPoint:
    """One fully specified candidate accelerator."""

    ratio_rram: float
    xb_size: int
    res_rram: int
    res_dac: int
    adc_resolution: int
    wtdup: tuple[int, ...]
    mac_alloc: list[int]                   # encoded owner*1000 + count
    comp_alloc: list[list[int]]            # group rows x component classes
    comp_classes: tuple[str, ...]
    used_crossbars: int

    def to_dict(self) -> dict:
        return {
            "ratio_rram": self.ratio_rram,
            "xb_size": self.xb_size,
            "res_rram": self.res_rram,
            "res_dac": self.res_dac,
            "adc_resolution": self.adc_resolution,
            "wtdup": list(self.wtdup),
            "mac_alloc": list(self.mac_alloc),
            "comp_alloc": self.comp_alloc,
            "comp_classes": list(self.comp_classes),
            "used_crossbars": self.used_crossbars,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "DesignPoint":
        return cls(
            ratio_rram=doc["ratio_rram"], xb_size=doc["xb_size"],
            res_rram=doc["res_rram"], res_dac=doc["res_dac"],
            adc_resolution=doc["adc_resolution"], wtdup=tuple(doc["wtdup"]),
            mac_alloc=list(doc["mac_alloc"]),
            comp_alloc=[list(r) for r in doc["comp_alloc"]],
            comp_classes=tuple(doc["comp_classes"]),
            used_crossbars=doc["used_crossbars"])


@dataclass
class DseResult:
    best_point: DesignPoint
    best_eval: EvalResult
    explored_count: int
    skipped: list[dict]
    pareto: list[tuple[float, float]]      # (TOPS/W, ops/s), non-dominated
    history: list[tuple[int, float]]       # (evaluations so far, best TOPS/W)
    wall_time_s: float
    backend: str


def derive_seed(master: int, *parts) -> int:
    text = ":".join([str(master)] + [str(p) for p in parts])
    digest = hashlib.blake2b(text.encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def peripheral_budget(total_power: float, ratio_rram: float,
                      reserved: float) -> float:
    return (1.0 - ratio_rram) * total_power - reserved


def make_fitness(dag, model: CnnModel, hw: HardwareParams, total_power: float,
                 ratio: float, xb: int, rr: int, rd: int, adc_bits: int,
                 factors, identical: bool):
    """Gene -> (power efficiency, payload) or None when allocation is
    infeasible.  The payload carries everything needed to rebuild the report."""
    ctx = EvalContext(model=model, hw=hw, total_power=total_power,
                      ratio_rram=ratio, xb_size=xb, res_rram=rr, res_dac=rd,
                      factors=tuple(factors), adc_resolution=adc_bits)
    hosts = host_map(model)
    dups = {l.index: effective_dup(l, model, factors, hosts)
            for l in model.layers}
    used = used_crossbar_count(ctx)
    fixed = used * (xb * hw.dac_power(rd) + hw.register_power_per_crossbar_w)
    powers, freqs = class_rates(hw, adc_bits)

    def fitness(gene):
        new_dag, plan = build_macro_plan(dag, gene, factors, model, xb, rr, hw)
        wl = build_workload_matrix(new_dag, model, dups, rd,
                                   [g.layers for g in plan.groups])
        reserved = fixed + plan.total_macros * hw.noc_router_power_w
        budget = peripheral_budget(total_power, ratio, reserved)
        macros = np.array(plan.macros_per_row())

        # candidate allocations: the per-layer balanced closed form, and the
        # uniform per-macro one.  Specialized macros subsume the uniform
        # configuration, so specialized mode keeps whichever simulates better;
        # identical mode is restricted to the uniform allocation.
        candidates = []
        if not identical:
            try:
                cont = continuous_alloc(wl, powers, freqs, ratio, total_power,
                                        reserved_power=reserved)
                candidates.append(integer_round(cont, wl, powers, freqs, budget))
            except (InfeasiblePeripheralPowerError, DegenerateWorkloadError):
                pass
        try:
            candidates.append(identical_round(wl, powers, freqs, macros, budget))
        except (InfeasiblePeripheralPowerError, DegenerateWorkloadError):
            pass
        if not candidates:
            return None

        best = None
        for alloc in candidates:
            ev = simulate(new_dag, plan, alloc, ctx)
            if best is None or ev.power_efficiency_tops_w > best[0]:
                best = (ev.power_efficiency_tops_w, (plan, alloc, ev))
        return best

    return fitness, ctx


def _wtdup_candidates(model, budget, cfg: DseConfig, sa_seed: int):
    if cfg.wtdup_mode == WTDUP_ONES:
        return [ones_vector(model, budget, cfg.alpha)]
    if cfg.wtdup_mode == WTDUP_PROPORTIONAL:
        return [proportional_vector(model, budget, cfg.alpha)]
    sa_cfg = replace(cfg.sa, seed=sa_seed, top_k=cfg.domains.sa_top_k)
    return sa_filter(model, budget, cfg.alpha, sa_cfg)


def explore_triple(model: CnnModel, hw: HardwareParams, total_power: float,
                   cfg: DseConfig, ratio: float, rr: int, xb: int) -> dict:
    """Evaluate every (candidate, res_dac) under one outer triple."""
    out = {"evaluated": [], "skipped": []}
    coords = {"ratio_rram": ratio, "res_rram": rr, "xb_size": xb}
    sets = layer_sets(model, xb, rr)
    try:
        budget = crossbar_budget(total_power, ratio, xb, rr, hw,
                                 min_sets=sum(sets))
    except InfeasibleBudgetError as exc:
        out["skipped"].append({**coords, "reason": str(exc)})
        return out

    sa_seed = derive_seed(cfg.master_seed, "sa", ratio, rr, xb)
    candidates = _wtdup_candidates(model, budget, cfg, sa_seed)

    for ci, cand in enumerate(candidates):
        for rd in cfg.domains.res_dac:
            point_coords = {**coords, "wtdup_index": ci, "res_dac": rd}
            try:
                adc_bits = hw.required_adc_resolution(xb, rr, rd)
            except InfeasiblePrecisionError as exc:
                out["skipped"].append({**point_coords, "reason": str(exc)})
                continue
            dag = compile_dataflow(model, cand.factors, rd, xb, rr)
            fitness, ctx = make_fitness(
                dag, model, hw, total_power, ratio, xb, rr, rd, adc_bits,
                cand.factors, cfg.identical_macros)
            ea_cfg = replace(cfg.ea, seed=derive_seed(
                cfg.master_seed, "ea", ratio, rr, xb, ci, rd))
            try:
                ea = ea_explore(model, cand.factors, xb, ea_cfg, fitness,
                                enable_sharing=cfg.enable_sharing,
                                warm_start=cfg.warm_start_genes)
            except InfeasiblePartitionError as exc:
                out["skipped"].append({**point_coords, "reason": str(exc)})
                continue
            plan, alloc, ev = ea.best_payload
            point = DesignPoint(
                ratio_rram=ratio, xb_size=xb, res_rram=rr, res_dac=rd,
                adc_resolution=adc_bits, wtdup=cand.factors,
                mac_alloc=encode_gene(ea.best_gene, model),
                comp_alloc=alloc.to_lists(), comp_classes=alloc.classes,
                used_crossbars=used_crossbar_count(ctx))
            out["evaluated"].append({**point_coords, "point": point, "eval": ev})
    return out


def _triple_worker(args):
    return explore_triple(*args)


def pareto_front(points: list[tuple[float, float]]) -> list[tuple[float, float]]:
    """Non-dominated (efficiency, throughput) pairs, best efficiency first."""
    front = []
    for eff, thr in sorted(set(points), key=lambda p: (-p[0], -p[1])):
        if not front or thr > front[-1][1]:
            front.append((eff, thr))
    return front


def run_dse(model: CnnModel, hw: HardwareParams, total_power: float,
            cfg: DseConfig | None = None, log=None) -> DseResult:
    """Run the full exploration; deterministic for a fixed cfg.master_seed."""
    from . import _kernels

    cfg = cfg or DseConfig()
    t0 = time.perf_counter()
    triples = [(ratio, rr, xb)
               for ratio in cfg.domains.ratio_rram
               for rr in cfg.domains.res_rram
               for xb in cfg.domains.xb_sizes]

    if cfg.jobs > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            chunks = list(pool.map(
                _triple_worker,
                [(model, hw, total_power, cfg, *t) for t in triples]))
    else:
        chunks = [explore_triple(model, hw, total_power, cfg, *t)
                  for t in triples]

    best_point, best_eval = None, None
    skipped: list[dict] = []
    pairs: list[tuple[float, float]] = []
    history: list[tuple[int, float]] = []
    explored = 0
    for chunk in chunks:
        skipped.extend(chunk["skipped"])
        for entry in chunk["evaluated"]:
            explored += 1
            ev = entry["eval"]
            pairs.append((ev.power_efficiency_tops_w, ev.throughput_ops_s))
            if (best_eval is None
                    or ev.power_efficiency_tops_w
                    > best_eval.power_efficiency_tops_w):
                best_point, best_eval = entry["point"], ev
            history.append((explored, best_eval.power_efficiency_tops_w))
            if log:
                log(f"evaluated {entry}")

    if best_point is None:
        reasons = {}
        for s in skipped:
            reasons[s["reason"]] = reasons.get(s["reason"], 0) + 1
        tightest = max(reasons, key=reasons.get) if reasons else "empty domain"
        raise GlobalInfeasibilityError(
            f"no feasible design point; dominant constraint: {tightest} "
            f"({len(skipped)} combinations skipped)")

    return DseResult(
        best_point=best_point, best_eval=best_eval, explored_count=explored,
        skipped=skipped, pareto=pareto_front(pairs), history=history,
        wall_time_s=time.perf_counter() - t0, backend=_kernels.BACKEND)


def evaluate_point(model: CnnModel, hw: HardwareParams, total_power: float,
                   cfg: DseConfig, ratio: float, rr: int, xb: int,
                   factors, rd: int) -> tuple[DesignPoint, EvalResult, EaResult]:
    """Stages 2-4 plus simulation for one duplication vector; used by tests
    and by the report round-trip."""
    adc_bits = hw.required_adc_resolution(xb, rr, rd)
    dag = compile_dataflow(model, factors, rd, xb, rr)
    fitness, ctx = make_fitness(dag, model, hw, total_power, ratio, xb, rr,
                                rd, adc_bits, factors, cfg.identical_macros)
    ea_cfg = replace(cfg.ea, seed=derive_seed(
        cfg.master_seed, "ea", ratio, rr, xb, 0, rd))
    ea = ea_explore(model, tuple(factors), xb, ea_cfg, fitness,
                    enable_sharing=cfg.enable_sharing,
                    warm_start=cfg.warm_start_genes)
    plan, alloc, ev = ea.best_payload
    point = DesignPoint(
        ratio_rram=ratio, xb_size=xb, res_rram=rr, res_dac=rd,
        adc_resolution=adc_bits, wtdup=tuple(factors),
        mac_alloc=encode_gene(ea.best_gene, model),
        comp_alloc=alloc.to_lists(), comp_classes=alloc.classes,
        used_crossbars=used_crossbar_count(ctx))
    return point, ev, ea


def rebuild_point(point: DesignPoint, model: CnnModel, hw: HardwareParams,
                  total_power: float):
    """Reconstruct the DAG, plan, allocation and context of a stored point."""
    dag = compile_dataflow(model, point.wtdup, point.res_dac, point.xb_size,
                           point.res_rram)
    gene = decode_gene(point.mac_alloc, model)
    new_dag, plan = build_macro_plan(dag, gene, point.wtdup, model,
                                     point.xb_size, point.res_rram, hw)
    counts = np.array(point.comp_alloc, dtype=np.int64)
    powers, _ = class_rates(hw, point.adc_resolution)
    alloc = CompAllocMatrix(counts=counts, continuous=counts.astype(float),
                            budget=0.0, spent=float((counts * powers[None, :]).sum()))
    ctx = EvalContext(model=model, hw=hw, total_power=total_power,
                      ratio_rram=point.ratio_rram, xb_size=point.xb_size,
                      res_rram=point.res_rram, res_dac=point.res_dac,
                      factors=tuple(point.wtdup),
                      adc_resolution=point.adc_resolution)
    return new_dag, plan, alloc, ctx


def resimulate_point(point: DesignPoint, model: CnnModel, hw: HardwareParams,
                     total_power: float, collect_trace: bool = False):
    """Rebuild a stored design point and simulate it again (report audit)."""
    new_dag, plan, alloc, ctx = rebuild_point(point, model, hw, total_power)
    return simulate(new_dag, plan, alloc, ctx, collect_trace=collect_trace)


def best_point_candidates(point: DesignPoint, model: CnnModel,
                          hw: HardwareParams, total_power: float,
                          cfg: DseConfig):
    """Replay the duplication filter that produced the winning point."""
    sets = layer_sets(model, point.xb_size, point.res_rram)
    budget = crossbar_budget(total_power, point.ratio_rram, point.xb_size,
                             point.res_rram, hw, min_sets=sum(sets))
    sa_seed = derive_seed(cfg.master_seed, "sa", point.ratio_rram,
                          point.res_rram, point.xb_size)
    return _wtdup_candidates(model, budget, cfg, sa_seed)


def best_point_audit(point: DesignPoint, model: CnnModel, hw: HardwareParams,
                     total_power: float) -> dict:
    """Continuous vs integer allocation and per-entry delays for the report."""
    new_dag, plan, alloc, ctx = rebuild_point(point, model, hw, total_power)
    hosts = host_map(model)
    dups = {l.index: effective_dup(l, model, point.wtdup, hosts)
            for l in model.layers}
    wl = build_workload_matrix(new_dag, model, dups, point.res_dac,
                               [g.layers for g in plan.groups])
    powers, freqs = class_rates(hw, point.adc_resolution)
    used = used_crossbar_count(ctx)
    reserved = (used * (point.xb_size * hw.dac_power(point.res_dac)
                        + hw.register_power_per_crossbar_w)
                + plan.total_macros * hw.noc_router_power_w)
    continuous = continuous_alloc(wl, powers, freqs, point.ratio_rram,
                                  total_power, reserved_power=reserved)
    counts = np.array(point.comp_alloc, dtype=float)
    delays = np.where(wl > 0, wl / (freqs[None, :] * np.maximum(counts, 1)), 0.0)
    return {
        "classes": list(point.comp_classes),
        "groups": [g.layers for g in plan.groups],
        "workload": wl.tolist(),
        "continuous": continuous.tolist(),
        "integer": point.comp_alloc,
        "delay_s": delays.tolist(),
    }
