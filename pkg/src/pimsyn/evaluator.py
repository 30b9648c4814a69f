"""Behavior-level simulation of a completed dataflow DAG on allocated
resources, plus the derived latency/throughput/power/efficiency metrics.

Every IR node maps to one resource pool:

  mvm        the layer's crossbar sets (one analog read at a time)
  adc/alu    the owning macro group's converter or ALU bank; an IR engages
             the whole bank, so service rate scales with the allocated count
  load/store the group's scratchpad ports (rate in bits/s), slowed by the
             spill factor when inter-layer buffers outgrow the scratchpad
  merge/
  transfer   the NoC (port-count-way concurrent), bandwidth + hop latency

List scheduling is deterministic: earliest ready time first, node id breaks
ties.  Power is budget-based: crossbars + their DAC arrays and registers +
routers + every allocated peripheral, independent of activity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .compalloc import COMPONENT_CLASSES, CompAllocMatrix, class_rates
from .dataflow import (OP_ADC, OP_ALU, OP_LOAD, OP_MERGE, OP_MVM, OP_STORE,
                       OP_TRANSFER, DataflowDag, effective_dup, host_map)
from .errors import SchedulingError
from .hwconfig import HardwareParams
from .macroplan import MacroPlan
from .model import CnnModel, total_macs

_CLASS_INDEX = {cls: i for i, cls in enumerate(COMPONENT_CLASSES)}
_ALU_CLASS = {"shift_add": "alu_shift_add", "pool": "alu_pool",
              "relu": "alu_relu", "vector_add": "alu_vector_add"}


@dataclass(frozen=True)
class EvalContext:
    """Everything a simulation needs besides the DAG/plan/allocation."""

    model: CnnModel
    hw: HardwareParams
    total_power: float
    ratio_rram: float
    xb_size: int
    res_rram: int
    res_dac: int
    factors: tuple[int, ...]
    adc_resolution: int


@dataclass
class EvalResult:
    """Metrics of one design point."""

    total_latency_s: float
    throughput_ops_s: float
    power_w: float
    power_efficiency_tops_w: float
    energy_j: float
    edp_js: float
    peak_tops_w: float
    power_breakdown: dict[str, float] = field(default_factory=dict)
    busy_breakdown: dict[str, float] = field(default_factory=dict)
    node_counts: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "total_latency_s": self.total_latency_s,
            "throughput_ops_s": self.throughput_ops_s,
            "power_w": self.power_w,
            "power_efficiency_tops_w": self.power_efficiency_tops_w,
            "energy_j": self.energy_j,
            "edp_js": self.edp_js,
            "peak_tops_w": self.peak_tops_w,
            "power_breakdown": self.power_breakdown,
            "busy_breakdown": self.busy_breakdown,
            "node_counts": self.node_counts,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "EvalResult":
        return cls(**doc)


def spill_factor(group_layers, model: CnnModel, dups, macro_count: int,
                 hw: HardwareParams) -> float:
    """Scratchpad pressure: >1 slows loads/stores instead of rejecting the
    design (inter-layer buffers beyond 64KB/macro spill to remote eDRAM)."""
    need_bits = 0
    for layer_id in group_layers:
        layer = model.layer(layer_id)
        dup = dups[layer_id]
        volume = dup * (layer.kernel * layer.kernel * layer.c_in + layer.c_out)
        need_bits += volume * layer.prec_act
    capacity_bits = hw.scratchpad_size_bytes * 8 * macro_count
    return max(1.0, need_bits / capacity_bits)


def build_schedule_arrays(dag: DataflowDag, plan: MacroPlan,
                          alloc: CompAllocMatrix, ctx: EvalContext):
    """Pool ids, unit demands, durations and capacities for the kernel."""
    hw = ctx.hw
    model = ctx.model
    hosts = host_map(model)
    dups = {l.index: effective_dup(l, model, ctx.factors, hosts)
            for l in model.layers}

    pools: list[tuple[str, int]] = []          # (name, capacity)
    pool_index: dict[str, int] = {}

    def pool(name, capacity):
        if name not in pool_index:
            pool_index[name] = len(pools)
            pools.append((name, capacity))
        return pool_index[name]

    memport_rate = hw.scratchpad_bus_bits * hw.scratchpad_freq_hz
    spills = {g.row: spill_factor(g.layers, model, dups, g.macro_count, hw)
              for g in plan.groups}

    n = dag.node_count
    pool_id = np.zeros(n, dtype=np.int64)
    units = np.ones(n, dtype=np.int64)
    duration = np.zeros(n, dtype=np.float64)

    for node in dag.nodes:
        row = plan.layer_row[node.layer]
        if node.op == OP_MVM:
            pid = pool(f"mvm:{node.layer}", 1)
            dur = hw.crossbar_read_latency_s
        elif node.op == OP_ADC:
            count = alloc.count(row, "adc")
            pid = pool(f"adc:{row}", 1)
            dur = node.vec_width / (hw.adc_freq(ctx.adc_resolution) * count)
        elif node.op == OP_ALU:
            cls = _ALU_CLASS[node.aluop]
            count = alloc.count(row, cls)
            pid = pool(f"{cls}:{row}", 1)
            spec = hw.alu[node.aluop]
            dur = node.vec_width / (spec.freq_hz * count)
        elif node.op in (OP_LOAD, OP_STORE):
            count = alloc.count(row, "memport")
            pid = pool(f"memport:{row}", 1)
            layer = model.layer(node.layer)
            bits = node.vec_width * layer.prec_act
            dur = bits * spills[row] / (memport_rate * count)
        elif node.op == OP_MERGE:
            pid = pool("noc", hw.noc_ports)
            bits = node.vec_width * model.layer(node.layer).prec_act
            dur = (bits / hw.noc_bandwidth_bits_s
                   + plan.group_diameter(row) * hw.noc_hop_latency_s)
        elif node.op == OP_TRANSFER:
            pid = pool("noc", hw.noc_ports)
            bits = node.vec_width * model.layer(node.layer).prec_act
            dur = (bits / hw.noc_bandwidth_bits_s
                   + plan.hops(node.src, node.dst) * hw.noc_hop_latency_s)
        else:  # pragma: no cover
            raise AssertionError(f"unmapped IR op {node.op}")
        pool_id[node.id] = pid
        duration[node.id] = dur

    capacity = np.array([c for _, c in pools], dtype=np.int64)

    pred_count = np.array([len(p) for p in dag.preds], dtype=np.int64)
    indptr = np.zeros(n + 1, dtype=np.int64)
    for i, succ in enumerate(dag.succs):
        indptr[i + 1] = indptr[i] + len(succ)
    indices = np.zeros(max(1, indptr[-1]), dtype=np.int64)
    for i, succ in enumerate(dag.succs):
        indices[indptr[i]:indptr[i + 1]] = succ

    pool_names = [name for name, _ in pools]
    return pred_count, indptr, indices, pool_id, units, duration, capacity, pool_names


def run_schedule(pred_count, indptr, indices, pool_id, units, duration, capacity):
    """Invoke the selected kernel; normalize failures into SchedulingError."""
    start, finish, makespan = _kernels.schedule(
        len(pool_id), pred_count, indptr, indices, pool_id, units, duration, capacity)
    if makespan < 0:
        unstarted = [i for i, s in enumerate(start) if s < 0][:8]
        raise SchedulingError(
            f"schedule deadlocked; first blocked nodes: {unstarted}")
    return np.asarray(start), np.asarray(finish), float(makespan)


def lower_bound_latency(dag: DataflowDag, plan: MacroPlan,
                        alloc: CompAllocMatrix, ctx: EvalContext) -> float:
    """Critical-path latency with unlimited resources; simulate() never beats it."""
    arrays = build_schedule_arrays(dag, plan, alloc, ctx)
    _, indptr, indices, _, _, duration, _, _ = arrays
    order = dag.topological_order()
    dist = duration.copy()
    for u in order:
        for k in range(indptr[u], indptr[u + 1]):
            v = indices[k]
            if dist[u] + duration[v] > dist[v]:
                dist[v] = dist[u] + duration[v]
    return float(dist.max()) if len(dist) else 0.0


def used_crossbar_count(ctx: EvalContext) -> int:
    from .weightdup import crossbar_set

    return sum(f * crossbar_set(l, ctx.xb_size, ctx.res_rram)
               for f, l in zip(ctx.factors, ctx.model.weight_bearing))


def design_power(plan: MacroPlan, alloc: CompAllocMatrix,
                 ctx: EvalContext) -> dict[str, float]:
    """Budget-based power: everything the design instantiates draws its rated
    power.  The DAC arrays and registers ride with the crossbars."""
    hw = ctx.hw
    used_crossbars = used_crossbar_count(ctx)
    powers, _ = class_rates(hw, ctx.adc_resolution)
    peripheral = float((alloc.counts * powers[None, :]).sum())
    breakdown = {
        "reram": used_crossbars * hw.crossbar_power(ctx.xb_size, ctx.res_rram),
        "dac": used_crossbars * ctx.xb_size * hw.dac_power(ctx.res_dac),
        "register": used_crossbars * hw.register_power_per_crossbar_w,
        "router": plan.total_macros * hw.noc_router_power_w,
        "peripheral": peripheral,
    }
    breakdown["total"] = sum(v for k, v in breakdown.items() if k != "total")
    return breakdown


def peak_power_efficiency(hw: HardwareParams, total_power: float,
                          used_crossbars: int, xb_size: int, res_rram: int,
                          res_dac: int, prec_wt: int, prec_act: int) -> float:
    """Theoretical ceiling in TOPS/W: every crossbar performs one analog read
    per read latency; effective ops discount weight slicing and input-bit
    iteration."""
    slices = math.ceil(prec_wt / res_rram)
    iters = math.ceil(prec_act / res_dac)
    ops_per_read = 2.0 * xb_size * xb_size / (slices * iters)
    peak_ops = used_crossbars * ops_per_read / hw.crossbar_read_latency_s
    return peak_ops / total_power / 1e12


def simulate(dag: DataflowDag, plan: MacroPlan, alloc: CompAllocMatrix,
             ctx: EvalContext, collect_trace: bool = False):
    """Run the list-scheduling simulation and assemble the metric record.

    Deterministic for identical inputs.  Returns EvalResult, or
    (EvalResult, trace) with per-node (start, finish) when collect_trace.
    """
    arrays = build_schedule_arrays(dag, plan, alloc, ctx)
    pred_count, indptr, indices, pool_id, units, duration, capacity, pool_names = arrays
    start, finish, makespan = run_schedule(
        pred_count, indptr, indices, pool_id, units, duration, capacity)

    macs = total_macs(ctx.model)
    throughput = 2.0 * macs / makespan
    power = design_power(plan, alloc, ctx)
    # efficiency is measured against the power constraint (the designable
    # budget), like the peak metric: under a fixed budget, maximizing it is
    # maximizing performance.  Energy/EDP use the power actually drawn.
    efficiency = throughput / ctx.total_power / 1e12
    energy = power["total"] * makespan

    busy: dict[str, float] = {}
    counts: dict[str, int] = {}
    for node in dag.nodes:
        counts[node.op] = counts.get(node.op, 0) + 1
        busy[node.op] = busy.get(node.op, 0.0) + duration[node.id]

    prec_wt = max(l.prec_wt for l in ctx.model.weight_bearing)
    prec_act = max(l.prec_act for l in ctx.model.weight_bearing)
    used_crossbars = used_crossbar_count(ctx)
    result = EvalResult(
        total_latency_s=makespan,
        throughput_ops_s=throughput,
        power_w=power["total"],
        power_efficiency_tops_w=efficiency,
        energy_j=energy,
        edp_js=energy * makespan,
        peak_tops_w=peak_power_efficiency(
            ctx.hw, ctx.total_power, used_crossbars, ctx.xb_size,
            ctx.res_rram, ctx.res_dac, prec_wt, prec_act),
        power_breakdown=power,
        busy_breakdown=busy,
        node_counts=counts,
    )
    if collect_trace:
        trace = [(int(i), float(start[i]), float(finish[i]),
                  pool_names[pool_id[i]]) for i in range(dag.node_count)]
        return result, trace
    return result
