"""Stage 4: peripheral component allocation.

Solves the min-max step-delay problem: given per-(row, class) workloads, a
power budget for peripherals and per-class power/rate figures, the optimal
continuous allocation makes every positive-workload delay equal and spends
the budget exactly:

    alloc[r][c] = budget * (wl[r][c] / freq[c]) / sum(P * wl / freq)

Rows are macro groups (a sharing pair contributes one combined row so the
shared ADC/ALU pool is sized once).  DAC energy is not allocated here: DACs
are bound into the analog MVM structure and their power is charged with the
crossbars, before this budget.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataflow import (OP_ADC, OP_ALU, OP_LOAD, OP_STORE, DataflowDag,
                       bits_for, blocks_for)
from .errors import DegenerateWorkloadError, InfeasiblePeripheralPowerError
from .hwconfig import HardwareParams
from .model import CnnModel

CLASS_ADC = "adc"
CLASS_SHIFT_ADD = "alu_shift_add"
CLASS_POOL = "alu_pool"
CLASS_RELU = "alu_relu"
CLASS_VECTOR_ADD = "alu_vector_add"
CLASS_MEMPORT = "memport"

COMPONENT_CLASSES = (CLASS_ADC, CLASS_SHIFT_ADD, CLASS_POOL, CLASS_RELU,
                     CLASS_VECTOR_ADD, CLASS_MEMPORT)
_ALU_CLASS = {"shift_add": CLASS_SHIFT_ADD, "pool": CLASS_POOL,
              "relu": CLASS_RELU, "vector_add": CLASS_VECTOR_ADD}


def class_rates(hw: HardwareParams, adc_bits: int):
    """Per-class (power W, service rate units/s) vectors, in class order."""
    powers, freqs = [], []
    for cls in COMPONENT_CLASSES:
        if cls == CLASS_ADC:
            powers.append(hw.adc_power(adc_bits))
            freqs.append(hw.adc_freq(adc_bits))
        elif cls == CLASS_MEMPORT:
            powers.append(hw.scratchpad_port_power_w)
            freqs.append(hw.scratchpad_bus_bits * hw.scratchpad_freq_hz)  # bits/s
        else:
            alu = hw.alu[cls.removeprefix("alu_")]
            powers.append(alu.power_w)
            freqs.append(alu.freq_hz)
    return np.array(powers), np.array(freqs)


def layer_steps(model: CnnModel, dups: dict[int, int], res_dac: int) -> dict[int, int]:
    """Pipeline micro-steps per layer: blocks x bit-slices (blocks for ALU-only)."""
    steps = {}
    for layer in model.layers:
        blocks = blocks_for(layer, dups[layer.index])
        steps[layer.index] = blocks * (bits_for(layer, res_dac)
                                       if layer.weight_bearing else 1)
    return steps


def build_workload_matrix(dag: DataflowDag, model: CnnModel,
                          dups: dict[int, int], res_dac: int,
                          groups: list[list[int]]) -> np.ndarray:
    """Per-(group, class) workload per pipeline step.

    Sums each layer's IR operand widths per class, normalizes by the layer's
    step count, then folds layers into their macro-group rows.  Memory-port
    workload is measured in bits (width times activation precision).
    """
    per_layer = {l.index: [0.0] * len(COMPONENT_CLASSES) for l in model.layers}
    idx = {cls: i for i, cls in enumerate(COMPONENT_CLASSES)}
    for node in dag.nodes:
        if node.op == OP_ADC:
            per_layer[node.layer][idx[CLASS_ADC]] += node.vec_width
        elif node.op == OP_ALU:
            per_layer[node.layer][idx[_ALU_CLASS[node.aluop]]] += node.vec_width
        elif node.op in (OP_LOAD, OP_STORE):
            prec = model.layer(node.layer).prec_act
            per_layer[node.layer][idx[CLASS_MEMPORT]] += node.vec_width * prec

    steps = layer_steps(model, dups, res_dac)
    wl = np.zeros((len(groups), len(COMPONENT_CLASSES)))
    for row, members in enumerate(groups):
        for layer_index in members:
            contrib = per_layer[layer_index]
            for c in range(len(COMPONENT_CLASSES)):
                wl[row][c] += contrib[c] / steps[layer_index]
    return wl


def continuous_alloc(wl: np.ndarray, powers: np.ndarray, freqs: np.ndarray,
                     ratio_rram: float, total_power: float,
                     reserved_power: float = 0.0) -> np.ndarray:
    """Delay-balancing continuous allocation under the peripheral budget.

    The budget is (1 - ratio_rram) * total_power minus any power already
    committed (DAC arrays, routers).  At the optimum every positive-workload
    delay wl/(freq*alloc) equals sum(P*wl/freq)/budget and the budget is met
    with equality.
    """
    wl = np.asarray(wl, dtype=float)
    if not np.any(wl > 0):
        raise DegenerateWorkloadError("all workloads are zero")
    budget = (1.0 - ratio_rram) * total_power - reserved_power
    if budget <= 0:
        raise InfeasiblePeripheralPowerError(
            f"no peripheral power left (budget {budget:.6g} W)")
    weighted = (powers[None, :] * wl / freqs[None, :]).sum()
    return budget * (wl / freqs[None, :]) / weighted


@dataclass
class CompAllocMatrix:
    """Integer component counts per (group row, class), with the continuous
    solution retained for auditing."""

    counts: np.ndarray
    continuous: np.ndarray
    budget: float
    spent: float
    classes: tuple[str, ...] = COMPONENT_CLASSES

    def count(self, row: int, cls: str) -> int:
        return int(self.counts[row][self.classes.index(cls)])

    def to_lists(self):
        return [[int(v) for v in row] for row in self.counts]


def integer_round(continuous: np.ndarray, wl: np.ndarray, powers: np.ndarray,
                  freqs: np.ndarray, budget: float) -> CompAllocMatrix:
    """Round the continuous optimum to integers without exceeding the budget.

    Floors every entry, lifts positive-workload zeros to one, then greedily
    grants one more unit to the current worst delay while it still fits.
    """
    counts = np.floor(continuous).astype(np.int64)
    counts[(wl > 0) & (counts < 1)] = 1
    counts[wl <= 0] = 0
    spent = float((counts * powers[None, :]).sum())
    mask = wl > 0

    minimum = float((mask * powers[None, :]).sum())
    if minimum > budget * (1 + 1e-12):
        raise InfeasiblePeripheralPowerError(
            f"even one unit per used component needs {minimum:.6g} W "
            f"of a {budget:.6g} W budget")
    # lifting zeros to one may overshoot; pay for it where delay is smallest
    while spent > budget * (1 + 1e-12):
        shrinkable = mask & (counts >= 2)
        delays = np.where(shrinkable,
                          wl / (freqs[None, :] * np.maximum(counts, 1)), np.inf)
        flat = int(np.argmin(delays))
        row, col = np.unravel_index(flat, delays.shape)
        assert shrinkable[row][col], "overshoot with nothing left to shrink"
        counts[row][col] -= 1
        spent -= float(powers[col])
    while True:
        delays = np.where(mask, wl / (freqs[None, :] * np.maximum(counts, 1)), -1.0)
        flat = int(np.argmax(delays))
        row, col = np.unravel_index(flat, delays.shape)
        if delays[row][col] <= 0:
            break
        if spent + powers[col] > budget * (1 + 1e-12):
            break
        counts[row][col] += 1
        spent += powers[col]
    return CompAllocMatrix(counts=counts, continuous=continuous,
                           budget=budget, spent=spent)


def identical_continuous(wl: np.ndarray, powers: np.ndarray, freqs: np.ndarray,
                         macros_per_row: np.ndarray, budget: float) -> np.ndarray:
    """Per-macro uniform allocation: every macro carries the same component
    counts, sized for the densest row, spending the same overall budget."""
    wl = np.asarray(wl, dtype=float)
    macros = np.asarray(macros_per_row, dtype=float)
    total_macros = macros.sum()
    if not np.any(wl > 0):
        raise DegenerateWorkloadError("all workloads are zero")
    if budget <= 0:
        raise InfeasiblePeripheralPowerError(
            f"no peripheral power left (budget {budget:.6g} W)")
    density = (wl / macros[:, None]).max(axis=0)
    weighted = (powers * density / freqs).sum()
    per_macro = (budget / total_macros) * (density / freqs) / weighted
    return per_macro[None, :] * macros[:, None]


def identical_round(wl: np.ndarray, powers: np.ndarray, freqs: np.ndarray,
                    macros_per_row: np.ndarray, budget: float) -> CompAllocMatrix:
    """Integer rounding in identical-macro mode: the per-macro count vector is
    rounded, then replicated over every macro."""
    macros = np.asarray(macros_per_row, dtype=float)
    total_macros = float(macros.sum())
    continuous = identical_continuous(wl, powers, freqs, macros_per_row, budget)
    density = (np.asarray(wl, dtype=float) / macros[:, None]).max(axis=0)
    per_macro = np.floor(continuous[0] / macros[0]).astype(np.int64)
    used = density > 0
    per_macro[used & (per_macro < 1)] = 1
    per_macro[~used] = 0
    spent = float((per_macro * powers).sum() * total_macros)

    minimum = float((used * powers).sum() * total_macros)
    if minimum > budget * (1 + 1e-12):
        raise InfeasiblePeripheralPowerError(
            f"identical macros need {minimum:.6g} W of a {budget:.6g} W budget")
    # lifting to one-per-macro may overshoot; shrink the least-loaded class
    while spent > budget * (1 + 1e-12):
        shrinkable = used & (per_macro >= 2)
        delays = np.where(shrinkable, density / (freqs * np.maximum(per_macro, 1)),
                          np.inf)
        col = int(np.argmin(delays))
        assert shrinkable[col], "overshoot with nothing left to shrink"
        per_macro[col] -= 1
        spent -= float(powers[col] * total_macros)
    while True:
        delays = np.where(used, density / (freqs * np.maximum(per_macro, 1)), -1.0)
        col = int(np.argmax(delays))
        if delays[col] <= 0:
            break
        if spent + powers[col] * total_macros > budget * (1 + 1e-12):
            break
        per_macro[col] += 1
        spent += float(powers[col] * total_macros)
    # identical macros carry every class everywhere, even where a row is idle
    counts = per_macro[None, :] * macros.astype(np.int64)[:, None]
    return CompAllocMatrix(counts=counts, continuous=continuous,
                           budget=budget, spent=spent)


def pipeline_period(counts: np.ndarray, wl: np.ndarray, freqs: np.ndarray,
                    mvm_latency_s: float) -> float:
    """Slowest per-step delay over all (row, class) plus the fixed analog
    MVM latency of one bit step."""
    mask = np.asarray(wl) > 0
    if not mask.any():
        return mvm_latency_s
    delays = np.asarray(wl)[mask] / (freqs[None, :] * np.maximum(counts, 1))[mask]
    return float(delays.max()) + mvm_latency_s
