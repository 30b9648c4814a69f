import random

import numpy as np
import pytest

from helpers import conv, make_model, tiny3
from oracles import exhaustive_int_alloc
from pimsyn.compalloc import (COMPONENT_CLASSES, build_workload_matrix,
                              continuous_alloc, identical_round,
                              integer_round, pipeline_period)
from pimsyn.dataflow import compile_dataflow, effective_dup, host_map
from pimsyn.errors import (DegenerateWorkloadError,
                           InfeasiblePeripheralPowerError)
from pimsyn.hwconfig import load_hw_params


def test_continuous_alloc_hand_example():
    # two layers, one class: workloads 100/300 at unit rate, 2 mW units,
    # 80 mW budget -> 10 and 30 units, both delays exactly 10
    wl = np.array([[100.0], [300.0]])
    powers = np.array([0.002])
    freqs = np.array([1.0])
    alloc = continuous_alloc(wl, powers, freqs, ratio_rram=0.2, total_power=0.1)
    assert alloc == pytest.approx(np.array([[10.0], [30.0]]))
    delays = wl / (freqs * alloc)
    assert delays.flatten() == pytest.approx([10.0, 10.0])


def test_continuous_alloc_single_cell_collapses():
    wl = np.array([[50.0]])
    powers = np.array([0.01])
    freqs = np.array([2.0])
    alloc = continuous_alloc(wl, powers, freqs, 0.5, 2.0)   # budget 1.0
    assert alloc[0][0] == pytest.approx(1.0 / 0.01)
    delay = 50.0 / (2.0 * alloc[0][0])
    assert delay == pytest.approx(50.0 * 0.01 / (2.0 * 1.0))


def test_continuous_alloc_scale_invariance():
    rng = np.random.default_rng(3)
    wl = rng.uniform(0, 10, size=(3, 2))
    powers = np.array([0.004, 0.001])
    freqs = np.array([2.0, 5.0])
    a1 = continuous_alloc(wl, powers, freqs, 0.3, 1.0)
    a2 = continuous_alloc(2.0 * wl, powers, freqs, 0.3, 1.0)
    assert a2 == pytest.approx(a1)


def test_continuous_alloc_degenerate():
    with pytest.raises(DegenerateWorkloadError):
        continuous_alloc(np.zeros((2, 2)), np.ones(2), np.ones(2), 0.2, 1.0)


def test_integer_round_examples():
    wl = np.array([[100.0], [300.0]])
    powers = np.array([0.002])
    freqs = np.array([1.0])
    cont = continuous_alloc(wl, powers, freqs, 0.2, 0.1)
    alloc = integer_round(cont, wl, powers, freqs, budget=0.08)
    assert alloc.counts.tolist() == [[10], [30]]

    wl2 = np.array([[0.4], [79.6]])
    powers2 = np.array([1.0])
    freqs2 = np.array([1.0])
    cont2 = np.array([[0.4], [79.6]])
    alloc2 = integer_round(cont2, wl2, powers2, freqs2, budget=80.0)
    assert alloc2.counts.tolist() == [[1], [79]]


def test_integer_round_infeasible():
    wl = np.array([[1.0, 1.0]])
    powers = np.array([50.0, 50.0])
    freqs = np.array([1.0, 1.0])
    with pytest.raises(InfeasiblePeripheralPowerError):
        integer_round(np.array([[0.5, 0.5]]), wl, powers, freqs, budget=80.0)


def test_pipeline_period():
    wl = np.array([[100.0], [300.0]])
    freqs = np.array([1.0])
    counts = np.array([[10], [30]])
    assert pipeline_period(counts, wl, freqs, 1e-7) == pytest.approx(10.0 + 1e-7)
    # one component dominating
    counts2 = np.array([[100], [30]])
    assert pipeline_period(counts2, wl, freqs, 0.0) == pytest.approx(10.0)
    # doubling every count halves the variable part
    assert pipeline_period(counts * 2, wl, freqs, 0.0) == pytest.approx(5.0)


def test_balance_and_power_identity_randomized():
    rng = np.random.default_rng(2024)
    for _ in range(200):
        rows = rng.integers(1, 9)
        cols = rng.integers(1, 5)
        wl = rng.uniform(0, 100, size=(rows, cols))
        wl[rng.uniform(size=(rows, cols)) < 0.3] = 0.0
        if not np.any(wl > 0):
            wl[0][0] = 1.0
        powers = rng.uniform(1e-4, 1e-1, size=cols)
        freqs = rng.uniform(1e3, 1e9, size=cols)
        ratio = float(rng.uniform(0.05, 0.9))
        total = float(rng.uniform(0.5, 50.0))
        alloc = continuous_alloc(wl, powers, freqs, ratio, total)
        budget = (1 - ratio) * total
        spent = float((alloc * powers[None, :]).sum())
        assert abs(spent - budget) <= 1e-9 * budget
        mask = wl > 0
        delays = wl[mask] / (freqs[None, :] * np.where(alloc == 0, 1, alloc))[mask]
        assert delays.max() - delays.min() <= 1e-9 * delays.max()
        assert np.all(alloc[~mask] == 0)


def test_integer_never_exceeds_budget_and_min_one():
    rng = np.random.default_rng(7)
    for _ in range(100):
        rows = rng.integers(1, 5)
        cols = rng.integers(1, 4)
        wl = rng.uniform(0, 10, size=(rows, cols))
        wl[rng.uniform(size=(rows, cols)) < 0.3] = 0.0
        if not np.any(wl > 0):
            wl[0][0] = 1.0
        powers = rng.uniform(0.001, 0.05, size=cols)
        freqs = rng.uniform(1.0, 100.0, size=cols)
        budget = float(powers.sum() * rows * rng.uniform(1.5, 20.0))
        cont = continuous_alloc(wl, powers, freqs, 0.0, budget)
        alloc = integer_round(cont, wl, powers, freqs, budget)
        assert alloc.spent <= budget * (1 + 1e-9)
        assert np.all(alloc.counts[wl > 0] >= 1)
        assert np.all(alloc.counts[wl <= 0] == 0)


def test_integer_round_near_exhaustive_optimum():
    rng = random.Random(11)
    for _ in range(40):
        rows = rng.randint(1, 3)
        cols = rng.randint(1, 2)
        wl = [[rng.choice([0.0, rng.uniform(1, 20)]) for _ in range(cols)]
              for _ in range(rows)]
        if not any(v > 0 for row in wl for v in row):
            wl[0][0] = 5.0
        powers = [rng.uniform(0.5, 2.0) for _ in range(cols)]
        freqs = [rng.uniform(0.5, 4.0) for _ in range(cols)]
        used = sum(1 for row in wl for v in row if v > 0)
        budget = sum(powers) * rows * rng.uniform(1.2, 3.0)
        wl_np = np.array(wl)
        p_np, f_np = np.array(powers), np.array(freqs)
        cont = continuous_alloc(wl_np, p_np, f_np, 0.0, budget)
        mine = integer_round(cont, wl_np, p_np, f_np, budget)
        _, best_period = exhaustive_int_alloc(wl, powers, freqs, budget)
        my_period = pipeline_period(mine.counts, wl_np, f_np, 0.0)
        assert my_period <= best_period * 1.10 + 1e-12, (wl, powers, freqs)


def test_workload_matrix_from_compiled_dag():
    model = tiny3()
    hw = load_hw_params()
    factors = (4, 2, 1)
    dag = compile_dataflow(model, factors, res_dac=2, xb_size=128, res_rram=2)
    hosts = host_map(model)
    dups = {l.index: effective_dup(l, model, factors, hosts)
            for l in model.layers}
    groups = [[1], [2], [3]]
    wl = build_workload_matrix(dag, model, dups, 2, groups)
    adc_col = COMPONENT_CLASSES.index("adc")
    mem_col = COMPONENT_CLASSES.index("memport")
    # layer 1: dup=4, 1 row tile, 8 channels, 4 slices -> 128 samples per step
    assert wl[0][adc_col] == pytest.approx(4 * 1 * 8 * 4)
    # per-step memory bits: (load + store widths) * act bits / bits-per-block
    lay = model.layer(1)
    load_bits = 4 * lay.kernel ** 2 * lay.c_in * lay.prec_act
    store_bits = 4 * lay.c_out * lay.prec_act
    assert wl[0][mem_col] == pytest.approx((load_bits + store_bits) / 4)
    # grouping two rows sums their per-step workloads
    wl_grouped = build_workload_matrix(dag, model, dups, 2, [[1, 2], [3]])
    assert wl_grouped[0][adc_col] == pytest.approx(wl[0][adc_col] + wl[1][adc_col])


def test_workloads_route_to_alu_classes():
    from helpers import layer

    model = make_model([
        conv(1, 4, 8, 4, 4, fused=("pool", "relu")),
        layer(2, "residual_add", 8, 8, 4, 4, k=1, preds=[1]),
    ])
    factors = (2,)
    dag = compile_dataflow(model, factors, 2, 128, 2)
    hosts = host_map(model)
    dups = {l.index: effective_dup(l, model, factors, hosts)
            for l in model.layers}
    wl = build_workload_matrix(dag, model, dups, 2, [[1, 2]])
    pool_col = COMPONENT_CLASSES.index("alu_pool")
    relu_col = COMPONENT_CLASSES.index("alu_relu")
    add_col = COMPONENT_CLASSES.index("alu_vector_add")
    assert wl[0][pool_col] > 0
    assert wl[0][relu_col] > 0
    assert wl[0][add_col] > 0     # hosted pseudo-layer folds into the row


def test_identical_round_uniform_per_macro():
    wl = np.array([[10.0, 4.0], [30.0, 0.0]])
    powers = np.array([0.01, 0.002])
    freqs = np.array([10.0, 100.0])
    macros = np.array([2, 3])
    alloc = identical_round(wl, powers, freqs, macros, budget=2.0)
    per_macro = alloc.counts / macros[:, None]
    assert np.all(per_macro[0] == per_macro[1])
    assert alloc.spent <= 2.0 + 1e-9
