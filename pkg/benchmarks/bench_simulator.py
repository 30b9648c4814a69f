"""Benchmark: compiled vs pure-Python scheduling engine.

Times the same schedule() call on both backends over compiled dataflow DAGs
of growing size and a wide synthetic layered DAG, verifying that the two
engines return identical makespans.

Run from the repo root:  python benchmarks/bench_simulator.py
"""

import random
import time

import numpy as np

from pimsyn._kernels import engine_py
from pimsyn.dataflow import compile_dataflow
from pimsyn.dse import make_fitness
from pimsyn.evaluator import build_schedule_arrays
from pimsyn.hwconfig import load_hw_params
from pimsyn.macroplan import build_macro_plan
from pimsyn.model import load_model

try:
    from pimsyn._kernels import engine_cy
except ImportError:
    engine_cy = None


def compiled_instance(res_dac, factors_scale):
    model = load_model("models/desk5.json")
    hw = load_hw_params()
    factors = tuple(min(l.out_positions, factors_scale)
                    for l in model.weight_bearing)
    dag = compile_dataflow(model, factors, res_dac, 128, 2)
    fitness, ctx = make_fitness(dag, model, hw, 5.0, 0.2, 128, 2, res_dac,
                                hw.required_adc_resolution(128, 2, res_dac),
                                factors, False)
    gene = tuple((i, 1) for i in range(len(factors)))
    out = fitness(gene)
    if out is None:
        raise SystemExit("benchmark design point infeasible")
    _, (plan, alloc, _) = out
    new_dag, plan = build_macro_plan(dag, gene, factors, model, 128, 2, hw)
    arrays = build_schedule_arrays(new_dag, plan, alloc, ctx)
    return new_dag.node_count, arrays


def synthetic_instance(width, depth, seed=11):
    rng = random.Random(seed)
    n = width * depth
    pools = 8
    capacity = [rng.randint(1, 4) for _ in range(pools)]
    pool_id = [rng.randrange(pools) for _ in range(n)]
    units = [1] * n
    duration = [rng.uniform(0.1, 2.0) for _ in range(n)]
    succ = {i: [] for i in range(n)}
    pred_count = [0] * n
    for layer in range(depth - 1):
        for w in range(width):
            u = layer * width + w
            for _ in range(2):
                v = (layer + 1) * width + rng.randrange(width)
                succ[u].append(v)
                pred_count[v] += 1
    indptr = [0] * (n + 1)
    indices = []
    for i in range(n):
        indptr[i + 1] = indptr[i] + len(succ[i])
        indices.extend(succ[i])
    return n, (np.array(pred_count, dtype=np.int64),
               np.array(indptr, dtype=np.int64),
               np.array(indices if indices else [0], dtype=np.int64),
               np.array(pool_id, dtype=np.int64),
               np.array(units, dtype=np.int64),
               np.array(duration, dtype=np.float64),
               np.array(capacity, dtype=np.int64), None)


def run(engine, n, arrays, repeats):
    pred, indptr, indices, pool_id, units, duration, capacity, _ = arrays
    best = float("inf")
    makespan = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        _, _, makespan = engine.schedule(n, pred, indptr, indices, pool_id,
                                         units, duration, capacity)
        best = min(best, time.perf_counter() - t0)
    return best, makespan


def main():
    cases = [
        ("desk5 dup=4, 8b dac=1", *compiled_instance(1, 4)),
        ("desk5 dup=1, 8b dac=1", *compiled_instance(1, 1)),
        ("synthetic 200x50", *synthetic_instance(200, 50)),
        ("synthetic 500x100", *synthetic_instance(500, 100)),
    ]
    print(f"{'case':<24} {'nodes':>8} {'python':>10} {'cython':>10} {'speedup':>8}")
    for name, n, arrays in cases:
        py_t, py_m = run(engine_py, n, arrays, repeats=3)
        if engine_cy is None:
            print(f"{name:<24} {n:>8} {py_t * 1e3:>9.1f}ms {'n/a':>10} {'n/a':>8}")
            continue
        cy_t, cy_m = run(engine_cy, n, arrays, repeats=3)
        assert py_m == cy_m, f"backend mismatch on {name}: {py_m} vs {cy_m}"
        print(f"{name:<24} {n:>8} {py_t * 1e3:>9.1f}ms {cy_t * 1e3:>9.1f}ms "
              f"{py_t / cy_t:>7.1f}x")


if __name__ == "__main__":
    main()
