import itertools

import pytest

from helpers import conv, make_model, tiny3
from oracles import enumerate_wtdup
from pimsyn.dse import (DesignPoint, DseConfig, WTDUP_ONES, derive_seed,
                        evaluate_point, explore_triple, resimulate_point,
                        run_dse)
from pimsyn.errors import GlobalInfeasibilityError
from pimsyn.hwconfig import DseDomains, load_hw_params
from pimsyn.macroplan import EaConfig
from pimsyn.weightdup import SaConfig, crossbar_budget, layer_sets


@pytest.fixture(scope="module")
def hw():
    return load_hw_params()


def small_cfg(**kw):
    defaults = dict(
        domains=DseDomains(ratio_rram=(0.2,), xb_sizes=(128,),
                           res_rram=(2,), res_dac=(2,), sa_top_k=3),
        sa=SaConfig(iterations=400),
        ea=EaConfig(population=6, generations=3),
        master_seed=7,
    )
    defaults.update(kw)
    return DseConfig(**defaults)


def test_single_domain_values_evaluate_k_points(hw):
    model = tiny3()
    cfg = small_cfg()
    result = run_dse(model, hw, 2.0, cfg)
    # one triple, K<=3 SA candidates, one DAC resolution
    assert 1 <= result.explored_count <= 3
    assert result.best_eval.power_efficiency_tops_w > 0


def test_loop_nest_cardinality(hw):
    model = tiny3()
    cfg = small_cfg(domains=DseDomains(ratio_rram=(0.2, 0.3), xb_sizes=(128,),
                                       res_rram=(2,), res_dac=(1, 2),
                                       sa_top_k=2))
    result = run_dse(model, hw, 2.0, cfg)
    combos = result.explored_count + sum(
        1 for s in result.skipped if "wtdup_index" in s)
    # every (triple, candidate, res_dac) combination is evaluated or skipped
    assert combos <= 2 * 1 * 1 * 2 * 2
    assert result.explored_count >= 1


def test_best_history_monotone_and_best_is_max(hw):
    model = tiny3()
    cfg = small_cfg(domains=DseDomains(ratio_rram=(0.1, 0.2), xb_sizes=(128,),
                                       res_rram=(2,), res_dac=(1, 2),
                                       sa_top_k=2))
    result = run_dse(model, hw, 2.0, cfg)
    values = [eff for _, eff in result.history]
    assert values == sorted(values)
    assert result.best_eval.power_efficiency_tops_w == pytest.approx(values[-1])


def test_determinism_across_runs(hw):
    model = tiny3()
    cfg = small_cfg()
    a = run_dse(model, hw, 2.0, cfg)
    b = run_dse(model, hw, 2.0, cfg)
    assert a.best_point == b.best_point
    assert a.best_eval == b.best_eval
    assert a.pareto == b.pareto


def test_skip_partition_covers_all_infeasible(hw):
    # budget too small for one copy at every triple -> global infeasibility
    model = make_model([conv(1, 64, 256, 16, 16)], wt_bits=16)
    cfg = small_cfg()
    with pytest.raises(GlobalInfeasibilityError):
        run_dse(model, hw, 0.005, cfg)


def test_adc_infeasible_combination_is_skipped(hw):
    model = tiny3()
    cfg = small_cfg(domains=DseDomains(ratio_rram=(0.2,), xb_sizes=(512,),
                                       res_rram=(4,), res_dac=(2, 4),
                                       sa_top_k=1))
    result = run_dse(model, hw, 6.0, cfg)
    assert any("ADC" in s["reason"] or "adc" in s["reason"].lower()
               for s in result.skipped)
    assert result.explored_count >= 1


def test_skip_log_partitions_the_loop_nest(hw):
    # every (candidate, res_dac) combination under each surviving triple is
    # either evaluated or present in the skip log
    model = tiny3()
    cfg = small_cfg(domains=DseDomains(ratio_rram=(0.2,), xb_sizes=(512,),
                                       res_rram=(4,), res_dac=(1, 2, 4),
                                       sa_top_k=2))
    chunk = explore_triple(model, hw, 6.0, cfg, 0.2, 4, 512)
    seen = {(e["wtdup_index"], e["res_dac"]) for e in chunk["evaluated"]}
    seen |= {(s["wtdup_index"], s["res_dac"]) for s in chunk["skipped"]
             if "wtdup_index" in s}
    n_candidates = max(ci for ci, _ in seen) + 1
    expected = {(ci, rd) for ci in range(n_candidates) for rd in (1, 2, 4)}
    assert seen == expected
    # (512, 4, 4) needs a 15-bit ADC: that slice must be in the skip log
    assert all(s["res_dac"] == 4 for s in chunk["skipped"])


def test_pareto_is_non_dominated(hw):
    model = tiny3()
    cfg = small_cfg(domains=DseDomains(ratio_rram=(0.1, 0.2, 0.3),
                                       xb_sizes=(128,), res_rram=(2,),
                                       res_dac=(1, 2), sa_top_k=2))
    result = run_dse(model, hw, 2.0, cfg)
    for (e1, t1), (e2, t2) in itertools.combinations(result.pareto, 2):
        assert not (e1 >= e2 and t1 >= t2) or (e1, t1) == (e2, t2)
        assert not (e2 >= e1 and t2 >= t1) or (e1, t1) == (e2, t2)


def test_tiny_exhaustive_dse_matches_oracle(hw):
    # tiny model + tiny budget: enumerate every duplication vector under the
    # same (single) triple and compare against the driver's best
    model = make_model([conv(1, 4, 4, 4, 4), conv(2, 4, 4, 4, 4, preds=[1])])
    # tiny reram share keeps the crossbar budget enumerable (16 crossbars:
    # one copy per layer plus two spare copies) with ample peripheral power
    total_power = 2.0
    ratio, rr, xb, rd = 0.0024, 2, 128, 2
    sets = layer_sets(model, xb, rr)
    budget = crossbar_budget(total_power, ratio, xb, rr, hw,
                             min_sets=sum(sets))
    assert budget.count <= 16
    caps = [l.out_positions for l in model.weight_bearing]
    cfg = small_cfg(domains=DseDomains(ratio_rram=(ratio,), xb_sizes=(xb,),
                                       res_rram=(rr,), res_dac=(rd,),
                                       sa_top_k=30),
                    sa=SaConfig(iterations=1500),
                    ea=EaConfig(population=8, generations=4))
    result = run_dse(model, hw, total_power, cfg)

    best_oracle = 0.0
    for factors in enumerate_wtdup(sets, caps, budget.count):
        _, ev, _ = evaluate_point(model, hw, total_power, cfg,
                                  ratio, rr, xb, factors, rd)
        best_oracle = max(best_oracle, ev.power_efficiency_tops_w)
    assert result.best_eval.power_efficiency_tops_w <= best_oracle + 1e-12
    assert result.best_eval.power_efficiency_tops_w >= 0.85 * best_oracle


def test_design_point_roundtrip(hw):
    model = tiny3()
    cfg = small_cfg()
    result = run_dse(model, hw, 2.0, cfg)
    doc = result.best_point.to_dict()
    again = DesignPoint.from_dict(doc)
    assert again == result.best_point
    ev = resimulate_point(again, model, hw, 2.0)
    assert ev.total_latency_s == result.best_eval.total_latency_s
    assert ev.power_w == result.best_eval.power_w
    assert ev.power_efficiency_tops_w == result.best_eval.power_efficiency_tops_w


def test_parallel_jobs_match_sequential(hw):
    model = tiny3()
    cfg = small_cfg(domains=DseDomains(ratio_rram=(0.1, 0.2), xb_sizes=(128,),
                                       res_rram=(2,), res_dac=(1, 2),
                                       sa_top_k=2))
    seq = run_dse(model, hw, 2.0, cfg)
    par = run_dse(model, hw, 2.0, DseConfig(**{**cfg.__dict__, "jobs": 2}))
    assert seq.best_point == par.best_point
    assert seq.pareto == par.pareto


def test_ones_mode_forces_all_ones(hw):
    model = tiny3()
    cfg = small_cfg(wtdup_mode=WTDUP_ONES)
    result = run_dse(model, hw, 2.0, cfg)
    assert result.best_point.wtdup == (1, 1, 1)


def test_derive_seed_stable():
    assert derive_seed(1, "sa", 0.1, 2, 128) == derive_seed(1, "sa", 0.1, 2, 128)
    assert derive_seed(1, "sa", 0.1, 2, 128) != derive_seed(2, "sa", 0.1, 2, 128)


def test_default_domain_fanout_arithmetic():
    # the default loop nest admits 4*3*3*30*3 compile-and-partition calls
    d = DseDomains()
    fanout = (len(d.ratio_rram) * len(d.res_rram) * len(d.xb_sizes)
              * d.sa_top_k * len(d.res_dac))
    assert fanout == 3240
