"""Stage 1: weight duplication.

Sizes each layer's crossbar set, converts the power budget into a crossbar
count, and runs a simulated-annealing filter that returns the top-K
duplication vectors by a cheap balance score (spread of per-layer step
counts plus a weighted spread of per-layer data-access volumes).
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .errors import InfeasibleBudgetError
from .hwconfig import HardwareParams
from .model import CnnModel, LayerSpec


def crossbar_set(layer: LayerSpec, xb_size: int, res_rram: int) -> int:
    """Crossbars holding one full copy of a layer's weights.

    Rows tile the kernel*kernel*c_in input dimension, columns tile c_out,
    and each weight is sliced over ceil(prec_wt / res_rram) cells.
    """
    rows = math.ceil(layer.kernel * layer.kernel * layer.c_in / xb_size)
    cols = math.ceil(layer.c_out / xb_size)
    slices = math.ceil(layer.prec_wt / res_rram)
    return rows * cols * slices


def steps_for_layer(layer: LayerSpec, wtdup: int) -> int:
    """Computation blocks needed to cover every output position."""
    return math.ceil(layer.out_positions / wtdup)


def access_volume(layer: LayerSpec, wtdup: int) -> int:
    """Per-block data access volume: inputs loaded plus outputs stored."""
    return wtdup * (layer.kernel * layer.kernel * layer.c_in + layer.c_out)


@dataclass(frozen=True)
class CrossbarBudget:
    """Crossbar count derivable from the power budget split."""

    total_power: float
    ratio_rram: float
    xb_size: int
    res_rram: int
    count: int


@dataclass(frozen=True)
class WtDupVector:
    """One duplication candidate: per weight-bearing-layer factors and score."""

    factors: tuple[int, ...]
    sets: tuple[int, ...]
    energy: float

    @property
    def crossbars_used(self) -> int:
        return sum(f * s for f, s in zip(self.factors, self.sets))


@dataclass
class SaConfig:
    iterations: int = 5000
    cooling: float = 0.995
    initial_temp: float | None = None
    seed: int = 0
    top_k: int = 30
    pow2_move_prob: float = 0.2


def layer_sets(model: CnnModel, xb_size: int, res_rram: int) -> tuple[int, ...]:
    return tuple(crossbar_set(l, xb_size, res_rram) for l in model.weight_bearing)


def crossbar_budget(total_power: float, ratio_rram: float, xb_size: int,
                    res_rram: int, hw: HardwareParams,
                    min_sets: int | None = None) -> CrossbarBudget:
    """Crossbar count affordable under ratio_rram * total_power.

    When min_sets (sum of per-layer set sizes) is given, a budget that cannot
    hold even one copy of every layer raises instead of being clamped.
    """
    unit = hw.crossbar_power(xb_size, res_rram)
    count = int(total_power * ratio_rram / unit)
    if min_sets is not None and count < min_sets:
        raise InfeasibleBudgetError(
            f"budget of {count} crossbars cannot hold one copy of every layer "
            f"({min_sets} needed)", shortfall=min_sets - count)
    return CrossbarBudget(total_power=total_power, ratio_rram=ratio_rram,
                          xb_size=xb_size, res_rram=res_rram, count=count)


def _pstdev(values) -> float:
    n = len(values)
    mean = sum(values) / n
    return math.sqrt(sum((v - mean) ** 2 for v in values) / n)


def default_alpha(model: CnnModel) -> float:
    """Normalizes the two score terms: 1 / mean access volume at all-ones."""
    vols = [access_volume(l, 1) for l in model.weight_bearing]
    mean = sum(vols) / len(vols)
    return 1.0 / mean if mean > 0 else 1.0


def energy_sa(factors, model: CnnModel, alpha: float) -> float:
    """Balance score of a duplication vector (lower is better).

    Population standard deviation of per-layer step counts
    (out_positions / factor) plus alpha times the population standard
    deviation of per-layer access volumes.
    """
    layers = model.weight_bearing
    steps = [l.out_positions / f for l, f in zip(layers, factors)]
    vols = [access_volume(l, f) for l, f in zip(layers, factors)]
    return _pstdev(steps) + alpha * _pstdev(vols)


def _repair(factors, sets, capacity):
    """Decrement the biggest crossbar consumer until the budget holds."""
    factors = list(factors)
    while sum(f * s for f, s in zip(factors, sets)) > capacity:
        candidates = [i for i, f in enumerate(factors) if f > 1]
        if not candidates:
            break
        worst = max(candidates, key=lambda i: (factors[i] * sets[i], -i))
        factors[worst] -= 1
    return tuple(factors)


def _random_candidate(rng, caps, sets, capacity):
    factors = [1] * len(sets)
    slack = capacity - sum(sets)
    while slack > 0:
        growable = [i for i in range(len(sets))
                    if factors[i] < caps[i] and sets[i] <= slack]
        if not growable:
            break
        i = growable[rng.randrange(len(growable))]
        factors[i] += 1
        slack -= sets[i]
        if rng.random() < 0.05:
            break
    return tuple(factors)


def sa_filter(model: CnnModel, budget: CrossbarBudget, alpha: float | None = None,
              cfg: SaConfig | None = None) -> list[WtDupVector]:
    """Select the top-K duplication vectors by simulated annealing.

    Keeps a deduplicated archive of the best K vectors seen anywhere on the
    trajectory, so the result is never worse than the all-ones start.
    Deterministic for a fixed cfg.seed.  Returns fewer than K vectors when
    the feasible set itself is smaller.
    """
    cfg = cfg or SaConfig()
    if alpha is None:
        alpha = default_alpha(model)
    layers = model.weight_bearing
    sets = layer_sets(model, budget.xb_size, budget.res_rram)
    caps = [l.out_positions for l in layers]
    capacity = budget.count
    if sum(sets) > capacity:
        raise InfeasibleBudgetError(
            f"budget {capacity} below the {sum(sets)} crossbars of one full copy",
            shortfall=sum(sets) - capacity)

    rng = random.Random(cfg.seed)
    current = tuple([1] * len(layers))
    current_e = energy_sa(current, model, alpha)
    archive: dict[tuple[int, ...], float] = {current: current_e}

    temp = cfg.initial_temp
    if temp is None:
        probe = [energy_sa(_random_candidate(rng, caps, sets, capacity), model, alpha)
                 for _ in range(100)]
        temp = _pstdev(probe)
        if temp <= 0:
            temp = 1.0

    for _ in range(cfg.iterations):
        cand = list(current)
        i = rng.randrange(len(layers))
        step = 2 ** rng.randint(1, 3) if rng.random() < cfg.pow2_move_prob else 1
        if rng.random() < 0.5:
            cand[i] = min(caps[i], cand[i] + step)
        else:
            cand[i] = max(1, cand[i] - step)
        cand = _repair(cand, sets, capacity)
        cand_e = archive.get(cand)
        if cand_e is None:
            cand_e = energy_sa(cand, model, alpha)
            archive[cand] = cand_e
        delta = cand_e - current_e
        if delta < 0 or rng.random() < math.exp(-delta / temp if temp > 0 else -1e30):
            current, current_e = cand, cand_e
        temp *= cfg.cooling

    ranked = sorted(archive.items(), key=lambda kv: (kv[1], kv[0]))[:cfg.top_k]
    return [WtDupVector(factors=f, sets=sets, energy=e) for f, e in ranked]


def ones_vector(model: CnnModel, budget: CrossbarBudget,
                alpha: float | None = None) -> WtDupVector:
    """The no-duplication baseline."""
    if alpha is None:
        alpha = default_alpha(model)
    sets = layer_sets(model, budget.xb_size, budget.res_rram)
    ones = tuple([1] * len(sets))
    if sum(sets) > budget.count:
        raise InfeasibleBudgetError(
            f"budget {budget.count} below the {sum(sets)} crossbars of one full copy",
            shortfall=sum(sets) - budget.count)
    return WtDupVector(factors=ones, sets=sets, energy=energy_sa(ones, model, alpha))


def proportional_vector(model: CnnModel, budget: CrossbarBudget,
                        alpha: float | None = None) -> WtDupVector:
    """Output-map-proportional heuristic: factors scale with out_w * out_h,
    scaled to exhaust the crossbar budget, then floored (>= 1, capped at the
    output-position count)."""
    if alpha is None:
        alpha = default_alpha(model)
    layers = model.weight_bearing
    sets = layer_sets(model, budget.xb_size, budget.res_rram)
    caps = [l.out_positions for l in layers]

    def factors_at(theta):
        return [min(caps[i], max(1, int(theta * layers[i].out_positions)))
                for i in range(len(layers))]

    def used(theta):
        return sum(f * s for f, s in zip(factors_at(theta), sets))

    if used(0.0) > budget.count:
        raise InfeasibleBudgetError(
            f"budget {budget.count} below the {sum(sets)} crossbars of one full copy",
            shortfall=sum(sets) - budget.count)
    lo, hi = 0.0, 1.0
    while used(hi) <= budget.count and hi < 2 ** 30:
        hi *= 2
    for _ in range(80):
        mid = (lo + hi) / 2
        if used(mid) <= budget.count:
            lo = mid
        else:
            hi = mid
    factors = tuple(factors_at(lo))
    return WtDupVector(factors=factors, sets=sets,
                       energy=energy_sa(factors, model, alpha))
