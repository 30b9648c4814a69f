"""Stage 3: macro partitioning.

A gene assigns every weight-bearing layer an owner and a macro count,
encoded as owner*1000 + count.  Rules: every layer occupies at least one
macro; at most WtDup * ceil(kernel^2 * c_in / xb_size) macros (a macro holds
at least one crossbar of the layer); two layers may share one macro set
(pairwise, owner is the earlier layer).  An evolutionary loop with the two
mutation operators below searches the rule-respecting space; fitness is the
full allocation + simulation result supplied by the driver.

This stage also splices the inter-macro communication IRs (merge, transfer)
into the dataflow DAG.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from .dataflow import (EDGE_INTER_LAYER, EDGE_INTER_OP, OP_MERGE,
                       OP_TRANSFER, DataflowDag, effective_dup, host_map)
from .errors import InfeasiblePartitionError
from .hwconfig import HardwareParams
from .model import CnnModel
from .weightdup import crossbar_set

ENCODE_BASE = 1000


def rule_caps(model: CnnModel, factors, xb_size: int) -> tuple[int, ...]:
    """Rule-c macro cap per weight-bearing layer (encoding limits it to 999)."""
    caps = []
    for layer, dup in zip(model.weight_bearing, factors):
        rows = math.ceil(layer.kernel * layer.kernel * layer.c_in / xb_size)
        caps.append(min(ENCODE_BASE - 1, dup * rows))
    return tuple(caps)


def encode_gene(gene, model: CnnModel) -> list[int]:
    """Spec encoding: owner_layer_id * 1000 + macro count."""
    wb = model.weight_bearing
    return [wb[owner].index * ENCODE_BASE + count for owner, count in gene]


def decode_gene(codes, model: CnnModel):
    wb_pos = {l.index: i for i, l in enumerate(model.weight_bearing)}
    gene = []
    for code in codes:
        owner_layer, count = divmod(int(code), ENCODE_BASE)
        gene.append((wb_pos[owner_layer], count))
    return tuple(gene)


def validate_gene(gene, factors, model: CnnModel, xb_size: int) -> bool:
    """True iff the gene satisfies rules a-c and pairwise sharing."""
    caps = rule_caps(model, factors, xb_size)
    n = len(model.weight_bearing)
    if len(gene) != n:
        return False
    sharers: dict[int, int] = {}
    for i, (owner, count) in enumerate(gene):
        if not 1 <= count <= caps[i]:
            return False
        if owner == i:
            continue
        if not 0 <= owner < i:
            return False
        o_owner, o_count = gene[owner]
        if o_owner != owner:            # the target must itself be an owner
            return False
        if count != o_count:            # a shared set is one set
            return False
        sharers[owner] = sharers.get(owner, 0) + 1
    return all(v <= 1 for v in sharers.values())


def _shared_cap(gene, caps, layer):
    """Cap of a layer's count considering a sharer bound to it."""
    cap = caps[layer]
    for i, (owner, _) in enumerate(gene):
        if i != layer and owner == layer:
            cap = min(cap, caps[i])
    return cap


def mutate_num(gene, rng: random.Random, caps):
    """Scale or step one owner layer's macro count, clamped to the rule-c cap
    (of both partners when the set is shared).  Parent returned unchanged when
    no count can move."""
    gene = list(gene)
    owners = [i for i, (owner, _) in enumerate(gene) if owner == i]
    order = owners[:]
    rng.shuffle(order)
    for i in order:
        count = gene[i][1]
        cap = _shared_cap(gene, caps, i)
        moves = []
        for candidate in (count * 2, count // 2, count + 1, count - 1):
            clamped = max(1, min(cap, candidate))
            if clamped != count:
                moves.append(clamped)
        if not moves:
            continue
        new_count = rng.choice(sorted(set(moves)))
        gene[i] = (i, new_count)
        for j, (owner, _) in enumerate(gene):
            if j != i and owner == i:
                gene[j] = (i, new_count)
        return tuple(gene)
    return tuple(gene)


def mutate_share(gene, rng: random.Random, caps, enable_sharing: bool = True):
    """Toggle one sharing relation: un-share a shared layer, or bind a private
    layer to a compatible earlier owner.  Parent returned when no action exists."""
    if not enable_sharing:
        return tuple(gene)
    gene = list(gene)
    actions = []
    shared_owners = {owner for i, (owner, _) in enumerate(gene) if owner != i}
    for i, (owner, count) in enumerate(gene):
        if owner != i:
            actions.append(("unshare", i, i, count))
        elif i not in shared_owners:
            for j in range(i):
                j_owner, j_count = gene[j]
                if j_owner != j or j in shared_owners:
                    continue
                if j_count <= caps[i]:
                    actions.append(("share", i, j, j_count))
    if not actions:
        return tuple(gene)
    action, i, owner, count = actions[rng.randrange(len(actions))]
    gene[i] = (owner, count)
    if action == "share":
        shared_owners.add(owner)
    return tuple(gene)


@dataclass
class EaConfig:
    population: int = 32
    generations: int = 40
    tournament_k: int = 3
    elites: int = 2
    seed: int = 0


@dataclass
class EaResult:
    best_gene: tuple
    best_fitness: float
    best_payload: object
    history: list[float] = field(default_factory=list)
    evaluated: int = 0


def _random_gene(rng, caps):
    gene = []
    for cap in caps:
        span = max(0, int(math.log2(cap))) if cap >= 1 else 0
        count = min(cap, 2 ** rng.randint(0, span)) if span else 1
        gene.append((len(gene), count))
    return tuple(gene)


def ea_explore(model: CnnModel, factors, xb_size: int, cfg: EaConfig, fitness,
               enable_sharing: bool = True, warm_start=()) -> EaResult:
    """Evolutionary search over macro partitionings.

    fitness(gene) returns (score, payload) with higher scores better, or
    None when the gene is infeasible downstream.  Elitism keeps the best
    genes, so the per-generation best never decreases.  Deterministic for a
    fixed cfg.seed.
    """
    caps = rule_caps(model, factors, xb_size)
    rng = random.Random(cfg.seed)
    cache: dict[tuple, tuple | None] = {}

    def evaluate(gene):
        if gene in cache:
            return cache[gene]
        assert validate_gene(gene, factors, model, xb_size), \
            f"EA produced an invalid gene: {gene}"
        result = fitness(gene)
        cache[gene] = result
        return result

    population = []
    for gene in warm_start:
        gene = tuple(gene)
        if validate_gene(gene, factors, model, xb_size) and gene not in population:
            population.append(gene)
    ones = tuple((i, 1) for i in range(len(caps)))
    if ones not in population:
        population.append(ones)
    attempts = 0
    while len(population) < cfg.population and attempts < 20 * cfg.population:
        attempts += 1   # tiny spaces cannot fill a whole distinct population
        gene = _random_gene(rng, caps)
        if gene not in population:
            population.append(gene)

    history = []
    for gene in population:
        evaluate(gene)

    def score(gene):
        result = cache.get(gene)
        return -math.inf if result is None else result[0]

    for _ in range(cfg.generations):
        population.sort(key=lambda g: (-score(g), g))
        elites = population[:cfg.elites]
        children = list(elites)
        while len(children) < cfg.population:
            contenders = [population[rng.randrange(len(population))]
                          for _ in range(cfg.tournament_k)]
            parent = max(contenders, key=score)
            child = mutate_num(parent, rng, caps)
            child = mutate_share(child, rng, caps, enable_sharing)
            evaluate(child)
            children.append(child)
        population = children
        history.append(max(score(g) for g in population))

    best = max(cache, key=lambda g: (score(g), g))
    if cache[best] is None:
        raise InfeasiblePartitionError(
            "no macro partitioning admits a feasible component allocation")
    best_score, payload = cache[best]
    return EaResult(best_gene=best, best_fitness=best_score,
                    best_payload=payload, history=history, evaluated=len(cache))


@dataclass
class MacroGroup:
    row: int
    owner_pos: int                 # weight-bearing position of the owner
    members: list[int]             # weight-bearing positions sharing the set
    layers: list[int]              # model layer ids folded into this row
    macro_start: int
    macro_count: int


@dataclass
class MacroPlan:
    """Macro layout of one gene plus the communication IRs it induced."""

    gene: tuple
    groups: list[MacroGroup]
    layer_row: dict[int, int]      # model layer id -> group row
    total_macros: int
    mesh_side: int
    merge_nodes: list[int]
    transfer_nodes: list[int]
    layer_crossbars: dict[int, list[int]]   # wb layer id -> crossbars per macro

    def macros_per_row(self):
        return [g.macro_count for g in self.groups]

    def coord(self, macro: int) -> tuple[int, int]:
        return divmod(macro, self.mesh_side)

    def hops(self, src: int, dst: int) -> int:
        (r1, c1), (r2, c2) = self.coord(src), self.coord(dst)
        return abs(r1 - r2) + abs(c1 - c2)

    def group_diameter(self, row: int) -> int:
        g = self.groups[row]
        if g.macro_count <= 1:
            return 0
        first, last = g.macro_start, g.macro_start + g.macro_count - 1
        return self.hops(first, last)


def build_macro_plan(dag: DataflowDag, gene, factors, model: CnnModel,
                     xb_size: int, res_rram: int,
                     hw: HardwareParams) -> tuple[DataflowDag, MacroPlan]:
    """Materialize a gene: place crossbars on macros round-robin, then splice
    merge IRs (an output vector spanning several macros) and transfer IRs
    (producer and consumer groups on different macros) into a copy of the DAG.
    """
    wb = model.weight_bearing
    hosts = host_map(model)
    wb_pos = {l.index: i for i, l in enumerate(wb)}
    dups = {l.index: effective_dup(l, model, factors, hosts) for l in model.layers}

    owners = [i for i, (owner, _) in enumerate(gene) if owner == i]
    groups: list[MacroGroup] = []
    row_of_owner = {}
    macro_cursor = 0
    for row, owner in enumerate(owners):
        count = gene[owner][1]
        members = [i for i, (o, _) in enumerate(gene) if o == owner]
        groups.append(MacroGroup(row=row, owner_pos=owner, members=members,
                                 layers=[wb[i].index for i in members],
                                 macro_start=macro_cursor, macro_count=count))
        row_of_owner[owner] = row
        macro_cursor += count
    total_macros = macro_cursor

    layer_row: dict[int, int] = {}
    for layer in model.layers:
        host = hosts[layer.index]
        layer_row[layer.index] = row_of_owner[gene[wb_pos[host]][0]]
    for group in groups:
        for layer in model.layers:
            if layer_row[layer.index] == group.row and layer.index not in group.layers:
                group.layers.append(layer.index)

    # round-robin crossbar placement; per-macro counts differ by at most one
    layer_crossbars: dict[int, list[int]] = {}
    spans: dict[int, bool] = {}
    for i, layer in enumerate(wb):
        row = layer_row[layer.index]
        n = groups[row].macro_count
        per_copy = crossbar_set(layer, xb_size, res_rram)
        total = factors[i] * per_copy
        base, extra = divmod(total, n)
        layer_crossbars[layer.index] = [base + (1 if m < extra else 0)
                                        for m in range(n)]
        spans[layer.index] = n > 1 and per_copy > 1

    new_dag = DataflowDag()
    new_dag.nodes = list(dag.nodes)
    new_dag.succs = [list(s) for s in dag.succs]
    new_dag.preds = [list(p) for p in dag.preds]
    new_dag.edge_tags = [list(t) for t in dag.edge_tags]
    new_dag.loads = {k: list(v) for k, v in dag.loads.items()}
    new_dag.stores = {k: list(v) for k, v in dag.stores.items()}

    def retarget(src, old_dst, new_dst):
        for k, v in enumerate(new_dag.succs[src]):
            if v == old_dst:
                new_dag.succs[src][k] = new_dst
                new_dag.preds[old_dst].remove(src)
                new_dag.preds[new_dst].append(src)
                return new_dag.edge_tags[src][k]
        raise AssertionError("edge vanished during splicing")

    merge_nodes: list[int] = []
    for layer in wb:
        if not spans[layer.index]:
            continue
        row = layer_row[layer.index]
        n = groups[row].macro_count
        for store in new_dag.stores[layer.index]:
            merge = new_dag.add_node(OP_MERGE, layer.index, macro_num=n,
                                     vec_width=layer.c_out)
            for pred in list(new_dag.preds[store]):
                retarget(pred, store, merge)
            new_dag.add_edge(merge, store, EDGE_INTER_OP)
            merge_nodes.append(merge)

    transfer_nodes: list[int] = []
    cross_edges: dict[tuple[int, int], list[int]] = {}
    for u, v, tag in dag.edges():
        if tag != EDGE_INTER_LAYER:
            continue
        producer = dag.nodes[u].layer
        consumer = dag.nodes[v].layer
        if layer_row[producer] == layer_row[consumer]:
            continue
        cross_edges.setdefault((u, consumer), []).append(v)
    for (store, consumer), load_ids in sorted(cross_edges.items()):
        producer = new_dag.nodes[store].layer
        src = groups[layer_row[producer]].macro_start
        dst = groups[layer_row[consumer]].macro_start
        width = dups[producer] * model.layer(producer).c_out
        transfer = new_dag.add_node(OP_TRANSFER, producer, vec_width=width,
                                    src=src, dst=dst)
        for load in load_ids:
            retarget(store, load, transfer)
            new_dag.add_edge(transfer, load, EDGE_INTER_LAYER)
        # collapse the duplicate store->transfer edges left by retargeting
        seen_first = False
        keep_succs, keep_tags = [], []
        for v, tag in zip(new_dag.succs[store], new_dag.edge_tags[store]):
            if v == transfer:
                if seen_first:
                    new_dag.preds[transfer].remove(store)
                    continue
                seen_first = True
                keep_succs.append(v)
                keep_tags.append(EDGE_INTER_OP)
            else:
                keep_succs.append(v)
                keep_tags.append(tag)
        new_dag.succs[store] = keep_succs
        new_dag.edge_tags[store] = keep_tags
        transfer_nodes.append(transfer)

    plan = MacroPlan(
        gene=tuple(gene), groups=groups, layer_row=layer_row,
        total_macros=total_macros,
        mesh_side=max(1, math.ceil(math.sqrt(total_macros))),
        merge_nodes=merge_nodes, transfer_nodes=transfer_nodes,
        layer_crossbars=layer_crossbars)
    return new_dag, plan
