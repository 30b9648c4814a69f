"""Stage 2: dataflow compilation.

Translates the model plus a duplication vector and DAC resolution into a
DAG of typed IR nodes.  Computation IRs are indexed by (layer, block, bit);
communication IRs move operands within a macro (load/store) or, after the
partitioning stage splices them in, between macros (merge/transfer).

Four dependency classes are wired here:

  inter_layer      load of a consumer block waits for the earliest producer
                   block whose accumulated outputs cover its receptive field
  inter_block      matrix-vector products of consecutive blocks share the
                   layer's crossbar sets
  inter_bit        input bit-slices of one block are processed in order
  inter_operation  load -> mvm -> adc -> alu -> store inside one block
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import GraphCycleError, ModelGraphError
from .model import CnnModel, LayerSpec

# IR operations (Table-style categories: computation / intra-macro / inter-macro)
OP_MVM = "mvm"
OP_ADC = "adc"
OP_ALU = "alu"
OP_LOAD = "load"
OP_STORE = "store"
OP_MERGE = "merge"
OP_TRANSFER = "transfer"

CATEGORY = {
    OP_MVM: "computation",
    OP_ADC: "computation",
    OP_ALU: "computation",
    OP_LOAD: "intra_macro_comm",
    OP_STORE: "intra_macro_comm",
    OP_MERGE: "inter_macro_comm",
    OP_TRANSFER: "inter_macro_comm",
}

ALU_SHIFT_ADD = "shift_add"
ALU_POOL = "pool"
ALU_RELU = "relu"
ALU_VECTOR_ADD = "vector_add"

EDGE_INTER_LAYER = "inter_layer"
EDGE_INTER_BLOCK = "inter_block"
EDGE_INTER_BIT = "inter_bit"
EDGE_INTER_OP = "inter_operation"


@dataclass(slots=True)
class IrNode:
    """One IR operation.  Fields are populated exactly per operation type:
    mvm carries xb_num but no vec_width; load/store carry no bit; merge and
    transfer carry no cnt/bit."""

    id: int
    op: str
    layer: int
    cnt: int | None = None
    bit: int | None = None
    vec_width: int | None = None
    xb_num: int | None = None
    aluop: str | None = None
    macro_num: int | None = None
    src: int | None = None
    dst: int | None = None

    @property
    def category(self) -> str:
        return CATEGORY[self.op]


class DataflowDag:
    """IR nodes plus tagged dependency edges; append-only during compilation."""

    def __init__(self):
        self.nodes: list[IrNode] = []
        self.succs: list[list[int]] = []
        self.preds: list[list[int]] = []
        self.edge_tags: list[list[str]] = []   # parallel to succs
        self.loads: dict[int, list[int]] = {}   # layer -> node id per block
        self.stores: dict[int, list[int]] = {}

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    @property
    def edge_count(self) -> int:
        return sum(len(s) for s in self.succs)

    def add_node(self, op, layer, **kw) -> int:
        nid = len(self.nodes)
        self.nodes.append(IrNode(id=nid, op=op, layer=layer, **kw))
        self.succs.append([])
        self.preds.append([])
        self.edge_tags.append([])
        return nid

    def add_edge(self, src: int, dst: int, tag: str) -> None:
        self.succs[src].append(dst)
        self.edge_tags[src].append(tag)
        self.preds[dst].append(src)

    def edges(self):
        for u, (succ, tags) in enumerate(zip(self.succs, self.edge_tags)):
            for v, tag in zip(succ, tags):
                yield u, v, tag

    def nodes_of(self, layer: int, op: str | None = None):
        return [n for n in self.nodes
                if n.layer == layer and (op is None or n.op == op)]

    def topological_order(self) -> list[int]:
        indeg = [len(p) for p in self.preds]
        stack = [i for i, d in enumerate(indeg) if d == 0]
        order = []
        while stack:
            u = stack.pop()
            order.append(u)
            for v in self.succs[u]:
                indeg[v] -= 1
                if indeg[v] == 0:
                    stack.append(v)
        if len(order) != len(self.nodes):
            raise GraphCycleError("dataflow graph contains a cycle")
        return order


def blocks_for(layer: LayerSpec, wtdup: int) -> int:
    return math.ceil(layer.out_positions / wtdup)


def bits_for(layer: LayerSpec, res_dac: int) -> int:
    return math.ceil(layer.prec_act / res_dac)


def host_map(model: CnnModel) -> dict[int, int]:
    """Weight-bearing host of every layer.

    Pseudo-layers (pool/relu/residual_add) execute on the macros of their
    nearest weight-bearing ancestor; residual adds pick the highest-indexed
    one.  A pseudo-layer with no weight-bearing ancestor falls back to the
    first weight-bearing layer.
    """
    hosts: dict[int, int] = {}
    first_wb = model.weight_bearing[0].index
    for layer in model.layers:
        if layer.weight_bearing:
            hosts[layer.index] = layer.index
            continue
        best = 0
        for p in layer.predecessors:
            candidate = hosts.get(p, 0)
            best = max(best, candidate)
        hosts[layer.index] = best if best else first_wb
    return hosts


def effective_dup(layer: LayerSpec, model: CnnModel, factors, hosts) -> int:
    """Block width of a layer: its own factor, or the host's for pseudo-layers."""
    wb_index = {l.index: i for i, l in enumerate(model.weight_bearing)}
    host = hosts[layer.index]
    dup = factors[wb_index[host]]
    return min(dup, layer.out_positions)


def emit_layer_irs(dag: DataflowDag, layer: LayerSpec, dup: int, res_dac: int,
                   xb_size: int, res_rram: int) -> list[int]:
    """Emit one layer's IR nodes (no cross-layer edges yet).

    Weight-bearing layers produce, per block: one load, then per input
    bit-slice an mvm -> adc -> shift_add chain, then optional fused pool/relu
    ALUs and one store.  Pseudo-layers produce load -> alu -> store only.
    """
    from .weightdup import crossbar_set  # local import: avoids a module cycle

    n_blocks = blocks_for(layer, dup)
    first = dag.node_count
    loads, stores = [], []

    if layer.weight_bearing:
        n_bits = bits_for(layer, res_dac)
        slices = math.ceil(layer.prec_wt / res_rram)
        row_tiles = math.ceil(layer.kernel * layer.kernel * layer.c_in / xb_size)
        xb_num = dup * crossbar_set(layer, xb_size, res_rram)
        load_width = dup * layer.kernel * layer.kernel * layer.c_in
        sample_width = dup * row_tiles * layer.c_out * slices
        out_width = dup * layer.c_out

        for cnt in range(n_blocks):
            load = dag.add_node(OP_LOAD, layer.index, cnt=cnt, vec_width=load_width)
            loads.append(load)
            prev_mvm = None
            last_alu = None
            for bit in range(n_bits):
                mvm = dag.add_node(OP_MVM, layer.index, cnt=cnt, bit=bit, xb_num=xb_num)
                adc = dag.add_node(OP_ADC, layer.index, cnt=cnt, bit=bit,
                                   vec_width=sample_width)
                alu = dag.add_node(OP_ALU, layer.index, cnt=cnt, bit=bit,
                                   vec_width=sample_width, aluop=ALU_SHIFT_ADD)
                if bit == 0:
                    dag.add_edge(load, mvm, EDGE_INTER_OP)
                else:
                    dag.add_edge(prev_mvm, mvm, EDGE_INTER_BIT)
                dag.add_edge(mvm, adc, EDGE_INTER_OP)
                dag.add_edge(adc, alu, EDGE_INTER_OP)
                prev_mvm = mvm
                last_alu = alu
            tail = last_alu
            for fused in layer.fused:
                aluop = ALU_POOL if fused == "pool" else ALU_RELU
                node = dag.add_node(OP_ALU, layer.index, cnt=cnt, bit=n_bits - 1,
                                    vec_width=out_width, aluop=aluop)
                dag.add_edge(tail, node, EDGE_INTER_OP)
                tail = node
            store = dag.add_node(OP_STORE, layer.index, cnt=cnt, vec_width=out_width)
            dag.add_edge(tail, store, EDGE_INTER_OP)
            stores.append(store)
    else:
        aluop = {"pool": ALU_POOL, "relu": ALU_RELU,
                 "residual_add": ALU_VECTOR_ADD}[layer.kind]
        n_inputs = max(1, len(layer.predecessors))
        load_width = n_inputs * dup * layer.kernel * layer.kernel * layer.c_in
        out_width = dup * layer.c_out
        for cnt in range(n_blocks):
            load = dag.add_node(OP_LOAD, layer.index, cnt=cnt, vec_width=load_width)
            alu = dag.add_node(OP_ALU, layer.index, cnt=cnt, bit=0,
                               vec_width=out_width, aluop=aluop)
            store = dag.add_node(OP_STORE, layer.index, cnt=cnt, vec_width=out_width)
            dag.add_edge(load, alu, EDGE_INTER_OP)
            dag.add_edge(alu, store, EDGE_INTER_OP)
            loads.append(load)
            stores.append(store)

    dag.loads[layer.index] = loads
    dag.stores[layer.index] = stores
    return list(range(first, dag.node_count))


def _stride_and_pad(in_size: int, out_size: int, kernel: int) -> tuple[int, int]:
    """Stride/padding consistent with the producer/consumer map sizes."""
    stride = max(1, round(in_size / out_size))
    pad_total = max(0, (out_size - 1) * stride + kernel - in_size)
    return stride, pad_total // 2


def max_input_index(consumer: LayerSpec, producer: LayerSpec,
                    block: int, dup: int) -> int:
    """Largest row-major input position the consumer block reads.

    Blocks cover output positions [block*dup, (block+1)*dup) in row-major
    order; the last of them dominates because input positions are row-major
    too.  Fully-connected consumers read the whole producer map.
    """
    in_w, in_h = producer.out_w, producer.out_h
    if consumer.kind == "fc" or (consumer.out_positions == 1 and consumer.kernel == 1):
        return in_w * in_h - 1
    last = min(consumer.out_positions, (block + 1) * dup) - 1
    oy, ox = divmod(last, consumer.out_w)
    sy, pad_y = _stride_and_pad(in_h, consumer.out_h, consumer.kernel)
    sx, pad_x = _stride_and_pad(in_w, consumer.out_w, consumer.kernel)
    iy = min(in_h - 1, oy * sy - pad_y + consumer.kernel - 1)
    ix = min(in_w - 1, ox * sx - pad_x + consumer.kernel - 1)
    return max(0, iy) * in_w + max(0, ix)


def wire_dependencies(dag: DataflowDag, model: CnnModel, dups: dict[int, int]) -> None:
    """Add inter_layer and inter_block edges across the emitted nodes."""
    for layer in model.layers:
        dup = dups[layer.index]
        loads = dag.loads[layer.index]
        for p in layer.predecessors:
            producer = model.layer(p)
            p_dup = dups[p]
            p_stores = dag.stores[p]
            for block, load in enumerate(loads):
                needed = max_input_index(layer, producer, block, dup)
                ready_block = min(needed // p_dup, len(p_stores) - 1)
                if ready_block < 0:
                    raise ModelGraphError(
                        f"layer {layer.index} block {block} depends on a "
                        f"nonexistent block of layer {p}")
                dag.add_edge(p_stores[ready_block], load, EDGE_INTER_LAYER)
        if layer.weight_bearing:
            mvms = dag.nodes_of(layer.index, OP_MVM)
            by_key = {(n.cnt, n.bit): n.id for n in mvms}
            n_blocks = blocks_for(layer, dup)
            n_bits = max((n.bit for n in mvms), default=-1) + 1
            for cnt in range(1, n_blocks):
                for bit in range(n_bits):
                    dag.add_edge(by_key[(cnt - 1, bit)], by_key[(cnt, bit)],
                                 EDGE_INTER_BLOCK)


def compile_dataflow(model: CnnModel, factors, res_dac: int,
                     xb_size: int, res_rram: int) -> DataflowDag:
    """Full stage-2 compilation: emit every layer then wire dependencies."""
    if len(factors) != len(model.weight_bearing):
        raise ModelGraphError(
            f"duplication vector has {len(factors)} entries for "
            f"{len(model.weight_bearing)} weight-bearing layers")
    dag = DataflowDag()
    hosts = host_map(model)
    dups = {l.index: effective_dup(l, model, factors, hosts) for l in model.layers}
    for layer in model.layers:
        emit_layer_irs(dag, layer, dups[layer.index], res_dac, xb_size, res_rram)
    wire_dependencies(dag, model, dups)
    return dag


def dag_stats(dag: DataflowDag) -> dict:
    """Node count, longest path in node count, and per-op histogram."""
    order = dag.topological_order()
    depth = [1] * dag.node_count
    for u in order:
        for v in dag.succs[u]:
            if depth[u] + 1 > depth[v]:
                depth[v] = depth[u] + 1
    histogram: dict[str, int] = {}
    for n in dag.nodes:
        histogram[n.op] = histogram.get(n.op, 0) + 1
    return {
        "node_count": dag.node_count,
        "edge_count": dag.edge_count,
        "depth": max(depth) if depth else 0,
        "ops": histogram,
    }


def dump_dag(dag: DataflowDag, fh) -> None:
    """One node per line, one edge per line; stable debugging format."""
    for n in dag.nodes:
        attrs = []
        for name in ("cnt", "bit", "vec_width", "xb_num", "aluop",
                     "macro_num", "src", "dst"):
            value = getattr(n, name)
            if value is not None:
                attrs.append(f"{name}={value}")
        fh.write(f"node {n.id} {n.op} layer={n.layer} " + " ".join(attrs) + "\n")
    for u, v, tag in dag.edges():
        fh.write(f"edge {u} {v} {tag}\n")
