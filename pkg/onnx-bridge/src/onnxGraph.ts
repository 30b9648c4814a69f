/** Thin accessors over the decoded ONNX protobuf graph. */

// onnx-proto is CommonJS: default-import it for Node ESM compatibility
import onnxProto from "onnx-proto";
import type { onnx } from "onnx-proto";

import { ShapeInferenceError } from "./types.js";

const { onnx: proto } = onnxProto;

/** protobufjs int64 values arrive as Long or number depending on magnitude */
export function toNum(value: number | { toNumber(): number } | null | undefined): number {
    if (value == null) return 0;
    return typeof value === "number" ? value : value.toNumber();
}

export function decodeModel(bytes: Uint8Array): onnx.ModelProto {
    const model = proto.ModelProto.decode(bytes);
    if (!model.graph) {
        throw new ShapeInferenceError("model has no graph");
    }
    return model;
}

export function attrInts(node: onnx.INodeProto, name: string): number[] | undefined {
    const attr = (node.attribute ?? []).find((a) => a.name === name);
    if (!attr) return undefined;
    return (attr.ints ?? []).map((v) => toNum(v));
}

export function attrInt(node: onnx.INodeProto, name: string, fallback: number): number {
    const attr = (node.attribute ?? []).find((a) => a.name === name);
    if (!attr) return fallback;
    return toNum(attr.i);
}

export function initializerDims(graph: onnx.IGraphProto): Map<string, number[]> {
    const dims = new Map<string, number[]>();
    for (const tensor of graph.initializer ?? []) {
        if (tensor.name) {
            dims.set(tensor.name, (tensor.dims ?? []).map((d) => toNum(d)));
        }
    }
    return dims;
}

/** Static NCHW shape of the graph input that is not an initializer. */
export function graphInputShape(graph: onnx.IGraphProto,
                                initializers: Map<string, number[]>): { name: string; chw: number[] } {
    for (const vi of graph.input ?? []) {
        if (!vi.name || initializers.has(vi.name)) continue;
        const dims = vi.type?.tensorType?.shape?.dim ?? [];
        const values = dims.map((d) => {
            if (d.dimParam) {
                throw new ShapeInferenceError(
                    `graph input '${vi.name}' has symbolic dimension '${d.dimParam}'`);
            }
            return toNum(d.dimValue);
        });
        if (values.length !== 4 || values.slice(1).some((v) => v <= 0)) {
            throw new ShapeInferenceError(
                `graph input '${vi.name}' must be a static NCHW tensor, got [${values}]`);
        }
        return { name: vi.name, chw: values.slice(1) };
    }
    throw new ShapeInferenceError("graph has no non-initializer input");
}

/** Nodes sorted so every node appears after the producers of its inputs. */
export function topologicalNodes(graph: onnx.IGraphProto): onnx.INodeProto[] {
    const nodes = graph.node ?? [];
    const producer = new Map<string, number>();
    nodes.forEach((node, i) => (node.output ?? []).forEach((o) => producer.set(o, i)));
    const state = new Array<number>(nodes.length).fill(0);
    const order: onnx.INodeProto[] = [];

    const visit = (i: number) => {
        if (state[i] === 2) return;
        if (state[i] === 1) throw new ShapeInferenceError("graph contains a cycle");
        state[i] = 1;
        for (const input of nodes[i].input ?? []) {
            const p = producer.get(input);
            if (p !== undefined) visit(p);
        }
        state[i] = 2;
        order.push(nodes[i]);
    };
    nodes.forEach((_, i) => visit(i));
    return order;
}

/** How many nodes consume each tensor (drives relu fusion decisions). */
export function consumerCounts(graph: onnx.IGraphProto): Map<string, number> {
    const counts = new Map<string, number>();
    for (const node of graph.node ?? []) {
        for (const input of node.input ?? []) {
            counts.set(input, (counts.get(input) ?? 0) + 1);
        }
    }
    return counts;
}
