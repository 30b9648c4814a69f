/** ONNX graph -> pimsyn model description.
 *
 * Supported operator set: Conv, Gemm, MaxPool, AveragePool, Relu, Add,
 * Flatten.  Conv/Gemm become weight-bearing layers; pools and Add become
 * ALU-only pseudo-layers; a Relu whose input feeds nothing else is fused
 * into the producing layer; Flatten is folded away.  Pools stay standalone
 * because folding a stride-changing pool into its conv would shrink the
 * conv's output map and undercount its computation.
 */

import { readFileSync, writeFileSync } from "node:fs";

import type { onnx } from "onnx-proto";

import {
    attrInt,
    attrInts,
    consumerCounts,
    decodeModel,
    graphInputShape,
    initializerDims,
    topologicalNodes,
    toNum,
} from "./onnxGraph.js";
import {
    ConversionReport,
    ModelDoc,
    ModelLayer,
    ShapeInferenceError,
    UnsupportedOperatorError,
} from "./types.js";

export interface ConvertOptions {
    name?: string;
    weightBits?: number;
    actBits?: number;
}

const SUPPORTED = new Set(["Conv", "Gemm", "MaxPool", "AveragePool",
                           "Relu", "Add", "Flatten"]);

interface TensorInfo {
    chw: number[];          // [channels, height, width]
    sourceLayer: number;    // producing layer id, 0 = network input
}

function squareAttr(node: onnx.INodeProto, name: string, op: string): number {
    const values = attrInts(node, name);
    if (!values || values.length === 0) return 1;
    if (values.some((v) => v !== values[0])) {
        throw new UnsupportedOperatorError(op, `non-square ${name} [${values}]`);
    }
    return values[0];
}

function spatialOut(inSize: number, kernel: number, stride: number,
                    padBegin: number, padEnd: number): number {
    const out = Math.floor((inSize + padBegin + padEnd - kernel) / stride) + 1;
    if (out <= 0) {
        throw new ShapeInferenceError(
            `window (k=${kernel}, s=${stride}) does not fit an input of ${inSize}`);
    }
    return out;
}

function windowOut(node: onnx.INodeProto, op: string,
                   chw: number[]): { kernel: number; h: number; w: number } {
    const kernel = squareAttr(node, "kernel_shape", op);
    const stride = squareAttr(node, "strides", op);
    const dilation = squareAttr(node, "dilations", op);
    if (dilation !== 1) {
        throw new UnsupportedOperatorError(op, "dilations other than 1");
    }
    const pads = attrInts(node, "pads") ?? [0, 0, 0, 0];
    const h = spatialOut(chw[1], kernel, stride, pads[0], pads[2] ?? pads[0]);
    const w = spatialOut(chw[2], kernel, stride, pads[1] ?? pads[0],
                         pads[3] ?? pads[1] ?? pads[0]);
    return { kernel, h, w };
}

export function convertModel(bytes: Uint8Array,
                             options: ConvertOptions = {}): { doc: ModelDoc; report: ConversionReport } {
    const model = decodeModel(bytes);
    const graph = model.graph!;
    const weights = initializerDims(graph);
    const input = graphInputShape(graph, weights);
    const consumers = consumerCounts(graph);

    const tensors = new Map<string, TensorInfo>();
    tensors.set(input.name, { chw: input.chw, sourceLayer: 0 });

    const layers: ModelLayer[] = [];
    const report: ConversionReport = { supported_ops: [], skipped_ops: [],
                                       emitted_layers: 0 };

    const dataInput = (node: onnx.INodeProto, index = 0): TensorInfo => {
        const name = (node.input ?? [])[index];
        const info = name === undefined ? undefined : tensors.get(name);
        if (!info) {
            throw new ShapeInferenceError(
                `node '${node.name || node.opType}' reads unknown tensor '${name}'`);
        }
        return info;
    };

    const emit = (partial: Omit<ModelLayer, "id" | "predecessors">,
                  preds: number[], output: string): ModelLayer => {
        const layer: ModelLayer = {
            id: layers.length + 1,
            predecessors: preds.filter((p) => p > 0),
            ...partial,
        };
        layers.push(layer);
        tensors.set(output, {
            chw: [layer.out_channels, layer.out_height, layer.out_width],
            sourceLayer: layer.id,
        });
        return layer;
    };

    for (const node of topologicalNodes(graph)) {
        const op = node.opType ?? "";
        if (!SUPPORTED.has(op)) {
            throw new UnsupportedOperatorError(op || "(missing opType)");
        }
        const output = (node.output ?? [])[0];
        if (!output) {
            throw new ShapeInferenceError(`node '${node.name}' has no output`);
        }

        if (op === "Conv") {
            const x = dataInput(node);
            const wDims = weights.get((node.input ?? [])[1] ?? "");
            if (!wDims || wDims.length !== 4) {
                throw new ShapeInferenceError(
                    `Conv '${node.name}' weight tensor is not a static 4-D initializer`);
            }
            const { kernel, h, w } = windowOut(node, op, x.chw);
            if (kernel !== wDims[2] || wDims[2] !== wDims[3]) {
                throw new UnsupportedOperatorError(op, "non-square kernel");
            }
            emit({
                kind: "conv", kernel,
                in_channels: x.chw[0], out_channels: wDims[0],
                out_width: w, out_height: h,
            }, [x.sourceLayer], output);
            report.supported_ops.push(op);
        } else if (op === "Gemm") {
            const x = dataInput(node);
            const bDims = weights.get((node.input ?? [])[1] ?? "");
            if (!bDims || bDims.length !== 2) {
                throw new ShapeInferenceError(
                    `Gemm '${node.name}' weight tensor is not a static 2-D initializer`);
            }
            const transB = attrInt(node, "transB", 0);
            const [inFeat, outFeat] = transB ? [bDims[1], bDims[0]] : [bDims[0], bDims[1]];
            const flat = x.chw[0] * x.chw[1] * x.chw[2];
            if (flat !== inFeat) {
                throw new ShapeInferenceError(
                    `Gemm '${node.name}' expects ${inFeat} features, input provides ${flat}`);
            }
            emit({
                kind: "fc", kernel: 1,
                in_channels: inFeat, out_channels: outFeat,
                out_width: 1, out_height: 1,
            }, [x.sourceLayer], output);
            report.supported_ops.push(op);
        } else if (op === "MaxPool" || op === "AveragePool") {
            const x = dataInput(node);
            const { kernel, h, w } = windowOut(node, op, x.chw);
            emit({
                kind: "pool", kernel,
                in_channels: x.chw[0], out_channels: x.chw[0],
                out_width: w, out_height: h,
            }, [x.sourceLayer], output);
            report.supported_ops.push(op);
        } else if (op === "Relu") {
            const x = dataInput(node);
            const producer = x.sourceLayer > 0 ? layers[x.sourceLayer - 1] : undefined;
            const soleConsumer = (consumers.get((node.input ?? [])[0]!) ?? 0) === 1;
            if (producer && soleConsumer
                    && (producer.kind === "conv" || producer.kind === "fc")
                    && !(producer.fused ?? []).includes("relu")) {
                producer.fused = [...(producer.fused ?? []), "relu"];
                tensors.set(output, x);
                report.skipped_ops.push({
                    op, name: node.name ?? "",
                    reason: `fused into layer ${producer.id}`,
                });
            } else {
                emit({
                    kind: "relu", kernel: 1,
                    in_channels: x.chw[0], out_channels: x.chw[0],
                    out_width: x.chw[2], out_height: x.chw[1],
                }, [x.sourceLayer], output);
                report.supported_ops.push(op);
            }
        } else if (op === "Add") {
            const a = dataInput(node, 0);
            const b = dataInput(node, 1);
            if (a.chw.join("x") !== b.chw.join("x")) {
                throw new ShapeInferenceError(
                    `Add '${node.name}' operands disagree: [${a.chw}] vs [${b.chw}]`);
            }
            emit({
                kind: "residual_add", kernel: 1,
                in_channels: a.chw[0], out_channels: a.chw[0],
                out_width: a.chw[2], out_height: a.chw[1],
            }, [a.sourceLayer, b.sourceLayer], output);
            report.supported_ops.push(op);
        } else {  // Flatten: fold away, shape becomes a feature vector
            const x = dataInput(node);
            tensors.set(output, {
                chw: [x.chw[0] * x.chw[1] * x.chw[2], 1, 1],
                sourceLayer: x.sourceLayer,
            });
            report.skipped_ops.push({ op, name: node.name ?? "",
                                      reason: "shape-only operator" });
        }
    }

    if (!layers.some((l) => l.kind === "conv" || l.kind === "fc")) {
        throw new ShapeInferenceError("graph produced no weight-bearing layer");
    }
    report.emitted_layers = layers.length;
    const doc: ModelDoc = {
        format_version: 1,
        name: options.name ?? graph.name ?? "onnx-model",
        quantization: {
            weights_bits: options.weightBits ?? 16,
            activations_bits: options.actBits ?? 16,
        },
        layers,
    };
    return { doc, report };
}

export function convertFile(onnxPath: string, outPath: string,
                            options: ConvertOptions = {}): ConversionReport {
    const bytes = readFileSync(onnxPath);
    const { doc, report } = convertModel(bytes, options);
    writeFileSync(outPath, JSON.stringify(doc, null, 2) + "\n");
    return report;
}
