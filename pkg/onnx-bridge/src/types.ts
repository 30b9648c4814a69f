/** The pimsyn model-file schema (format_version 1). */

export type LayerKind = "conv" | "fc" | "pool" | "relu" | "residual_add";

export interface ModelLayer {
    id: number;
    kind: LayerKind;
    kernel: number;
    in_channels: number;
    out_channels: number;
    out_width: number;
    out_height: number;
    predecessors: number[];
    fused?: string[];
}

export interface ModelDoc {
    format_version: 1;
    name: string;
    quantization: { weights_bits: number; activations_bits: number };
    layers: ModelLayer[];
}

/** What the converter did with each graph node. */
export interface ConversionReport {
    supported_ops: string[];
    skipped_ops: { op: string; name: string; reason: string }[];
    emitted_layers: number;
}

export class UnsupportedOperatorError extends Error {
    constructor(public readonly opType: string, detail?: string) {
        super(`unsupported operator: ${opType}${detail ? ` (${detail})` : ""}`);
        this.name = "UnsupportedOperatorError";
    }
}

export class ShapeInferenceError extends Error {
    constructor(message: string) {
        super(message);
        this.name = "ShapeInferenceError";
    }
}
