/** Reference ONNX graphs built in-memory for the converter tests.
 *
 * Weight initializers carry dims only (no data): the converter reads
 * shapes, which keeps the fixtures tiny while remaining valid protobuf.
 */

// onnx-proto is CommonJS: default-import it for Node ESM compatibility
import onnxProto from "onnx-proto";
import type { onnx as onnxT } from "onnx-proto";

const { onnx } = onnxProto;

type INodeProto = onnxT.INodeProto;
type ITensorProto = onnxT.ITensorProto;

interface ConvSpec {
    cIn: number;
    cOut: number;
    k: number;
    stride: number;
    pad: number;
}

class GraphBuilder {
    nodes: INodeProto[] = [];
    initializers: ITensorProto[] = [];
    private counter = 0;

    fresh(prefix: string): string {
        return `${prefix}_${this.counter++}`;
    }

    weight(name: string, dims: number[]): string {
        this.initializers.push(onnx.TensorProto.create({
            name, dims, dataType: onnx.TensorProto.DataType.FLOAT,
        }));
        return name;
    }

    node(opType: string, inputs: string[], attrs: Record<string, number[] | number> = {}): string {
        const output = this.fresh(opType.toLowerCase());
        const attribute = Object.entries(attrs).map(([name, value]) =>
            Array.isArray(value)
                ? onnx.AttributeProto.create({
                    name, type: onnx.AttributeProto.AttributeType.INTS, ints: value })
                : onnx.AttributeProto.create({
                    name, type: onnx.AttributeProto.AttributeType.INT, i: value }));
        this.nodes.push(onnx.NodeProto.create({
            opType, name: output, input: inputs, output: [output], attribute }));
        return output;
    }

    conv(input: string, spec: ConvSpec): string {
        const w = this.weight(this.fresh("W"), [spec.cOut, spec.cIn, spec.k, spec.k]);
        const b = this.weight(this.fresh("B"), [spec.cOut]);
        return this.node("Conv", [input, w, b], {
            kernel_shape: [spec.k, spec.k],
            strides: [spec.stride, spec.stride],
            pads: [spec.pad, spec.pad, spec.pad, spec.pad],
        });
    }

    gemm(input: string, inFeat: number, outFeat: number): string {
        const w = this.weight(this.fresh("W"), [outFeat, inFeat]);
        const b = this.weight(this.fresh("B"), [outFeat]);
        return this.node("Gemm", [input, w, b], { transB: 1 });
    }

    relu(input: string): string {
        return this.node("Relu", [input]);
    }

    maxpool(input: string, k: number, stride: number): string {
        return this.node("MaxPool", [input], {
            kernel_shape: [k, k], strides: [stride, stride],
        });
    }

    finish(name: string, inputShape: number[], outputName: string): Uint8Array {
        const shapeProto = (dims: number[]) => onnx.TensorShapeProto.create({
            dim: dims.map((d) => onnx.TensorShapeProto.Dimension.create({ dimValue: d })),
        });
        const tensorType = (dims: number[]) => onnx.TypeProto.create({
            tensorType: onnx.TypeProto.Tensor.create({
                elemType: onnx.TensorProto.DataType.FLOAT,
                shape: shapeProto(dims),
            }),
        });
        const graph = onnx.GraphProto.create({
            name,
            node: this.nodes,
            initializer: this.initializers,
            input: [onnx.ValueInfoProto.create({
                name: "input", type: tensorType(inputShape) })],
            output: [onnx.ValueInfoProto.create({
                name: outputName, type: tensorType([1, 1]) })],
        });
        const model = onnx.ModelProto.create({
            irVersion: 8,
            producerName: "onnx2pim-fixtures",
            opsetImport: [onnx.OperatorSetIdProto.create({ version: 13 })],
            graph,
        });
        return onnx.ModelProto.encode(model).finish();
    }
}

/** Classic 5-conv + 3-fc AlexNet (224x224 input, grouped convs flattened). */
export function buildAlexNet(): Uint8Array {
    const g = new GraphBuilder();
    let t = "input";
    t = g.relu(g.conv(t, { cIn: 3, cOut: 64, k: 11, stride: 4, pad: 2 }));    // 55
    t = g.maxpool(t, 3, 2);                                                   // 27
    t = g.relu(g.conv(t, { cIn: 64, cOut: 192, k: 5, stride: 1, pad: 2 }));   // 27
    t = g.maxpool(t, 3, 2);                                                   // 13
    t = g.relu(g.conv(t, { cIn: 192, cOut: 384, k: 3, stride: 1, pad: 1 }));  // 13
    t = g.relu(g.conv(t, { cIn: 384, cOut: 256, k: 3, stride: 1, pad: 1 }));  // 13
    t = g.relu(g.conv(t, { cIn: 256, cOut: 256, k: 3, stride: 1, pad: 1 }));  // 13
    t = g.maxpool(t, 3, 2);                                                   // 6
    t = g.node("Flatten", [t], { axis: 1 });                                  // 9216
    t = g.relu(g.gemm(t, 256 * 6 * 6, 4096));
    t = g.relu(g.gemm(t, 4096, 4096));
    t = g.gemm(t, 4096, 1000);
    return g.finish("alexnet", [1, 3, 224, 224], t);
}

/** VGG16: 13 convs in five blocks + 3 fully-connected layers. */
export function buildVgg16(): Uint8Array {
    const g = new GraphBuilder();
    const blocks: Array<[number, number[]]> = [
        [3, [64, 64]], [64, [128, 128]], [128, [256, 256, 256]],
        [256, [512, 512, 512]], [512, [512, 512, 512]],
    ];
    let t = "input";
    for (const [firstIn, widths] of blocks) {
        let cIn = firstIn;
        for (const cOut of widths) {
            t = g.relu(g.conv(t, { cIn, cOut, k: 3, stride: 1, pad: 1 }));
            cIn = cOut;
        }
        t = g.maxpool(t, 2, 2);
    }
    t = g.node("Flatten", [t], { axis: 1 });                                  // 25088
    t = g.relu(g.gemm(t, 512 * 7 * 7, 4096));
    t = g.relu(g.gemm(t, 4096, 4096));
    t = g.gemm(t, 4096, 1000);
    return g.finish("vgg16", [1, 3, 224, 224], t);
}

/** Two-branch residual block exercising the Add path. */
export function buildResidualToy(): Uint8Array {
    const g = new GraphBuilder();
    const stem = g.relu(g.conv("input", { cIn: 3, cOut: 8, k: 3, stride: 1, pad: 1 }));
    const branch = g.conv(stem, { cIn: 8, cOut: 8, k: 3, stride: 1, pad: 1 });
    const added = g.node("Add", [branch, stem]);
    const out = g.gemm(g.node("Flatten", [added], { axis: 1 }), 8 * 8 * 8, 10);
    return g.finish("residual-toy", [1, 3, 8, 8], out);
}

/** Contains an LSTM node: must be rejected. */
export function buildLstmModel(): Uint8Array {
    const g = new GraphBuilder();
    const conv = g.conv("input", { cIn: 3, cOut: 8, k: 3, stride: 1, pad: 1 });
    g.node("LSTM", [conv]);
    return g.finish("lstm-toy", [1, 3, 8, 8], "lstm_0");
}

/** Symbolic batch dimension: must trigger a shape-inference error. */
export function buildDynamicModel(): Uint8Array {
    const g = new GraphBuilder();
    const out = g.conv("input", { cIn: 3, cOut: 8, k: 3, stride: 1, pad: 1 });
    const bytes = g.finish("dynamic-toy", [1, 3, 8, 8], out);
    const model = onnx.ModelProto.decode(bytes);
    model.graph!.input![0].type!.tensorType!.shape!.dim![2] =
        onnx.TensorShapeProto.Dimension.create({ dimParam: "H" });
    return onnx.ModelProto.encode(model).finish();
}
