#!/usr/bin/env node
/** onnx2pim <model.onnx> -o <model.json> [--weight-bits N] [--act-bits N] */

import { basename } from "node:path";

import { convertFile } from "./convert.js";

function usage(): number {
    process.stderr.write(
        "usage: onnx2pim <model.onnx> -o <model.json> " +
        "[--weight-bits 16] [--act-bits 16] [--name NAME]\n");
    return 1;
}

export function main(argv: string[]): number {
    let input: string | undefined;
    let output: string | undefined;
    let weightBits = 16;
    let actBits = 16;
    let name: string | undefined;

    for (let i = 0; i < argv.length; i++) {
        const arg = argv[i];
        if (arg === "-o" || arg === "--output") {
            output = argv[++i];
        } else if (arg === "--weight-bits") {
            weightBits = Number(argv[++i]);
        } else if (arg === "--act-bits") {
            actBits = Number(argv[++i]);
        } else if (arg === "--name") {
            name = argv[++i];
        } else if (arg.startsWith("-")) {
            return usage();
        } else if (!input) {
            input = arg;
        } else {
            return usage();
        }
    }
    if (!input || !output || !Number.isInteger(weightBits)
            || !Number.isInteger(actBits) || weightBits < 1 || actBits < 1) {
        return usage();
    }

    try {
        const report = convertFile(input, output, {
            weightBits, actBits,
            name: name ?? basename(input).replace(/\.onnx$/i, ""),
        });
        process.stdout.write(
            `converted ${report.supported_ops.length} nodes into ` +
            `${report.emitted_layers} layers ` +
            `(${report.skipped_ops.length} folded/fused) -> ${output}\n`);
        for (const skip of report.skipped_ops) {
            process.stdout.write(`  folded ${skip.op} ${skip.name}: ${skip.reason}\n`);
        }
        return 0;
    } catch (err) {
        process.stderr.write(`error: ${(err as Error).message}\n`);
        return 1;
    }
}

if (import.meta.url === `file://${process.argv[1]}`) {
    process.exit(main(process.argv.slice(2)));
}
