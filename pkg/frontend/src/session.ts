// Inference sessions behind the adapter loop. The dummy session is pure
// TypeScript (no ML runtime anywhere on its path); the model session pulls
// in the TF.js runtime only when a model path is actually given.

import * as fs from "node:fs";
import * as path from "node:path";

import { readPgm16, resizeNearest } from "./pgm";
import { DetectionBox, validateBox } from "./protocol";

export const DEFAULT_INPUT_SIZE = 128;
export const DEFAULT_CLASS_COUNT = 6;

export interface Session {
  infer(imagePath: string, confThreshold: number): Promise<DetectionBox[]>;
}

/** Deterministic canned output: one centered box, bit-identical across runs. */
export class DummySession implements Session {
  private readonly box: DetectionBox = {
    class_id: 0,
    cx: 0.5,
    cy: 0.5,
    w: 0.25,
    h: 0.25,
    confidence: 0.9,
  };

  async infer(_imagePath: string, confThreshold: number): Promise<DetectionBox[]> {
    return this.box.confidence >= confThreshold ? [this.box] : [];
  }
}

interface TfModule {
  loadGraphModel(handler: unknown): Promise<any>;
  tensor(values: Float32Array, shape: number[]): any;
  io: { decodeWeights?: unknown };
}

/**
 * Graph-model session via @tensorflow/tfjs (dynamic import; the dummy path
 * never touches it). The model is expected to take a [1, S, S, 1] input in
 * [0, 1] and emit [1, N, 6] rows of (cx, cy, w, h, confidence, class_id)
 * in normalized coordinates, i.e. a post-NMS detection head.
 */
export class ModelSession implements Session {
  private constructor(
    private readonly tf: TfModule,
    private readonly model: any,
    private readonly inputSize: number,
    private readonly classCount: number,
  ) {}

  static async load(
    modelPath: string,
    inputSize: number = DEFAULT_INPUT_SIZE,
    classCount: number = DEFAULT_CLASS_COUNT,
  ): Promise<ModelSession> {
    let tf: TfModule;
    try {
      // Computed specifier: the runtime stays optional and the dummy path
      // never resolves it.
      const runtime = "@tensorflow/tfjs";
      tf = (await import(runtime)) as unknown as TfModule;
    } catch (err) {
      throw new Error(
        "model runtime (@tensorflow/tfjs) is not installed; " +
          `run with --dummy or install it (${String(err)})`,
      );
    }
    const model = await tf.loadGraphModel(fileIoHandler(modelPath));
    return new ModelSession(tf, model, inputSize, classCount);
  }

  async infer(imagePath: string, confThreshold: number): Promise<DetectionBox[]> {
    const size = this.inputSize;
    const pixels = resizeNearest(readPgm16(imagePath), size);
    const input = this.tf.tensor(pixels, [1, size, size, 1]);
    try {
      const output = await this.model.executeAsync
        ? await this.model.executeAsync(input)
        : this.model.predict(input);
      const tensor = Array.isArray(output) ? output[0] : output;
      const rows: number[] = Array.from(await tensor.data());
      const boxes: DetectionBox[] = [];
      for (let i = 0; i + 6 <= rows.length; i += 6) {
        const confidence = rows[i + 4];
        if (confidence < confThreshold) continue;
        const box: DetectionBox = {
          class_id: Math.round(rows[i + 5]),
          cx: clamp01(rows[i]),
          cy: clamp01(rows[i + 1]),
          w: clampSize(rows[i + 2]),
          h: clampSize(rows[i + 3]),
          confidence: clamp01(confidence),
        };
        if (box.class_id < 0 || box.class_id >= this.classCount) continue;
        validateBox(box, this.classCount);
        boxes.push(box);
      }
      return boxes;
    } finally {
      input.dispose?.();
    }
  }
}

function clamp01(v: number): number {
  return Math.min(1, Math.max(0, v));
}

function clampSize(v: number): number {
  return Math.min(1, Math.max(1e-6, v));
}

/**
 * TF.js IO handler reading graph-model artifacts (model.json plus weight
 * shards) from the local filesystem, since the browser-oriented runtime
 * ships no fs loader of its own.
 */
function fileIoHandler(modelJsonPath: string): { load(): Promise<any> } {
  return {
    async load() {
      const dir = path.dirname(modelJsonPath);
      const manifest = JSON.parse(fs.readFileSync(modelJsonPath, "utf-8"));
      const weightsManifest = manifest.weightsManifest ?? [];
      const specs: unknown[] = [];
      const shards: Buffer[] = [];
      for (const group of weightsManifest) {
        specs.push(...group.weights);
        for (const name of group.paths) {
          shards.push(fs.readFileSync(path.join(dir, name)));
        }
      }
      const weights = Buffer.concat(shards);
      return {
        modelTopology: manifest.modelTopology,
        format: manifest.format,
        generatedBy: manifest.generatedBy,
        convertedBy: manifest.convertedBy,
        weightSpecs: specs,
        weightData: weights.buffer.slice(
          weights.byteOffset,
          weights.byteOffset + weights.byteLength,
        ),
      };
    },
  };
}
