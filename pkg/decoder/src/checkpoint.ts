/** Checkpoints: generator (and optionally discriminator) weights plus the
 * exact input normalization, as JSON with base64 float32 payloads. */

import * as fs from "node:fs";

import { IoError, ValidationError, atomicWrite } from "./io.js";
import { Param } from "./layers.js";
import { GeneratorSpec, PatchDiscriminator, UNetGenerator } from "./model.js";
import { TrainConfig } from "./train.js";

interface SerializedParam {
  shape: number[];
  data: string; // base64 of little-endian float32
}

export interface Checkpoint {
  version: 1;
  step: number;
  generatorSpec: GeneratorSpec;
  normalization: { concMax: number; imageScale: "uint8_to_pm1" };
  trainConfig: TrainConfig;
  generator: Record<string, SerializedParam>;
  discriminator: Record<string, SerializedParam>;
}

function serializeParams(params: Param[]): Record<string, SerializedParam> {
  const out: Record<string, SerializedParam> = {};
  for (const p of params) {
    const f32 = p.value.dtype === "f32" ? (p.value.data as Float32Array) : Float32Array.from(p.value.data);
    out[p.name] = {
      shape: p.value.shape.slice(),
      data: Buffer.from(f32.buffer, f32.byteOffset, f32.byteLength).toString("base64"),
    };
  }
  return out;
}

function restoreParams(params: Param[], stored: Record<string, SerializedParam>): void {
  for (const p of params) {
    const s = stored[p.name];
    if (!s) throw new ValidationError("checkpoint_format", `checkpoint missing parameter ${p.name}`);
    const bytes = Buffer.from(s.data, "base64");
    if (bytes.length !== 4 * p.value.data.length) {
      throw new ValidationError("checkpoint_format", `parameter ${p.name} has wrong payload size`);
    }
    const values = new Float32Array(bytes.buffer, bytes.byteOffset, p.value.data.length);
    p.value.data.set(values);
  }
}

export function saveCheckpoint(
  path: string,
  step: number,
  generator: UNetGenerator,
  discriminator: PatchDiscriminator,
  cfg: TrainConfig
): void {
  const checkpoint: Checkpoint = {
    version: 1,
    step,
    generatorSpec: generator.spec,
    normalization: { concMax: cfg.concMax, imageScale: "uint8_to_pm1" },
    trainConfig: cfg,
    generator: serializeParams(generator.params()),
    discriminator: serializeParams(discriminator.params()),
  };
  atomicWrite(path, JSON.stringify(checkpoint) + "\n");
}

export function loadGenerator(path: string): { generator: UNetGenerator; checkpoint: Checkpoint } {
  if (!fs.existsSync(path)) throw new IoError(`checkpoint not found: ${path}`);
  let checkpoint: Checkpoint;
  try {
    checkpoint = JSON.parse(fs.readFileSync(path, "utf8")) as Checkpoint;
  } catch (err) {
    throw new ValidationError("checkpoint_format", `checkpoint is not valid JSON: ${(err as Error).message}`);
  }
  if (checkpoint.version !== 1 || !checkpoint.generatorSpec || !checkpoint.generator) {
    throw new ValidationError("checkpoint_format", "unsupported checkpoint layout");
  }
  const generator = new UNetGenerator(checkpoint.generatorSpec);
  restoreParams(generator.params(), checkpoint.generator);
  return { generator, checkpoint };
}
