/** Conditional-GAN training: alternating discriminator/generator updates with
 * the generator loss = adversarial + lambdaL2 * MSE(generated, original). */

import { Adam } from "./adam.js";
import { ValidationError } from "./io.js";
import { zeroGrad } from "./layers.js";
import { GeneratorSpec, PatchDiscriminator, UNetGenerator, assertSizeDivisible } from "./model.js";
import { bceWithLogits, maeLoss, mseLoss } from "./ops.js";
import { mulberry32, shuffledIndices } from "./rng.js";
import { Tensor, fromData } from "./tensor.js";

export interface TrainConfig {
  lambdaL2: number;
  learningRate: number;
  batchSize: number;
  steps: number;
  checkpointEvery: number;
  seed: number;
  /** Concentrations are mapped linearly to [-1, 1] by this fixed full-scale
   * value; recorded in checkpoints so the map is invertible and versioned. */
  concMax: number;
  /** Reconstruction term entering the generator loss. L2 is the intended
   * objective; L1 exists for comparison runs. */
  reconLoss: "l2" | "l1";
}

export const DEFAULT_TRAIN_CONFIG: TrainConfig = {
  lambdaL2: 100,
  learningRate: 2e-4,
  batchSize: 4,
  steps: 200,
  checkpointEvery: 0,
  seed: 0,
  concMax: 2.0,
  reconLoss: "l2",
};

export function validateTrainConfig(cfg: TrainConfig): void {
  if (cfg.lambdaL2 < 0) throw new ValidationError("bad_config", `lambdaL2 must be >= 0, got ${cfg.lambdaL2}`);
  if (cfg.steps < 1) throw new ValidationError("bad_config", `steps must be >= 1, got ${cfg.steps}`);
  if (cfg.batchSize < 1) throw new ValidationError("bad_config", `batchSize must be >= 1, got ${cfg.batchSize}`);
  if (!(cfg.concMax > 0)) throw new ValidationError("bad_config", `concMax must be > 0, got ${cfg.concMax}`);
}

export interface Sample {
  /** normalized concentrations, [H*W*3] */
  conc: Float32Array;
  /** normalized target image, [H*W*3] */
  image: Float32Array;
  height: number;
  width: number;
}

export function normalizeConc(values: Float32Array, concMax: number): Float32Array {
  const out = new Float32Array(values.length);
  const scale = 2 / concMax;
  for (let i = 0; i < values.length; i++) out[i] = values[i] * scale - 1;
  return out;
}

export function normalizeImage(pixels: Uint8Array): Float32Array {
  const out = new Float32Array(pixels.length);
  for (let i = 0; i < pixels.length; i++) out[i] = pixels[i] / 127.5 - 1;
  return out;
}

export function denormalizeImage(values: ArrayLike<number>): Uint8Array {
  const out = new Uint8Array(values.length);
  for (let i = 0; i < out.length; i++) {
    out[i] = Math.max(0, Math.min(255, Math.round((values[i] + 1) * 127.5)));
  }
  return out;
}

export interface StepRecord {
  step: number;
  loss_g_adv: number;
  /** L2 reconstruction metric, logged in every mode. */
  loss_g_l2: number;
  /** The reconstruction term the update actually used (= loss_g_l2 unless
   * reconLoss is "l1"). */
  loss_g_recon: number;
  loss_d: number;
  loss_g_total: number;
}

export interface TrainState {
  generator: UNetGenerator;
  discriminator: PatchDiscriminator;
  log: StepRecord[];
}

function stackBatch(samples: Sample[], pick: (s: Sample) => Float32Array): Tensor {
  const { height, width } = samples[0];
  const per = height * width * 3;
  const data = new Float32Array(samples.length * per);
  samples.forEach((s, i) => data.set(pick(s), i * per));
  return fromData(data, [samples.length, height, width, 3]);
}

/** Runs the full loop; onStep fires after each logged record (checkpoints are
 * the caller's concern). Deterministic for a fixed seed. */
export function trainDecoder(
  samples: Sample[],
  spec: GeneratorSpec,
  cfg: TrainConfig,
  onStep?: (record: StepRecord, state: TrainState) => void
): TrainState {
  validateTrainConfig(cfg);
  if (samples.length === 0) throw new ValidationError("empty_dataset", "no training samples");
  const { height, width } = samples[0];
  for (const s of samples) {
    if (s.height !== height || s.width !== width) {
      throw new ValidationError("bad_size", "all training tiles must share one size");
    }
  }
  assertSizeDivisible(height, width, spec.depth);

  const generator = new UNetGenerator(spec);
  const discriminator = new PatchDiscriminator(spec.baseWidth, spec.seed);
  const optG = new Adam(cfg.learningRate);
  const optD = new Adam(cfg.learningRate);
  const order = mulberry32((cfg.seed ^ 0xba7c4) >>> 0);
  let queue: number[] = [];

  const state: TrainState = { generator, discriminator, log: [] };
  for (let step = 1; step <= cfg.steps; step++) {
    const batch: Sample[] = [];
    for (let b = 0; b < cfg.batchSize; b++) {
      if (queue.length === 0) queue = shuffledIndices(samples.length, order);
      batch.push(samples[queue.pop() as number]);
    }
    const conc = stackBatch(batch, (s) => s.conc);
    const target = stackBatch(batch, (s) => s.image);

    // discriminator update: real up, generated down
    const fakeForD = generator.forward(conc);
    zeroGrad(discriminator.params());
    const realLogits = discriminator.forward(conc, target);
    const lossReal = bceWithLogits(realLogits.data, 1);
    discriminator.backward(fromData(lossReal.grad(0.5), realLogits.shape));
    const fakeLogits = discriminator.forward(conc, fakeForD);
    const lossFake = bceWithLogits(fakeLogits.data, 0);
    discriminator.backward(fromData(lossFake.grad(0.5), fakeLogits.shape));
    optD.step(discriminator.params());
    const lossD = 0.5 * (lossReal.loss + lossFake.loss);

    // generator update: fool the discriminator + stay close in L2
    zeroGrad(generator.params());
    zeroGrad(discriminator.params());
    const fake = generator.forward(conc);
    const advLogits = discriminator.forward(conc, fake);
    const adv = bceWithLogits(advLogits.data, 1);
    const dFake = discriminator.backward(fromData(adv.grad(1.0), advLogits.shape));
    const l2 = mseLoss(fake.data, target.data);
    const recon = cfg.reconLoss === "l1" ? maeLoss(fake.data, target.data) : l2;
    if (cfg.lambdaL2 > 0) {
      const dRecon = recon.grad(cfg.lambdaL2);
      for (let i = 0; i < dFake.data.length; i++) dFake.data[i] += dRecon[i];
    }
    generator.backward(dFake);
    optG.step(generator.params());
    zeroGrad(discriminator.params()); // drop the pass-through accumulation

    const record: StepRecord = {
      step,
      loss_g_adv: adv.loss,
      loss_g_l2: l2.loss,
      loss_g_recon: recon.loss,
      loss_d: lossD,
      loss_g_total: adv.loss + cfg.lambdaL2 * recon.loss,
    };
    state.log.push(record);
    if (onStep) onStep(record, state);
  }
  return state;
}
