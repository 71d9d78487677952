/** The two networks: a U-Net generator from concentration maps to styled RGB
 * and a patch discriminator conditioned on the concentration map. */

import {
  Conv2D,
  ConvTranspose2D,
  LeakyReLU,
  Param,
  Relu,
  Tanh,
  addInto,
  concatChannels,
  splitChannels,
} from "./layers.js";
import { mulberry32 } from "./rng.js";
import { DType, Tensor } from "./tensor.js";

export interface GeneratorSpec {
  inChannels: number;
  outChannels: number;
  baseWidth: number;
  depth: number;
  seed: number;
}

export const DEFAULT_GENERATOR_SPEC: GeneratorSpec = {
  inChannels: 3,
  outChannels: 3,
  baseWidth: 32,
  depth: 4,
  seed: 0,
};

export function validateSpec(spec: GeneratorSpec): void {
  if (spec.depth < 1) throw new Error(`depth must be >= 1, got ${spec.depth}`);
  if (spec.baseWidth < 1) throw new Error(`baseWidth must be >= 1, got ${spec.baseWidth}`);
  if (spec.inChannels !== 3) throw new Error("generator expects 3 concentration channels");
  if (spec.outChannels !== 3) throw new Error("generator emits 3 RGB channels");
}

export function assertSizeDivisible(h: number, w: number, depth: number): void {
  const factor = 1 << depth;
  if (h % factor !== 0 || w % factor !== 0) {
    throw new Error(`spatial size ${h}x${w} must be divisible by 2^depth = ${factor}`);
  }
}

/** Encoder: stride-2 convs halving the grid; decoder: stride-2 transposed
 * convs doubling it, with skip connections concatenated at matching sizes;
 * tanh head in [-1, 1]. */
export class UNetGenerator {
  readonly downs: Conv2D[] = [];
  readonly downActs: LeakyReLU[] = [];
  readonly ups: ConvTranspose2D[] = [];
  readonly upActs: Relu[] = [];
  readonly head: Conv2D;
  readonly headAct = new Tanh();
  private skips: Tensor[] = [];

  constructor(readonly spec: GeneratorSpec, readonly dtype: DType = "f32") {
    validateSpec(spec);
    const rng = mulberry32(spec.seed ^ 0x5eed);
    const w = spec.baseWidth;
    for (let i = 0; i < spec.depth; i++) {
      const inC = i === 0 ? spec.inChannels : w << (i - 1);
      this.downs.push(new Conv2D(`g.down${i}`, inC, w << i, 4, 2, dtype, rng));
      this.downActs.push(new LeakyReLU(0.2));
    }
    for (let i = spec.depth - 1; i >= 0; i--) {
      // level d-1 consumes the bottleneck; lower levels consume a concat
      const inC = i === spec.depth - 1 ? w << i : w << (i + 1);
      const outC = i >= 1 ? w << (i - 1) : w;
      this.ups.push(new ConvTranspose2D(`g.up${i}`, inC, outC, 4, dtype, rng));
      this.upActs.push(new Relu());
    }
    this.head = new Conv2D("g.head", w, spec.outChannels, 3, 1, dtype, rng, 1.0);
  }

  params(): Param[] {
    const out: Param[] = [];
    for (const l of this.downs) out.push(...l.params());
    for (const l of this.ups) out.push(...l.params());
    out.push(...this.head.params());
    return out;
  }

  forward(x: Tensor): Tensor {
    assertSizeDivisible(x.shape[1], x.shape[2], this.spec.depth);
    const d = this.spec.depth;
    this.skips = [];
    let h = x;
    for (let i = 0; i < d; i++) {
      h = this.downActs[i].forward(this.downs[i].forward(h));
      this.skips.push(h);
    }
    // ups[j] corresponds to level i = d-1-j
    for (let j = 0; j < d; j++) {
      const level = d - 1 - j;
      h = this.upActs[j].forward(this.ups[j].forward(h));
      if (level >= 1) h = concatChannels(h, this.skips[level - 1]);
    }
    return this.headAct.forward(this.head.forward(h));
  }

  backward(dOut: Tensor): Tensor {
    const d = this.spec.depth;
    const w = this.spec.baseWidth;
    let g = this.head.backward(this.headAct.backward(dOut));
    const skipGrads: (Tensor | null)[] = new Array(d).fill(null);
    for (let j = d - 1; j >= 0; j--) {
      const level = d - 1 - j;
      if (level >= 1) {
        const tChannels = w << (level - 1);
        const [dt, dSkip] = splitChannels(g, tChannels);
        skipGrads[level - 1] = dSkip;
        g = dt;
      }
      g = this.ups[j].backward(this.upActs[j].backward(g));
    }
    // g is now the gradient w.r.t. the bottleneck skip s_{d-1}
    let acc: Tensor | null = g;
    let dx: Tensor | null = null;
    for (let i = d - 1; i >= 0; i--) {
      let total = acc as Tensor;
      acc = null;
      const extra = i <= d - 2 ? skipGrads[i] : null;
      if (extra) total = addInto(total, extra);
      const back = this.downs[i].backward(this.downActs[i].backward(total));
      if (i > 0) acc = back;
      else dx = back;
    }
    return dx as Tensor;
  }
}

/** Three-level patch discriminator over concat(concentrations, image). */
export class PatchDiscriminator {
  readonly convs: Conv2D[];
  readonly acts: LeakyReLU[];

  constructor(readonly width: number, seed: number, readonly dtype: DType = "f32") {
    const rng = mulberry32(seed ^ 0xd15c);
    this.convs = [
      new Conv2D("d.conv0", 6, width, 4, 2, dtype, rng),
      new Conv2D("d.conv1", width, width * 2, 4, 2, dtype, rng),
      new Conv2D("d.conv2", width * 2, 1, 4, 1, dtype, rng, 1.0),
    ];
    this.acts = [new LeakyReLU(0.2), new LeakyReLU(0.2)];
  }

  params(): Param[] {
    return this.convs.flatMap((c) => c.params());
  }

  forward(condition: Tensor, image: Tensor): Tensor {
    let h = concatChannels(condition, image);
    h = this.acts[0].forward(this.convs[0].forward(h));
    h = this.acts[1].forward(this.convs[1].forward(h));
    return this.convs[2].forward(h);
  }

  /** Returns the gradient w.r.t. the *image* half of the conditioned input. */
  backward(dLogits: Tensor): Tensor {
    let g = this.convs[2].backward(dLogits);
    g = this.convs[1].backward(this.acts[1].backward(g));
    g = this.convs[0].backward(this.acts[0].backward(g));
    const [, dImage] = splitChannels(g, 3);
    return dImage;
  }
}
