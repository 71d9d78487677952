/** Trainable layers with explicit forward/backward passes. Each instance
 * caches its last forward activations, so a backward call must follow its
 * matching forward. */

import {
  ConvGeometry,
  col2im,
  convGeometry,
  im2col,
  matmulInto,
  matmulTransposeAInto,
  matmulTransposeBInto,
} from "./ops.js";
import { Rng, gaussian } from "./rng.js";
import { Data, DType, Tensor, alloc, fromData, sizeOf, zeros } from "./tensor.js";

export interface Param {
  name: string;
  value: Tensor;
  grad: Data;
}

export function makeParam(name: string, shape: number[], dtype: DType): Param {
  const value = zeros(shape, dtype);
  return { name, value, grad: alloc(sizeOf(shape), dtype) };
}

export function zeroGrad(params: Param[]): void {
  for (const p of params) p.grad.fill(0);
}

function initKernel(p: Param, fanIn: number, gain: number, rng: Rng): void {
  const std = gain * Math.sqrt(1 / fanIn);
  const v = p.value.data;
  for (let i = 0; i < v.length; i++) v[i] = gaussian(rng) * std;
}

export class Conv2D {
  readonly weight: Param; // [k, k, inC, outC]
  readonly bias: Param; // [outC]
  private geom: ConvGeometry | null = null;
  private cols: Data | null = null;

  constructor(
    readonly name: string,
    readonly inC: number,
    readonly outC: number,
    readonly kernel: number,
    readonly stride: number,
    readonly dtype: DType,
    rng: Rng,
    gain = Math.SQRT2
  ) {
    this.weight = makeParam(`${name}.weight`, [kernel, kernel, inC, outC], dtype);
    this.bias = makeParam(`${name}.bias`, [outC], dtype);
    initKernel(this.weight, kernel * kernel * inC, gain, rng);
  }

  params(): Param[] {
    return [this.weight, this.bias];
  }

  forward(x: Tensor): Tensor {
    const [n, h, w, c] = x.shape;
    if (c !== this.inC) throw new Error(`${this.name}: expected ${this.inC} channels, got ${c}`);
    const g = convGeometry(n, h, w, c, this.kernel, this.stride);
    const cols = im2col(x.data, g, this.dtype);
    const rows = n * g.outH * g.outW;
    const out = alloc(rows * this.outC, this.dtype);
    matmulInto(cols, this.weight.value.data, out, rows, this.kernel * this.kernel * c, this.outC);
    const b = this.bias.value.data;
    for (let r = 0; r < rows; r++) {
      const base = r * this.outC;
      for (let j = 0; j < this.outC; j++) out[base + j] += b[j];
    }
    this.geom = g;
    this.cols = cols;
    return fromData(out, [n, g.outH, g.outW, this.outC]);
  }

  backward(dy: Tensor): Tensor {
    const g = this.geom;
    const cols = this.cols;
    if (!g || !cols) throw new Error(`${this.name}: backward before forward`);
    const rows = g.batch * g.outH * g.outW;
    const kkc = this.kernel * this.kernel * this.inC;
    matmulTransposeAInto(cols, dy.data, this.weight.grad, kkc, rows, this.outC);
    const db = this.bias.grad;
    for (let r = 0; r < rows; r++) {
      const base = r * this.outC;
      for (let j = 0; j < this.outC; j++) db[j] += dy.data[base + j];
    }
    const dCols = alloc(rows * kkc, this.dtype);
    matmulTransposeBInto(dy.data, this.weight.value.data, dCols, rows, this.outC, kkc);
    const dx = col2im(dCols, g, this.dtype);
    return fromData(dx, [g.batch, g.inH, g.inW, g.channels]);
  }
}

/** Transposed convolution with stride 2: the adjoint geometry of a stride-2
 * convolution from the (2H, 2W) grid down to (H, W). Weight layout
 * [k, k, outC, inC] matches that paired convolution. */
export class ConvTranspose2D {
  readonly weight: Param;
  readonly bias: Param; // [outC]
  private geom: ConvGeometry | null = null;
  private xFlat: Data | null = null;
  private inShape: number[] | null = null;

  constructor(
    readonly name: string,
    readonly inC: number,
    readonly outC: number,
    readonly kernel: number,
    readonly dtype: DType,
    rng: Rng,
    gain = Math.SQRT2
  ) {
    this.weight = makeParam(`${name}.weight`, [kernel, kernel, outC, inC], dtype);
    this.bias = makeParam(`${name}.bias`, [outC], dtype);
    initKernel(this.weight, kernel * kernel * inC, gain, rng);
  }

  params(): Param[] {
    return [this.weight, this.bias];
  }

  forward(x: Tensor): Tensor {
    const [n, h, w, c] = x.shape;
    if (c !== this.inC) throw new Error(`${this.name}: expected ${this.inC} channels, got ${c}`);
    const outH = h * 2;
    const outW = w * 2;
    const g = convGeometry(n, outH, outW, this.outC, this.kernel, 2);
    if (g.outH !== h || g.outW !== w) {
      throw new Error(`${this.name}: geometry mismatch for input ${h}x${w}`);
    }
    const rows = n * h * w;
    const kko = this.kernel * this.kernel * this.outC;
    const cols = alloc(rows * kko, this.dtype);
    matmulTransposeBInto(x.data, this.weight.value.data, cols, rows, this.inC, kko);
    const out = col2im(cols, g, this.dtype);
    const b = this.bias.value.data;
    for (let i = 0; i < out.length; i += this.outC) {
      for (let j = 0; j < this.outC; j++) out[i + j] += b[j];
    }
    this.geom = g;
    this.xFlat = x.data;
    this.inShape = x.shape.slice();
    return fromData(out, [n, outH, outW, this.outC]);
  }

  backward(dy: Tensor): Tensor {
    const g = this.geom;
    const xFlat = this.xFlat;
    const inShape = this.inShape;
    if (!g || !xFlat || !inShape) throw new Error(`${this.name}: backward before forward`);
    const [n, h, w] = inShape;
    const rows = n * h * w;
    const kko = this.kernel * this.kernel * this.outC;
    const patches = im2col(dy.data, g, this.dtype);
    matmulTransposeAInto(patches, xFlat, this.weight.grad, kko, rows, this.inC);
    const db = this.bias.grad;
    for (let i = 0; i < dy.data.length; i += this.outC) {
      for (let j = 0; j < this.outC; j++) db[j] += dy.data[i + j];
    }
    const dx = alloc(rows * this.inC, this.dtype);
    matmulInto(patches, this.weight.value.data, dx, rows, kko, this.inC);
    return fromData(dx, inShape);
  }
}

export class LeakyReLU {
  private input: Data | null = null;
  constructor(readonly alpha = 0.2) {}

  forward(x: Tensor): Tensor {
    const out = alloc(x.data.length, x.dtype);
    for (let i = 0; i < x.data.length; i++) {
      const v = x.data[i];
      out[i] = v > 0 ? v : this.alpha * v;
    }
    this.input = x.data;
    return fromData(out, x.shape);
  }

  backward(dy: Tensor): Tensor {
    const x = this.input;
    if (!x) throw new Error("leaky_relu: backward before forward");
    const dx = alloc(dy.data.length, dy.dtype);
    for (let i = 0; i < dy.data.length; i++) {
      dx[i] = x[i] > 0 ? dy.data[i] : this.alpha * dy.data[i];
    }
    return fromData(dx, dy.shape);
  }
}

export class Relu {
  private input: Data | null = null;

  forward(x: Tensor): Tensor {
    const out = alloc(x.data.length, x.dtype);
    for (let i = 0; i < x.data.length; i++) out[i] = Math.max(0, x.data[i]);
    this.input = x.data;
    return fromData(out, x.shape);
  }

  backward(dy: Tensor): Tensor {
    const x = this.input;
    if (!x) throw new Error("relu: backward before forward");
    const dx = alloc(dy.data.length, dy.dtype);
    for (let i = 0; i < dy.data.length; i++) dx[i] = x[i] > 0 ? dy.data[i] : 0;
    return fromData(dx, dy.shape);
  }
}

export class Tanh {
  private output: Data | null = null;

  forward(x: Tensor): Tensor {
    const out = alloc(x.data.length, x.dtype);
    for (let i = 0; i < x.data.length; i++) out[i] = Math.tanh(x.data[i]);
    this.output = out;
    return fromData(out, x.shape);
  }

  backward(dy: Tensor): Tensor {
    const y = this.output;
    if (!y) throw new Error("tanh: backward before forward");
    const dx = alloc(dy.data.length, dy.dtype);
    for (let i = 0; i < dy.data.length; i++) dx[i] = dy.data[i] * (1 - y[i] * y[i]);
    return fromData(dx, dy.shape);
  }
}

/** Concatenate two NHWC tensors along channels. */
export function concatChannels(a: Tensor, b: Tensor): Tensor {
  const [n, h, w, ca] = a.shape;
  const cb = b.shape[3];
  const out = alloc(n * h * w * (ca + cb), a.dtype);
  const pixels = n * h * w;
  for (let p = 0; p < pixels; p++) {
    out.set(a.data.subarray(p * ca, (p + 1) * ca) as never, p * (ca + cb));
    out.set(b.data.subarray(p * cb, (p + 1) * cb) as never, p * (ca + cb) + ca);
  }
  return fromData(out, [n, h, w, ca + cb]);
}

/** Split a channel-concatenated gradient back into its two parts. */
export function splitChannels(dy: Tensor, ca: number): [Tensor, Tensor] {
  const [n, h, w, c] = dy.shape;
  const cb = c - ca;
  const da = alloc(n * h * w * ca, dy.dtype);
  const db = alloc(n * h * w * cb, dy.dtype);
  const pixels = n * h * w;
  for (let p = 0; p < pixels; p++) {
    da.set(dy.data.subarray(p * c, p * c + ca) as never, p * ca);
    db.set(dy.data.subarray(p * c + ca, (p + 1) * c) as never, p * cb);
  }
  return [fromData(da, [n, h, w, ca]), fromData(db, [n, h, w, cb])];
}

export function addInto(target: Tensor, source: Tensor): Tensor {
  for (let i = 0; i < target.data.length; i++) target.data[i] += source.data[i];
  return target;
}
