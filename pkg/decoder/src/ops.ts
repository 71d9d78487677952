/** Numeric kernels: matmul, im2col/col2im and the losses.
 *
 * Convolution and its gradients reduce to these three primitives; transposed
 * convolution reuses the same geometry with the roles of the two grids
 * swapped. Padding follows the TensorFlow "same" convention (total pad
 * max((Ho-1)*s + k - H, 0), split floor/ceil).
 */

import { alloc, Data, DType } from "./tensor.js";

/** C[M,N] += A[M,K] @ B[K,N] (row-major). i-k-j order keeps the inner loop
 * linear over both B and C. */
export function matmulInto(
  a: Data,
  b: Data,
  c: Data,
  m: number,
  k: number,
  n: number
): void {
  for (let i = 0; i < m; i++) {
    const aRow = i * k;
    const cRow = i * n;
    for (let p = 0; p < k; p++) {
      const av = a[aRow + p];
      if (av === 0) continue;
      const bRow = p * n;
      for (let j = 0; j < n; j++) {
        c[cRow + j] += av * b[bRow + j];
      }
    }
  }
}

/** C[M,N] += A^T (A is [K,M]) @ B[K,N]. */
export function matmulTransposeAInto(
  a: Data,
  b: Data,
  c: Data,
  m: number,
  k: number,
  n: number
): void {
  for (let p = 0; p < k; p++) {
    const aRow = p * m;
    const bRow = p * n;
    for (let i = 0; i < m; i++) {
      const av = a[aRow + i];
      if (av === 0) continue;
      const cRow = i * n;
      for (let j = 0; j < n; j++) {
        c[cRow + j] += av * b[bRow + j];
      }
    }
  }
}

/** C[M,N] += A[M,K] @ B^T (B is [N,K]). */
export function matmulTransposeBInto(
  a: Data,
  b: Data,
  c: Data,
  m: number,
  k: number,
  n: number
): void {
  for (let i = 0; i < m; i++) {
    const aRow = i * k;
    const cRow = i * n;
    for (let j = 0; j < n; j++) {
      const bRow = j * k;
      let acc = 0;
      for (let p = 0; p < k; p++) {
        acc += a[aRow + p] * b[bRow + p];
      }
      c[cRow + j] += acc;
    }
  }
}

export interface ConvGeometry {
  batch: number;
  inH: number;
  inW: number;
  channels: number; // channels on the large (input-of-conv) grid
  kernel: number;
  stride: number;
  outH: number;
  outW: number;
  padTop: number;
  padLeft: number;
}

export function convGeometry(
  batch: number,
  inH: number,
  inW: number,
  channels: number,
  kernel: number,
  stride: number
): ConvGeometry {
  const outH = Math.ceil(inH / stride);
  const outW = Math.ceil(inW / stride);
  const padH = Math.max((outH - 1) * stride + kernel - inH, 0);
  const padW = Math.max((outW - 1) * stride + kernel - inW, 0);
  return {
    batch,
    inH,
    inW,
    channels,
    kernel,
    stride,
    outH,
    outW,
    padTop: Math.floor(padH / 2),
    padLeft: Math.floor(padW / 2),
  };
}

/** Gather x [N,inH,inW,C] into patches [N*outH*outW, k*k*C]. */
export function im2col(x: Data, g: ConvGeometry, dtype: DType): Data {
  const { batch, inH, inW, channels, kernel, stride, outH, outW, padTop, padLeft } = g;
  const cols = alloc(batch * outH * outW * kernel * kernel * channels, dtype);
  let row = 0;
  for (let n = 0; n < batch; n++) {
    const xBase = n * inH * inW * channels;
    for (let oy = 0; oy < outH; oy++) {
      const y0 = oy * stride - padTop;
      for (let ox = 0; ox < outW; ox++) {
        const x0 = ox * stride - padLeft;
        let col = row * kernel * kernel * channels;
        for (let ky = 0; ky < kernel; ky++) {
          const yy = y0 + ky;
          if (yy < 0 || yy >= inH) {
            col += kernel * channels;
            continue;
          }
          for (let kx = 0; kx < kernel; kx++) {
            const xx = x0 + kx;
            if (xx < 0 || xx >= inW) {
              col += channels;
              continue;
            }
            const src = xBase + (yy * inW + xx) * channels;
            for (let c = 0; c < channels; c++) {
              cols[col + c] = x[src + c];
            }
            col += channels;
          }
        }
        row++;
      }
    }
  }
  return cols;
}

/** Scatter-add patches [N*outH*outW, k*k*C] back onto the large grid;
 * exact adjoint of im2col. */
export function col2im(cols: Data, g: ConvGeometry, dtype: DType): Data {
  const { batch, inH, inW, channels, kernel, stride, outH, outW, padTop, padLeft } = g;
  const x = alloc(batch * inH * inW * channels, dtype);
  let row = 0;
  for (let n = 0; n < batch; n++) {
    const xBase = n * inH * inW * channels;
    for (let oy = 0; oy < outH; oy++) {
      const y0 = oy * stride - padTop;
      for (let ox = 0; ox < outW; ox++) {
        const x0 = ox * stride - padLeft;
        let col = row * kernel * kernel * channels;
        for (let ky = 0; ky < kernel; ky++) {
          const yy = y0 + ky;
          if (yy < 0 || yy >= inH) {
            col += kernel * channels;
            continue;
          }
          for (let kx = 0; kx < kernel; kx++) {
            const xx = x0 + kx;
            if (xx < 0 || xx >= inW) {
              col += channels;
              continue;
            }
            const dst = xBase + (yy * inW + xx) * channels;
            for (let c = 0; c < channels; c++) {
              x[dst + c] += cols[col + c];
            }
            col += channels;
          }
        }
        row++;
      }
    }
  }
  return x;
}

/** Mean squared error and its gradient w.r.t. `a`. */
export function mseLoss(a: Data, b: Data): { loss: number; grad: (scale: number) => Data } {
  if (a.length !== b.length) throw new Error("mse: length mismatch");
  let acc = 0;
  for (let i = 0; i < a.length; i++) {
    const d = a[i] - b[i];
    acc += d * d;
  }
  const loss = acc / a.length;
  return {
    loss,
    grad: (scale: number) => {
      const g = alloc(a.length, a instanceof Float32Array ? "f32" : "f64");
      const f = (2 * scale) / a.length;
      for (let i = 0; i < a.length; i++) {
        g[i] = f * (a[i] - b[i]);
      }
      return g;
    },
  };
}

/** Mean absolute error and its (sub)gradient w.r.t. `a`. */
export function maeLoss(a: Data, b: Data): { loss: number; grad: (scale: number) => Data } {
  if (a.length !== b.length) throw new Error("mae: length mismatch");
  let acc = 0;
  for (let i = 0; i < a.length; i++) acc += Math.abs(a[i] - b[i]);
  const loss = acc / a.length;
  return {
    loss,
    grad: (scale: number) => {
      const g = alloc(a.length, a instanceof Float32Array ? "f32" : "f64");
      const f = scale / a.length;
      for (let i = 0; i < a.length; i++) {
        g[i] = a[i] > b[i] ? f : a[i] < b[i] ? -f : 0;
      }
      return g;
    },
  };
}

/** Binary cross-entropy on logits against a constant target (0 or 1), with
 * the numerically stable log-sum-exp form. */
export function bceWithLogits(
  z: Data,
  target: number
): { loss: number; grad: (scale: number) => Data } {
  let acc = 0;
  for (let i = 0; i < z.length; i++) {
    const v = z[i];
    acc += Math.max(v, 0) - v * target + Math.log(1 + Math.exp(-Math.abs(v)));
  }
  const loss = acc / z.length;
  return {
    loss,
    grad: (scale: number) => {
      const g = alloc(z.length, z instanceof Float32Array ? "f32" : "f64");
      const f = scale / z.length;
      for (let i = 0; i < z.length; i++) {
        g[i] = f * (1 / (1 + Math.exp(-z[i])) - target);
      }
      return g;
    },
  };
}
