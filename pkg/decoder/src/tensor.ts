/** Dense NHWC tensors over typed arrays.
 *
 * Training runs in f32 (the storage rounds every accumulate, like any f32
 * framework); f64 exists so numerical tests (e.g. the finite-difference
 * gradient check) are limited by the method, not the arithmetic. */

export type DType = "f32" | "f64";
export type Data = Float32Array | Float64Array;

export interface Tensor {
  shape: number[];
  data: Data;
  dtype: DType;
}

export function sizeOf(shape: number[]): number {
  return shape.reduce((a, b) => a * b, 1);
}

export function alloc(n: number, dtype: DType): Data {
  return dtype === "f32" ? new Float32Array(n) : new Float64Array(n);
}

export function zeros(shape: number[], dtype: DType = "f32"): Tensor {
  return { shape: shape.slice(), data: alloc(sizeOf(shape), dtype), dtype };
}

export function fromData(data: Data, shape: number[]): Tensor {
  if (data.length !== sizeOf(shape)) {
    throw new Error(`data length ${data.length} does not match shape [${shape}]`);
  }
  return { shape: shape.slice(), data, dtype: data instanceof Float32Array ? "f32" : "f64" };
}

export function clone(t: Tensor): Tensor {
  return { shape: t.shape.slice(), data: t.data.slice() as Data, dtype: t.dtype };
}

export function assertShape(t: Tensor, shape: number[], what: string): void {
  if (t.shape.length !== shape.length || t.shape.some((d, i) => d !== shape[i])) {
    throw new Error(`${what}: expected shape [${shape}], got [${t.shape}]`);
  }
}
