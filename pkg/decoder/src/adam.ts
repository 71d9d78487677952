import { Param } from "./layers.js";
import { alloc, Data } from "./tensor.js";

/** Adam with the pix2pix-conventional beta1 = 0.5. */
export class Adam {
  private m = new Map<string, Data>();
  private v = new Map<string, Data>();
  private t = 0;

  constructor(
    readonly lr: number,
    readonly beta1 = 0.5,
    readonly beta2 = 0.999,
    readonly eps = 1e-8
  ) {}

  step(params: Param[]): void {
    this.t += 1;
    const bc1 = 1 - Math.pow(this.beta1, this.t);
    const bc2 = 1 - Math.pow(this.beta2, this.t);
    for (const p of params) {
      let m = this.m.get(p.name);
      let v = this.v.get(p.name);
      if (!m || !v) {
        m = alloc(p.grad.length, p.value.dtype);
        v = alloc(p.grad.length, p.value.dtype);
        this.m.set(p.name, m);
        this.v.set(p.name, v);
      }
      const w = p.value.data;
      const g = p.grad;
      for (let i = 0; i < g.length; i++) {
        m[i] = this.beta1 * m[i] + (1 - this.beta1) * g[i];
        v[i] = this.beta2 * v[i] + (1 - this.beta2) * g[i] * g[i];
        w[i] -= (this.lr * (m[i] / bc1)) / (Math.sqrt(v[i] / bc2) + this.eps);
      }
    }
  }
}
