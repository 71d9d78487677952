/** Frozen-generator inference: concentration map in, styled RGB tile out. */

import { Cmap } from "./cmap.js";
import { RgbImage, ValidationError } from "./io.js";
import { UNetGenerator, assertSizeDivisible } from "./model.js";
import { denormalizeImage, normalizeConc } from "./train.js";
import { fromData } from "./tensor.js";

export function infer(generator: UNetGenerator, cmap: Cmap, concMax: number): RgbImage {
  if (cmap.channels !== 3) {
    throw new ValidationError("bad_dimensions", `expected 3 concentration channels, got ${cmap.channels}`);
  }
  assertSizeDivisible(cmap.height, cmap.width, generator.spec.depth);
  const conc = normalizeConc(cmap.values, concMax);
  const out = generator.forward(fromData(conc, [1, cmap.height, cmap.width, 3]));
  return { width: cmap.width, height: cmap.height, pixels: denormalizeImage(out.data) };
}
