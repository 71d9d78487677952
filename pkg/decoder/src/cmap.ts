/** CMAP1 concentration-map container, byte-compatible with the Python
 * toolkit: magic "CMAP1\0", u32-LE width/height/channels, then float32-LE
 * values, row-major with the channel index fastest. Verified against the
 * shared golden files. */

export const CMAP_MAGIC = Buffer.from("CMAP1\0", "latin1");
export const CMAP_MAX_DIM = 65536;

export class CmapError extends Error {
  constructor(readonly kind: string, message: string) {
    super(message);
    this.name = "CmapError";
  }
}

export interface Cmap {
  width: number;
  height: number;
  channels: number;
  /** length = width * height * channels, layout [y][x][c] */
  values: Float32Array;
}

export function decodeCmap(data: Buffer): Cmap {
  if (data.length < 18) {
    throw new CmapError("truncated_payload", `file too short for header (${data.length} bytes)`);
  }
  if (!data.subarray(0, 6).equals(CMAP_MAGIC)) {
    throw new CmapError("bad_magic", `bad magic ${JSON.stringify(data.subarray(0, 6).toString("latin1"))}`);
  }
  const width = data.readUInt32LE(6);
  const height = data.readUInt32LE(10);
  const channels = data.readUInt32LE(14);
  if (width === 0 || height === 0 || channels < 1 || channels > 3) {
    throw new CmapError("bad_dimensions", `invalid dimensions ${width}x${height}x${channels}`);
  }
  if (width > CMAP_MAX_DIM || height > CMAP_MAX_DIM) {
    throw new CmapError("dimension_overflow", `dimensions ${width}x${height} exceed the ${CMAP_MAX_DIM} limit`);
  }
  const expected = 4 * width * height * channels;
  const payload = data.length - 18;
  if (payload < expected) {
    throw new CmapError("truncated_payload", `payload has ${payload} bytes, expected ${expected}`);
  }
  if (payload > expected) {
    throw new CmapError("oversized_payload", `payload has ${payload} bytes, expected ${expected}`);
  }
  const values = new Float32Array(width * height * channels);
  for (let i = 0; i < values.length; i++) {
    values[i] = data.readFloatLE(18 + 4 * i);
  }
  return { width, height, channels, values };
}

export function encodeCmap(cmap: Cmap): Buffer {
  const { width, height, channels, values } = cmap;
  if (width === 0 || height === 0 || channels < 1 || channels > 3) {
    throw new CmapError("bad_dimensions", `invalid dimensions ${width}x${height}x${channels}`);
  }
  if (width > CMAP_MAX_DIM || height > CMAP_MAX_DIM) {
    throw new CmapError("dimension_overflow", `dimensions ${width}x${height} exceed the ${CMAP_MAX_DIM} limit`);
  }
  if (values.length !== width * height * channels) {
    throw new CmapError("bad_dimensions", `value count ${values.length} does not match dimensions`);
  }
  const out = Buffer.alloc(18 + 4 * values.length);
  CMAP_MAGIC.copy(out, 0);
  out.writeUInt32LE(width, 6);
  out.writeUInt32LE(height, 10);
  out.writeUInt32LE(channels, 14);
  for (let i = 0; i < values.length; i++) {
    out.writeFloatLE(values[i], 18 + 4 * i);
  }
  return out;
}
