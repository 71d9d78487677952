import * as fs from "node:fs";
import * as path from "node:path";
import { describe, expect, it } from "vitest";

import { CmapError, decodeCmap, encodeCmap } from "../src/cmap.js";

const GOLDEN_DIR = path.join(__dirname, "..", "..", "tests", "golden");

function goldenBytes(): Buffer {
  return fs.readFileSync(path.join(GOLDEN_DIR, "concentrations_5x4x3.cmap"));
}

interface GoldenMeta {
  file: string;
  width: number;
  height: number;
  channels: number;
  values_row_major_channel_fastest: number[];
}

function goldenMeta(): GoldenMeta {
  return JSON.parse(fs.readFileSync(path.join(GOLDEN_DIR, "concentrations_5x4x3.json"), "utf8"));
}

describe("cross-component golden file", () => {
  it("decodes the toolkit-written bytes to the descriptor's exact values", () => {
    const meta = goldenMeta();
    const cmap = decodeCmap(goldenBytes());
    expect(cmap.width).toBe(meta.width);
    expect(cmap.height).toBe(meta.height);
    expect(cmap.channels).toBe(meta.channels);
    const expected = Float32Array.from(meta.values_row_major_channel_fastest.map(Math.fround));
    expect(cmap.values.length).toBe(expected.length);
    for (let i = 0; i < expected.length; i++) {
      expect(cmap.values[i]).toBe(expected[i]);
    }
  });

  it("re-encodes the descriptor values to byte-identical output", () => {
    const meta = goldenMeta();
    const encoded = encodeCmap({
      width: meta.width,
      height: meta.height,
      channels: meta.channels,
      values: Float32Array.from(meta.values_row_major_channel_fastest.map(Math.fround)),
    });
    expect(encoded.equals(goldenBytes())).toBe(true);
  });
});

describe("round trip", () => {
  it("is value-identical for random maps", () => {
    const values = new Float32Array(6 * 5 * 3);
    for (let i = 0; i < values.length; i++) values[i] = Math.fround(Math.sin(i) * 2.5 - 0.3);
    const back = decodeCmap(encodeCmap({ width: 5, height: 6, channels: 3, values }));
    expect(back.width).toBe(5);
    expect(Array.from(back.values)).toEqual(Array.from(values));
  });
});

describe("malformed input", () => {
  const valid = () => encodeCmap({ width: 2, height: 2, channels: 1, values: new Float32Array(4) });

  it("rejects bad magic", () => {
    const data = valid();
    data.write("NOTCM", 0, "latin1");
    expect(() => decodeCmap(data)).toThrowError(
      expect.objectContaining({ kind: "bad_magic" }) as Error
    );
  });

  it("rejects truncated payload", () => {
    expect(() => decodeCmap(valid().subarray(0, 18 + 8))).toThrowError(
      expect.objectContaining({ kind: "truncated_payload" }) as Error
    );
  });

  it("rejects oversized payload", () => {
    expect(() => decodeCmap(Buffer.concat([valid(), Buffer.alloc(4)]))).toThrowError(
      expect.objectContaining({ kind: "oversized_payload" }) as Error
    );
  });

  it("rejects zero dimensions", () => {
    const data = valid();
    data.writeUInt32LE(0, 6);
    expect(() => decodeCmap(data)).toThrowError(
      expect.objectContaining({ kind: "bad_dimensions" }) as Error
    );
  });

  it("rejects dimension overflow", () => {
    const data = valid();
    data.writeUInt32LE(70000, 6);
    expect(() => decodeCmap(data)).toThrowError(
      expect.objectContaining({ kind: "dimension_overflow" }) as Error
    );
  });

  it("rejects more than 3 channels", () => {
    const data = valid();
    data.writeUInt32LE(4, 14);
    expect(() => decodeCmap(data)).toThrowError(
      expect.objectContaining({ kind: "bad_dimensions" }) as Error
    );
  });

  it("exposes the error kind on the class", () => {
    try {
      decodeCmap(Buffer.alloc(3));
      expect.unreachable();
    } catch (err) {
      expect(err).toBeInstanceOf(CmapError);
      expect((err as CmapError).kind).toBe("truncated_payload");
    }
  });
});
