/** File plumbing: PNG tiles, CMAP files, manifests, atomic writes. */

import * as fs from "node:fs";
import * as path from "node:path";
import { PNG } from "pngjs";

import { Cmap, CmapError, decodeCmap, encodeCmap } from "./cmap.js";

export class ValidationError extends Error {
  readonly exitCode = 2;
  constructor(readonly kind: string, message: string) {
    super(message);
    this.name = "ValidationError";
  }
}

export class IoError extends Error {
  readonly exitCode = 4;
  constructor(message: string) {
    super(message);
    this.name = "IoError";
  }
}

export function atomicWrite(filePath: string, data: Buffer | string): void {
  const dir = path.dirname(filePath);
  const tmp = path.join(dir, `.${path.basename(filePath)}.${process.pid}.tmp`);
  try {
    fs.writeFileSync(tmp, data);
    fs.renameSync(tmp, filePath);
  } catch (err) {
    if (fs.existsSync(tmp)) fs.unlinkSync(tmp);
    throw new IoError(`cannot write ${filePath}: ${(err as Error).message}`);
  }
}

export function readCmapFile(filePath: string): Cmap {
  if (!fs.existsSync(filePath)) throw new IoError(`cmap file not found: ${filePath}`);
  return decodeCmap(fs.readFileSync(filePath));
}

export function writeCmapFile(filePath: string, cmap: Cmap): void {
  atomicWrite(filePath, encodeCmap(cmap));
}

export interface RgbImage {
  width: number;
  height: number;
  /** length = width * height * 3, layout [y][x][c] */
  pixels: Uint8Array;
}

export function readPng(filePath: string): RgbImage {
  if (!fs.existsSync(filePath)) throw new IoError(`image file not found: ${filePath}`);
  const png = PNG.sync.read(fs.readFileSync(filePath));
  const pixels = new Uint8Array(png.width * png.height * 3);
  for (let i = 0; i < png.width * png.height; i++) {
    pixels[3 * i] = png.data[4 * i];
    pixels[3 * i + 1] = png.data[4 * i + 1];
    pixels[3 * i + 2] = png.data[4 * i + 2];
  }
  return { width: png.width, height: png.height, pixels };
}

export function writePng(filePath: string, image: RgbImage): void {
  const png = new PNG({ width: image.width, height: image.height });
  for (let i = 0; i < image.width * image.height; i++) {
    png.data[4 * i] = image.pixels[3 * i];
    png.data[4 * i + 1] = image.pixels[3 * i + 1];
    png.data[4 * i + 2] = image.pixels[3 * i + 2];
    png.data[4 * i + 3] = 255;
  }
  atomicWrite(filePath, PNG.sync.write(png));
}

export interface ManifestEntry {
  path: string;
  domain_id: string;
  her2_score: string;
  split: string;
}

export interface Manifest {
  root: string;
  entries: ManifestEntry[];
  baseDir: string;
}

export function readManifest(filePath: string): Manifest {
  if (!fs.existsSync(filePath)) throw new IoError(`manifest not found: ${filePath}`);
  let parsed: unknown;
  try {
    parsed = JSON.parse(fs.readFileSync(filePath, "utf8"));
  } catch (err) {
    throw new ValidationError("manifest_format", `manifest is not valid JSON: ${(err as Error).message}`);
  }
  const obj = parsed as { root?: unknown; entries?: unknown };
  if (typeof obj !== "object" || obj === null || typeof obj.root !== "string" || !Array.isArray(obj.entries)) {
    throw new ValidationError("manifest_format", "manifest must have string 'root' and array 'entries'");
  }
  const entries = obj.entries.map((raw, i) => {
    const e = raw as Record<string, unknown>;
    for (const field of ["path", "domain_id", "her2_score", "split"]) {
      if (typeof e[field] !== "string") {
        throw new ValidationError("manifest_format", `entry ${i} missing string field '${field}'`);
      }
    }
    return {
      path: e.path as string,
      domain_id: e.domain_id as string,
      her2_score: e.her2_score as string,
      split: e.split as string,
    };
  });
  return { root: obj.root, entries, baseDir: path.dirname(path.resolve(filePath)) };
}

export function resolveEntry(manifest: Manifest, entry: ManifestEntry): string {
  const root = path.isAbsolute(manifest.root)
    ? manifest.root
    : path.join(manifest.baseDir, manifest.root);
  return path.join(root, entry.path);
}

/** Training tiles pair each PNG with its sibling concentration file. */
export function cmapPathFor(tilePath: string): string {
  const parsed = path.parse(tilePath);
  return path.join(parsed.dir, `${parsed.name}.cmap`);
}

export { CmapError };
