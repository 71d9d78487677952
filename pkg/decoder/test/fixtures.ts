import { execFileSync } from "node:child_process";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

/** Generate a synthetic tile dataset with the Python toolkit's CLI. The
 * decoder consumes the toolkit only through its published interfaces
 * (manifest + PNG + CMAP files), which is exactly what these tests exercise. */
export function synthDataset(options: {
  count: number;
  size: number;
  cells?: number;
  domain?: string;
  seed?: number;
  split?: "train" | "test";
}): string {
  const dir = fs.mkdtempSync(path.join(os.tmpdir(), "decoder-fixture-"));
  execFileSync(
    "python3",
    [
      "-m",
      "restain.cli",
      "synth",
      dir,
      "--count",
      String(options.count),
      "--size",
      String(options.size),
      "--cells",
      String(options.cells ?? 5),
      "--profile",
      options.domain ?? "her2-brand-b",
      "--seed",
      String(options.seed ?? 0),
      "--split",
      options.split ?? "train",
    ],
    { stdio: ["ignore", "ignore", "inherit"] }
  );
  return dir;
}

export function removeDataset(dir: string): void {
  fs.rmSync(dir, { recursive: true, force: true });
}
