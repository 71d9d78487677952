#!/usr/bin/env node
/** `decoder train` / `decoder infer`: the command surface of the learned
 * decoder. One JSON object on stdout; `{"error": kind, "message": ...}` on
 * stderr with exit 2 (validation) or 4 (I/O). */

import * as fs from "node:fs";
import * as path from "node:path";
import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { loadGenerator, saveCheckpoint } from "./checkpoint.js";
import { CmapError } from "./cmap.js";
import { loadTrainingSet } from "./dataset.js";
import { infer } from "./infer.js";
import { IoError, ValidationError, atomicWrite, readCmapFile, writePng } from "./io.js";
import { DEFAULT_GENERATOR_SPEC } from "./model.js";
import { DEFAULT_TRAIN_CONFIG, StepRecord, trainDecoder } from "./train.js";

function fail(err: unknown): never {
  let kind = "validation";
  let exitCode = 2;
  if (err instanceof CmapError) kind = err.kind;
  else if (err instanceof ValidationError) kind = err.kind;
  else if (err instanceof IoError) {
    kind = "io";
    exitCode = 4;
  } else if (err instanceof Error && (err as NodeJS.ErrnoException).code) {
    kind = "io";
    exitCode = 4;
  }
  process.stderr.write(JSON.stringify({ error: kind, message: (err as Error).message }) + "\n");
  process.exit(exitCode);
}

function emit(payload: unknown): void {
  process.stdout.write(JSON.stringify(payload) + "\n");
}

function runTrain(argv: Record<string, unknown>): void {
  const outDir = argv.out as string;
  fs.mkdirSync(outDir, { recursive: true });
  const cfg = {
    lambdaL2: argv.lambdaL2 as number,
    learningRate: argv.lr as number,
    batchSize: argv.batchSize as number,
    steps: argv.steps as number,
    checkpointEvery: argv.checkpointEvery as number,
    seed: argv.seed as number,
    concMax: argv.concMax as number,
    reconLoss: argv.reconLoss as "l2" | "l1",
  };
  const spec = {
    inChannels: 3,
    outChannels: 3,
    baseWidth: argv.width as number,
    depth: argv.depth as number,
    seed: argv.seed as number,
  };
  const dataset = loadTrainingSet(argv.manifest as string, argv.domain as string, cfg.concMax);
  const checkpoints: string[] = [];
  const records: StepRecord[] = [];
  const state = trainDecoder(dataset.samples, spec, cfg, (record, s) => {
    records.push(record);
    if (cfg.checkpointEvery > 0 && record.step % cfg.checkpointEvery === 0) {
      const file = path.join(outDir, `checkpoint_${String(record.step).padStart(6, "0")}.json`);
      saveCheckpoint(file, record.step, s.generator, s.discriminator, cfg);
      checkpoints.push(file);
    }
  });
  const finalPath = path.join(outDir, "checkpoint_final.json");
  saveCheckpoint(finalPath, cfg.steps, state.generator, state.discriminator, cfg);
  checkpoints.push(finalPath);
  const logPath = path.join(outDir, "train_log.jsonl");
  atomicWrite(logPath, records.map((r) => JSON.stringify(r)).join("\n") + "\n");
  emit({
    steps: cfg.steps,
    samples: dataset.samples.length,
    domain: dataset.domain,
    final_loss_g_l2: records[records.length - 1].loss_g_l2,
    train_log: logPath,
    checkpoints,
  });
}

function runInfer(argv: Record<string, unknown>): void {
  const { generator, checkpoint } = loadGenerator(argv.checkpoint as string);
  const cmap = readCmapFile(argv.cmap as string);
  const image = infer(generator, cmap, checkpoint.normalization.concMax);
  writePng(argv.out as string, image);
  emit({ out: argv.out, width: image.width, height: image.height });
}

yargs(hideBin(process.argv))
  .scriptName("decoder")
  .command(
    "train",
    "train the decoder on one stain domain's tiles + concentration maps",
    (y) =>
      y
        .option("manifest", { type: "string", demandOption: true, describe: "manifest.json from the tile toolkit" })
        .option("domain", { type: "string", demandOption: true, describe: "the single domain the train split must contain" })
        .option("out", { type: "string", demandOption: true, describe: "output directory for checkpoints and the train log" })
        .option("steps", { type: "number", default: DEFAULT_TRAIN_CONFIG.steps })
        .option("batch-size", { type: "number", default: DEFAULT_TRAIN_CONFIG.batchSize })
        .option("lr", { type: "number", default: DEFAULT_TRAIN_CONFIG.learningRate })
        .option("lambda-l2", { type: "number", default: DEFAULT_TRAIN_CONFIG.lambdaL2 })
        .option("checkpoint-every", { type: "number", default: DEFAULT_TRAIN_CONFIG.checkpointEvery })
        .option("conc-max", { type: "number", default: DEFAULT_TRAIN_CONFIG.concMax })
        .option("recon-loss", { choices: ["l2", "l1"] as const, default: DEFAULT_TRAIN_CONFIG.reconLoss })
        .option("width", { type: "number", default: DEFAULT_GENERATOR_SPEC.baseWidth })
        .option("depth", { type: "number", default: DEFAULT_GENERATOR_SPEC.depth })
        .option("seed", { type: "number", default: 0 }),
    (argv) => {
      try {
        runTrain(argv as Record<string, unknown>);
      } catch (err) {
        fail(err);
      }
    }
  )
  .command(
    "infer",
    "run the frozen generator on a concentration map",
    (y) =>
      y
        .option("checkpoint", { type: "string", demandOption: true })
        .option("cmap", { type: "string", demandOption: true })
        .option("out", { type: "string", demandOption: true }),
    (argv) => {
      try {
        runInfer(argv as Record<string, unknown>);
      } catch (err) {
        fail(err);
      }
    }
  )
  .demandCommand(1)
  .strict()
  .help()
  .parse();
