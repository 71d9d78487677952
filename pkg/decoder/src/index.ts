export { Adam } from "./adam.js";
export { Cmap, CmapError, decodeCmap, encodeCmap } from "./cmap.js";
export { loadGenerator, saveCheckpoint } from "./checkpoint.js";
export { Dataset, loadTrainingSet } from "./dataset.js";
export { infer } from "./infer.js";
export {
  IoError,
  Manifest,
  ManifestEntry,
  RgbImage,
  ValidationError,
  cmapPathFor,
  readCmapFile,
  readManifest,
  readPng,
  resolveEntry,
  writeCmapFile,
  writePng,
} from "./io.js";
export { Param, zeroGrad } from "./layers.js";
export {
  DEFAULT_GENERATOR_SPEC,
  GeneratorSpec,
  PatchDiscriminator,
  UNetGenerator,
  assertSizeDivisible,
} from "./model.js";
export { bceWithLogits, mseLoss } from "./ops.js";
export { mulberry32 } from "./rng.js";
export { Tensor, fromData, zeros } from "./tensor.js";
export {
  DEFAULT_TRAIN_CONFIG,
  Sample,
  StepRecord,
  TrainConfig,
  TrainState,
  denormalizeImage,
  normalizeConc,
  normalizeImage,
  trainDecoder,
  validateTrainConfig,
} from "./train.js";
