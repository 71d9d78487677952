/** Training-set assembly from a manifest produced by the Python toolkit:
 * each train-split tile pairs a PNG with its sibling .cmap file. */

import { ValidationError, cmapPathFor, readCmapFile, readManifest, readPng, resolveEntry } from "./io.js";
import { Sample, normalizeConc, normalizeImage } from "./train.js";

export interface Dataset {
  samples: Sample[];
  domain: string;
  tilePaths: string[];
}

export function loadTrainingSet(manifestPath: string, domain: string, concMax: number): Dataset {
  const manifest = readManifest(manifestPath);
  const train = manifest.entries.filter((e) => e.split === "train");
  if (train.length === 0) {
    throw new ValidationError("empty_dataset", "manifest has no train-split entries");
  }
  // single-domain training is a hard precondition, checked before any work
  for (const entry of train) {
    if (entry.domain_id !== domain) {
      throw new ValidationError(
        "wrong_domain",
        `train split contains ${entry.domain_id !== undefined ? `domain ${JSON.stringify(entry.domain_id)}` : "an unlabeled entry"}; expected only ${JSON.stringify(domain)}`
      );
    }
  }
  const samples: Sample[] = [];
  const tilePaths: string[] = [];
  for (const entry of train) {
    const tilePath = resolveEntry(manifest, entry);
    const image = readPng(tilePath);
    const cmap = readCmapFile(cmapPathFor(tilePath));
    if (cmap.width !== image.width || cmap.height !== image.height) {
      throw new ValidationError(
        "bad_size",
        `${entry.path}: cmap ${cmap.width}x${cmap.height} does not match tile ${image.width}x${image.height}`
      );
    }
    if (cmap.channels !== 3) {
      throw new ValidationError("bad_dimensions", `${entry.path}: expected 3 cmap channels`);
    }
    samples.push({
      conc: normalizeConc(cmap.values, concMax),
      image: normalizeImage(image.pixels),
      height: image.height,
      width: image.width,
    });
    tilePaths.push(tilePath);
  }
  return { samples, domain, tilePaths };
}
