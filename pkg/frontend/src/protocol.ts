/**
 * Work-directory protocol shared with the pipeline: read input/NNNNNN.ppm
 * (and prompt.txt for extraction), write one output/NNNNNN.ppm per input.
 */
import { promises as fs } from "fs";
import * as path from "path";

import { Raster, decodePpm, encodePpm } from "./ppm";

export interface WorkBatch {
  root: string;
  names: string[]; // input file names in sorted order
  frames: Raster[];
  prompt: string;
}

export async function readBatch(root: string): Promise<WorkBatch> {
  const inputDir = path.join(root, "input");
  let entries: string[];
  try {
    entries = await fs.readdir(inputDir);
  } catch (err) {
    throw new Error(`work directory has no input/: ${inputDir}`);
  }
  const names = entries.filter((name) => name.endsWith(".ppm")).sort();
  if (names.length === 0) {
    throw new Error(`no input frames in ${inputDir}`);
  }
  const frames: Raster[] = [];
  for (const name of names) {
    frames.push(decodePpm(await fs.readFile(path.join(inputDir, name))));
  }
  let prompt = "";
  try {
    prompt = (await fs.readFile(path.join(root, "prompt.txt"), "utf-8")).trim();
  } catch {
    // reconstruction batches carry no prompt
  }
  return { root, names, frames, prompt };
}

export async function writeOutputs(batch: WorkBatch, outputs: Raster[]): Promise<void> {
  if (outputs.length !== batch.names.length) {
    throw new Error(
      `have ${outputs.length} outputs for ${batch.names.length} inputs`,
    );
  }
  const outputDir = path.join(batch.root, "output");
  await fs.mkdir(outputDir, { recursive: true });
  await Promise.all(
    outputs.map((raster, i) =>
      fs.writeFile(path.join(outputDir, batch.names[i]), encodePpm(raster)),
    ),
  );
}
