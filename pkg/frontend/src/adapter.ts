/** Extraction and reconstruction entry points over a work directory. */
import { AdapterConfig } from "./config";
import { loadDetector } from "./detector";
import { loadGenerator } from "./generator";
import { Raster, binaryMaskRaster } from "./ppm";
import { WorkBatch, readBatch, writeOutputs } from "./protocol";
import { extractMask, loadSegmenter } from "./segmenter";

async function mapInBatches<T>(
  items: Raster[],
  batchSize: number,
  fn: (item: Raster) => Promise<T>,
): Promise<T[]> {
  const out: T[] = [];
  for (let start = 0; start < items.length; start += batchSize) {
    const chunk = items.slice(start, start + batchSize);
    out.push(...(await Promise.all(chunk.map(fn))));
  }
  return out;
}

/** One binary mask raster per input frame, written per the protocol. */
export async function adaptExtract(root: string, config: AdapterConfig): Promise<WorkBatch> {
  const batch = await readBatch(root);
  const prompt = batch.prompt || config.defaultPrompt;
  if (!prompt) {
    throw new Error("extraction needs a prompt (prompt.txt or ADAPTER_DEFAULT_PROMPT)");
  }
  const detector = loadDetector(config.detector);
  const segmenter = loadSegmenter(config.segmenter);
  const masks = await mapInBatches(batch.frames, config.batchSize, async (frame) => {
    const mask = await extractMask(frame, prompt, detector, segmenter);
    return binaryMaskRaster(frame.width, frame.height, mask);
  });
  await writeOutputs(batch, masks);
  return batch;
}

/** One same-geometry reconstructed frame per input, written per the protocol. */
export async function adaptReconstruct(root: string, config: AdapterConfig): Promise<WorkBatch> {
  const batch = await readBatch(root);
  const generator = loadGenerator(config.generator);
  const outputs = await mapInBatches(batch.frames, config.batchSize, async (frame) => {
    const out = await generator.reconstruct(frame);
    if (out.width !== frame.width || out.height !== frame.height) {
      throw new Error(
        `generator changed geometry ${frame.width}x${frame.height} -> ${out.width}x${out.height}`,
      );
    }
    return out;
  });
  await writeOutputs(batch, outputs);
  return batch;
}
