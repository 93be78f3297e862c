/**
 * Box-prompted segmentation stage: image + box in, object mask out.
 *
 * The bundled backend marks pixels inside the box whose luminance is closer
 * to the box interior's median than to the image median, which recovers
 * solid objects exactly on synthetic scenes. It stands in for a promptable
 * segmentation model when no weights are configured.
 */
import { Box, Detector } from "./detector";
import { Raster, luminance } from "./ppm";

export interface Segmenter {
  segment(image: Raster, box: Box): Promise<Uint8Array>; // frame-sized 0/1 mask
}

export interface SegmenterOptions {
  modelPath?: string;
}

function median(values: number[]): number {
  const sorted = [...values].sort((a, b) => a - b);
  return sorted[sorted.length >> 1];
}

export class ContrastSegmenter implements Segmenter {
  async segment(image: Raster, box: Box): Promise<Uint8Array> {
    const luma = luminance(image);
    const inside: number[] = [];
    for (let y = box.y0; y < box.y1; y++) {
      for (let x = box.x0; x < box.x1; x++) {
        inside.push(luma[y * image.width + x]);
      }
    }
    const objectLevel = median(inside);
    const sceneLevel = median(Array.from(luma));
    const mask = new Uint8Array(image.width * image.height);
    for (let y = box.y0; y < box.y1; y++) {
      for (let x = box.x0; x < box.x1; x++) {
        const idx = y * image.width + x;
        const toObject = Math.abs(luma[idx] - objectLevel);
        const toScene = Math.abs(luma[idx] - sceneLevel);
        mask[idx] = toObject <= toScene ? 1 : 0;
      }
    }
    return mask;
  }
}

export function loadSegmenter(options: SegmenterOptions): Segmenter {
  if (options.modelPath) {
    throw new Error(
      `segmenter weights configured (${options.modelPath}) but no inference ` +
        "runtime is bundled; unset ADAPTER_SEGMENTER_MODEL to use the contrast stub",
    );
  }
  return new ContrastSegmenter();
}

/** Union of per-box segmentation masks for one frame. */
export async function extractMask(
  image: Raster,
  prompt: string,
  detector: Detector,
  segmenter: Segmenter,
): Promise<Uint8Array> {
  const union = new Uint8Array(image.width * image.height);
  const boxes = await detector.detect(image, prompt);
  for (const box of boxes) {
    const mask = await segmenter.segment(image, box);
    for (let i = 0; i < union.length; i++) {
      if (mask[i]) union[i] = 1;
    }
  }
  return union;
}
