/**
 * Open-set object detection stage: text prompt + image in, boxes out.
 *
 * The bundled backend is a deterministic saliency stub: it thresholds
 * luminance contrast against the image median and boxes the connected
 * components. It stands in for a text-conditioned detector when no model
 * weights are configured, so the protocol path stays fully testable.
 */
import { Raster, luminance } from "./ppm";

export interface Box {
  /** half-open pixel box */
  x0: number;
  y0: number;
  x1: number;
  y1: number;
}

export interface Detector {
  detect(image: Raster, prompt: string): Promise<Box[]>;
}

export interface DetectorOptions {
  /** absolute luminance distance from the image median that counts as salient */
  contrast: number;
  /** components smaller than this many pixels are dropped */
  minArea: number;
  /** path to real model weights; unset selects the stub */
  modelPath?: string;
}

export const DEFAULT_DETECTOR_OPTIONS: DetectorOptions = {
  contrast: 48,
  minArea: 16,
};

function median(values: Float64Array): number {
  const sorted = Float64Array.from(values).sort();
  return sorted[sorted.length >> 1];
}

/** 8-connected components of a binary map; labels 0 = background. */
export function labelComponents(
  mask: Uint8Array,
  width: number,
  height: number,
): { labels: Int32Array; count: number } {
  const labels = new Int32Array(width * height);
  let count = 0;
  const stack: number[] = [];
  for (let start = 0; start < mask.length; start++) {
    if (!mask[start] || labels[start]) continue;
    count += 1;
    labels[start] = count;
    stack.push(start);
    while (stack.length > 0) {
      const idx = stack.pop()!;
      const y = Math.floor(idx / width);
      const x = idx - y * width;
      for (let dy = -1; dy <= 1; dy++) {
        for (let dx = -1; dx <= 1; dx++) {
          if (dx === 0 && dy === 0) continue;
          const ny = y + dy;
          const nx = x + dx;
          if (ny < 0 || ny >= height || nx < 0 || nx >= width) continue;
          const nidx = ny * width + nx;
          if (mask[nidx] && !labels[nidx]) {
            labels[nidx] = count;
            stack.push(nidx);
          }
        }
      }
    }
  }
  return { labels, count };
}

export class SaliencyDetector implements Detector {
  constructor(private readonly options: DetectorOptions) {}

  async detect(image: Raster, _prompt: string): Promise<Box[]> {
    const luma = luminance(image);
    const center = median(luma);
    const mask = new Uint8Array(luma.length);
    for (let i = 0; i < luma.length; i++) {
      mask[i] = Math.abs(luma[i] - center) > this.options.contrast ? 1 : 0;
    }
    const { labels, count } = labelComponents(mask, image.width, image.height);
    if (count === 0) return [];
    const minX = new Int32Array(count + 1).fill(image.width);
    const minY = new Int32Array(count + 1).fill(image.height);
    const maxX = new Int32Array(count + 1).fill(-1);
    const maxY = new Int32Array(count + 1).fill(-1);
    const area = new Int32Array(count + 1);
    for (let i = 0; i < labels.length; i++) {
      const label = labels[i];
      if (!label) continue;
      const y = Math.floor(i / image.width);
      const x = i - y * image.width;
      if (x < minX[label]) minX[label] = x;
      if (y < minY[label]) minY[label] = y;
      if (x > maxX[label]) maxX[label] = x;
      if (y > maxY[label]) maxY[label] = y;
      area[label] += 1;
    }
    const boxes: Box[] = [];
    for (let label = 1; label <= count; label++) {
      if (area[label] < this.options.minArea) continue;
      boxes.push({ x0: minX[label], y0: minY[label], x1: maxX[label] + 1, y1: maxY[label] + 1 });
    }
    boxes.sort((a, b) => (a.y0 - b.y0) || (a.x0 - b.x0));
    return boxes;
  }
}

export function loadDetector(options: DetectorOptions): Detector {
  if (options.modelPath) {
    // Real text-conditioned weights need an inference runtime that is not
    // bundled; fail loudly rather than silently falling back.
    throw new Error(
      `detector weights configured (${options.modelPath}) but no inference ` +
        "runtime is bundled; unset ADAPTER_DETECTOR_MODEL to use the saliency stub",
    );
  }
  return new SaliencyDetector(options);
}
