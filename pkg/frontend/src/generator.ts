/**
 * Reconstruction stage: composed frame in, denoised/completed frame out.
 *
 * The bundled backend is the identity generator (echo), the stub used by the
 * protocol conformance tests. Trained generator weights would plug in here;
 * inference is deterministic per frame either way.
 */
import { Raster } from "./ppm";

export interface Generator {
  reconstruct(image: Raster): Promise<Raster>;
}

export interface GeneratorOptions {
  modelPath?: string;
  device?: string;
}

export class IdentityGenerator implements Generator {
  async reconstruct(image: Raster): Promise<Raster> {
    return { ...image, pixels: new Uint8Array(image.pixels) };
  }
}

export function loadGenerator(options: GeneratorOptions): Generator {
  if (options.modelPath) {
    throw new Error(
      `generator weights configured (${options.modelPath}) but no inference ` +
        "runtime is bundled; unset ADAPTER_GENERATOR_MODEL to use the identity stub",
    );
  }
  return new IdentityGenerator();
}
