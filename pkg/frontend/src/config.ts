/** Adapter configuration from environment variables. */
import { DEFAULT_DETECTOR_OPTIONS, DetectorOptions } from "./detector";
import { GeneratorOptions } from "./generator";
import { SegmenterOptions } from "./segmenter";

export interface AdapterConfig {
  detector: DetectorOptions;
  segmenter: SegmenterOptions;
  generator: GeneratorOptions;
  device: string;
  defaultPrompt: string;
  batchSize: number;
}

function intEnv(name: string, fallback: number): number {
  const raw = process.env[name];
  if (raw === undefined || raw === "") return fallback;
  const value = Number.parseInt(raw, 10);
  if (!Number.isFinite(value) || value < 1) {
    throw new Error(`${name} must be a positive integer, got ${JSON.stringify(raw)}`);
  }
  return value;
}

export function configFromEnv(env: NodeJS.ProcessEnv = process.env): AdapterConfig {
  return {
    detector: {
      contrast: intEnv("ADAPTER_DETECTOR_CONTRAST", DEFAULT_DETECTOR_OPTIONS.contrast),
      minArea: intEnv("ADAPTER_DETECTOR_MIN_AREA", DEFAULT_DETECTOR_OPTIONS.minArea),
      modelPath: env.ADAPTER_DETECTOR_MODEL || undefined,
    },
    segmenter: { modelPath: env.ADAPTER_SEGMENTER_MODEL || undefined },
    generator: {
      modelPath: env.ADAPTER_GENERATOR_MODEL || undefined,
      device: env.ADAPTER_DEVICE || "cpu",
    },
    device: env.ADAPTER_DEVICE || "cpu",
    defaultPrompt: env.ADAPTER_DEFAULT_PROMPT || "person. car",
    batchSize: intEnv("ADAPTER_BATCH_SIZE", 8),
  };
}
