#!/usr/bin/env node
/**
 * Plugin-protocol entry point.
 *
 * Usage: node dist/src/cli.js extract|reconstruct <workdir>
 *
 * The pipeline appends the work directory as the final argument, so the
 * configured command is e.g. "node frontend/dist/src/cli.js extract".
 */
import { adaptExtract, adaptReconstruct } from "./adapter";
import { configFromEnv } from "./config";

async function main(argv: string[]): Promise<number> {
  const [mode, workdir] = argv;
  if (!mode || !workdir) {
    process.stderr.write("usage: cli.js extract|reconstruct <workdir>\n");
    return 2;
  }
  const config = configFromEnv();
  if (mode === "extract") {
    const batch = await adaptExtract(workdir, config);
    process.stderr.write(`extracted masks for ${batch.names.length} frames\n`);
    return 0;
  }
  if (mode === "reconstruct") {
    const batch = await adaptReconstruct(workdir, config);
    process.stderr.write(`reconstructed ${batch.names.length} frames\n`);
    return 0;
  }
  process.stderr.write(`unknown mode ${JSON.stringify(mode)}\n`);
  return 2;
}

main(process.argv.slice(2))
  .then((code) => {
    process.exitCode = code;
  })
  .catch((err) => {
    process.stderr.write(`error: ${err instanceof Error ? err.message : err}\n`);
    process.exitCode = 1;
  });
