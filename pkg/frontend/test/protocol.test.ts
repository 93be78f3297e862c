import assert from "node:assert/strict";
import { spawnSync } from "node:child_process";
import { promises as fs } from "node:fs";
import os from "node:os";
import * as path from "node:path";
import { test } from "node:test";

import { adaptExtract, adaptReconstruct } from "../src/adapter";
import { configFromEnv } from "../src/config";
import { Raster, decodePpm, encodePpm } from "../src/ppm";

const CLI = path.join(__dirname, "..", "src", "cli.js");

function frameWithSquare(bright: boolean): Raster {
  const width = 40;
  const height = 30;
  const pixels = new Uint8Array(width * height * 3).fill(25);
  if (bright) {
    for (let y = 8; y < 16; y++) {
      for (let x = 10; x < 20; x++) {
        const base = (y * width + x) * 3;
        pixels[base] = 230;
        pixels[base + 1] = 230;
        pixels[base + 2] = 230;
      }
    }
  }
  return { width, height, channels: 3, pixels };
}

async function makeWorkdir(frames: Raster[], prompt?: string): Promise<string> {
  const root = await fs.mkdtemp(path.join(os.tmpdir(), "adapter-test-"));
  await fs.mkdir(path.join(root, "input"), { recursive: true });
  await Promise.all(
    frames.map((frame, i) =>
      fs.writeFile(
        path.join(root, "input", `${String(i).padStart(6, "0")}.ppm`),
        encodePpm(frame),
      ),
    ),
  );
  if (prompt !== undefined) {
    await fs.writeFile(path.join(root, "prompt.txt"), prompt);
  }
  return root;
}

test("extraction writes one 0/255 mask per input", async () => {
  const root = await makeWorkdir([frameWithSquare(true), frameWithSquare(false)], "person. car");
  await adaptExtract(root, configFromEnv({}));
  const names = (await fs.readdir(path.join(root, "output"))).sort();
  assert.deepEqual(names, ["000000.ppm", "000001.ppm"]);
  const first = decodePpm(await fs.readFile(path.join(root, "output", "000000.ppm")));
  assert.equal(first.width, 40);
  assert.equal(first.height, 30);
  const values = new Set(first.pixels);
  assert.deepEqual([...values].sort((a, b) => a - b), [0, 255]);
  let lit = 0;
  for (let i = 0; i < first.pixels.length; i += 3) if (first.pixels[i]) lit++;
  assert.equal(lit, 10 * 8); // exactly the square
  // frame with no detections -> all-zero mask
  const second = decodePpm(await fs.readFile(path.join(root, "output", "000001.ppm")));
  assert.equal(second.pixels.some((v) => v !== 0), false);
});

test("reconstruction echoes inputs bit-exactly with identity weights", async () => {
  const frames = [frameWithSquare(true), frameWithSquare(false)];
  const root = await makeWorkdir(frames);
  await adaptReconstruct(root, configFromEnv({}));
  for (let i = 0; i < frames.length; i++) {
    const name = `${String(i).padStart(6, "0")}.ppm`;
    const input = await fs.readFile(path.join(root, "input", name));
    const output = await fs.readFile(path.join(root, "output", name));
    assert.deepEqual(output, input);
  }
});

test("missing input directory is an error", async () => {
  const root = await fs.mkdtemp(path.join(os.tmpdir(), "adapter-test-"));
  await assert.rejects(adaptExtract(root, configFromEnv({})), /no input/);
});

test("cli exits 0 on success and nonzero on misuse", async () => {
  const root = await makeWorkdir([frameWithSquare(true)], "person. car");
  const ok = spawnSync(process.execPath, [CLI, "extract", root], { encoding: "utf-8" });
  assert.equal(ok.status, 0, ok.stderr);
  assert.match(ok.stderr, /extracted masks for 1 frames/);
  const usage = spawnSync(process.execPath, [CLI], { encoding: "utf-8" });
  assert.equal(usage.status, 2);
  const badMode = spawnSync(process.execPath, [CLI, "transmogrify", root], { encoding: "utf-8" });
  assert.equal(badMode.status, 2);
  const badDir = spawnSync(process.execPath, [CLI, "extract", path.join(root, "nope")], {
    encoding: "utf-8",
  });
  assert.equal(badDir.status, 1);
});

test("cli respects the protocol contract end to end", async () => {
  const frames = [frameWithSquare(true), frameWithSquare(true), frameWithSquare(false)];
  const root = await makeWorkdir(frames);
  const result = spawnSync(process.execPath, [CLI, "reconstruct", root], { encoding: "utf-8" });
  assert.equal(result.status, 0, result.stderr);
  const outputs = (await fs.readdir(path.join(root, "output"))).sort();
  assert.equal(outputs.length, frames.length); // output count == input count
  for (const name of outputs) {
    const raster = decodePpm(await fs.readFile(path.join(root, "output", name)));
    assert.equal(raster.width, 40); // geometry preserved
    assert.equal(raster.height, 30);
  }
});
