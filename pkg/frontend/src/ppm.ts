/**
 * Binary PPM (P6) / PGM (P5) codec, bit-exact with the pipeline's frame I/O.
 *
 * Header: "P6\n<w> <h>\n255\n" followed by width*height*channels bytes in
 * raster order. Comments ('#' to end of line) are tolerated when reading and
 * never written.
 */

export interface Raster {
  width: number;
  height: number;
  channels: 1 | 3;
  /** length = width * height * channels, row-major, channel-interleaved */
  pixels: Uint8Array;
}

const WHITESPACE = new Set([0x20, 0x09, 0x0a, 0x0d, 0x0b, 0x0c]);

function readTokens(data: Buffer, count: number, offset: number): { tokens: number[]; next: number } {
  const tokens: number[] = [];
  let i = offset;
  while (tokens.length < count) {
    while (i < data.length && WHITESPACE.has(data[i])) i++;
    if (i < data.length && data[i] === 0x23 /* '#' */) {
      while (i < data.length && data[i] !== 0x0a) i++;
      continue;
    }
    const start = i;
    while (i < data.length && !WHITESPACE.has(data[i]) && data[i] !== 0x23) i++;
    if (start === i) throw new Error("malformed netpbm header: ran out of tokens");
    const token = Number.parseInt(data.subarray(start, i).toString("ascii"), 10);
    if (!Number.isFinite(token)) {
      throw new Error(`malformed netpbm header token at byte ${start}`);
    }
    tokens.push(token);
  }
  if (i >= data.length) throw new Error("malformed netpbm header: missing payload");
  return { tokens, next: i + 1 }; // single whitespace byte ends the header
}

export function decodePpm(data: Buffer): Raster {
  const magic = data.subarray(0, 2).toString("ascii");
  let channels: 1 | 3;
  if (magic === "P6") channels = 3;
  else if (magic === "P5") channels = 1;
  else throw new Error(`not a binary PPM/PGM file (magic ${JSON.stringify(magic)})`);
  const { tokens, next } = readTokens(data, 3, 2);
  const [width, height, maxval] = tokens;
  if (width < 1 || height < 1) throw new Error(`invalid dimensions ${width}x${height}`);
  if (maxval !== 255) throw new Error(`unsupported maxval ${maxval}`);
  const expected = width * height * channels;
  const payload = data.subarray(next);
  if (payload.length < expected) {
    throw new Error(`payload has ${payload.length} bytes, header promises ${expected}`);
  }
  if (payload.length > expected) {
    throw new Error(`${payload.length - expected} trailing bytes after payload`);
  }
  return { width, height, channels, pixels: new Uint8Array(payload) };
}

export function encodePpm(raster: Raster): Buffer {
  const { width, height, channels, pixels } = raster;
  if (pixels.length !== width * height * channels) {
    throw new Error(
      `pixel buffer has ${pixels.length} bytes, geometry needs ${width * height * channels}`,
    );
  }
  const magic = channels === 3 ? "P6" : "P5";
  const header = Buffer.from(`${magic}\n${width} ${height}\n255\n`, "ascii");
  return Buffer.concat([header, Buffer.from(pixels)]);
}

/** Luminance as the plain channel mean, matching the pipeline's luma. */
export function luminance(raster: Raster): Float64Array {
  const { width, height, channels, pixels } = raster;
  const out = new Float64Array(width * height);
  if (channels === 1) {
    for (let i = 0; i < out.length; i++) out[i] = pixels[i];
    return out;
  }
  for (let i = 0; i < out.length; i++) {
    const base = i * 3;
    out[i] = (pixels[base] + pixels[base + 1] + pixels[base + 2]) / 3;
  }
  return out;
}

export function binaryMaskRaster(width: number, height: number, mask: Uint8Array): Raster {
  const pixels = new Uint8Array(width * height * 3);
  for (let i = 0; i < mask.length; i++) {
    if (mask[i]) {
      pixels[i * 3] = 255;
      pixels[i * 3 + 1] = 255;
      pixels[i * 3 + 2] = 255;
    }
  }
  return { width, height, channels: 3, pixels };
}
