/**
 * PFM (portable float map) reading and writing.
 *
 * Layout: ASCII header ("PF" for 3 channels, "Pf" for 1), "width height",
 * a scale line whose sign encodes endianness (-1.0 = little-endian), then
 * float32 samples stored bottom row first. Round-trips are bit-exact.
 */

export interface FloatMap {
  width: number;
  height: number;
  channels: 1 | 3;
  /** Row-major, channel-interleaved, top row first. */
  data: Float32Array;
}

export class PfmError extends Error {}

export function makeMap(width: number, height: number, channels: 1 | 3, fill = 0): FloatMap {
  const data = new Float32Array(width * height * channels);
  if (fill !== 0) data.fill(fill);
  return { width, height, channels, data };
}

function assertFinite(map: FloatMap): void {
  for (let i = 0; i < map.data.length; i++) {
    if (!Number.isFinite(map.data[i])) {
      throw new PfmError(`non-finite sample at index ${i}`);
    }
  }
}

export function encodePfm(map: FloatMap): Buffer {
  if (map.data.length !== map.width * map.height * map.channels) {
    throw new PfmError(
      `data length ${map.data.length} != ${map.width}x${map.height}x${map.channels}`
    );
  }
  assertFinite(map);
  const tag = map.channels === 3 ? "PF" : "Pf";
  const header = Buffer.from(`${tag}\n${map.width} ${map.height}\n-1.0\n`, "ascii");
  const body = Buffer.alloc(map.data.length * 4);
  const rowFloats = map.width * map.channels;
  for (let row = 0; row < map.height; row++) {
    const srcRow = map.height - 1 - row; // file stores bottom-up
    for (let i = 0; i < rowFloats; i++) {
      body.writeFloatLE(map.data[srcRow * rowFloats + i], (row * rowFloats + i) * 4);
    }
  }
  return Buffer.concat([header, body]);
}

export function decodePfm(buf: Buffer): FloatMap {
  let offset = 0;
  const readLine = (): string => {
    const end = buf.indexOf(0x0a, offset);
    if (end < 0) throw new PfmError("truncated header");
    const line = buf.subarray(offset, end).toString("ascii");
    offset = end + 1;
    return line;
  };
  const tag = readLine().trim();
  let channels: 1 | 3;
  if (tag === "PF") channels = 3;
  else if (tag === "Pf") channels = 1;
  else throw new PfmError(`bad PFM tag ${JSON.stringify(tag)}`);
  const dims = readLine().trim().split(/\s+/);
  if (dims.length !== 2) throw new PfmError("bad dimension line");
  const width = Number(dims[0]);
  const height = Number(dims[1]);
  if (!Number.isInteger(width) || !Number.isInteger(height) || width < 1 || height < 1) {
    throw new PfmError(`bad dimensions ${dims.join("x")}`);
  }
  const scale = Number(readLine().trim());
  if (!Number.isFinite(scale) || scale === 0) throw new PfmError("bad scale line");
  const littleEndian = scale < 0;
  const expected = width * height * channels * 4;
  if (buf.length - offset < expected) {
    throw new PfmError(`truncated payload (${buf.length - offset} < ${expected} bytes)`);
  }
  const data = new Float32Array(width * height * channels);
  const rowFloats = width * channels;
  for (let row = 0; row < height; row++) {
    const dstRow = height - 1 - row;
    for (let i = 0; i < rowFloats; i++) {
      const at = offset + (row * rowFloats + i) * 4;
      data[dstRow * rowFloats + i] = littleEndian ? buf.readFloatLE(at) : buf.readFloatBE(at);
    }
  }
  const map: FloatMap = { width, height, channels, data };
  assertFinite(map);
  return map;
}

export async function readPfm(path: string): Promise<FloatMap> {
  const { readFile } = await import("node:fs/promises");
  return decodePfm(await readFile(path));
}

export async function writePfm(path: string, map: FloatMap): Promise<void> {
  const { writeFile } = await import("node:fs/promises");
  await writeFile(path, encodePfm(map));
}

/** Bilinear resize with half-pixel-centered sampling (used to bring a
 * fixed-resolution model output back to the bundle's dimensions). */
export function resizeBilinear(map: FloatMap, width: number, height: number): FloatMap {
  if (width === map.width && height === map.height) {
    return { ...map, data: map.data.slice() };
  }
  const out = makeMap(width, height, map.channels);
  const c = map.channels;
  for (let y = 0; y < height; y++) {
    const sy = ((y + 0.5) * map.height) / height - 0.5;
    const y0 = Math.min(Math.max(Math.floor(sy), 0), map.height - 1);
    const y1 = Math.min(y0 + 1, map.height - 1);
    const ty = Math.min(Math.max(sy - Math.floor(sy), 0), 1);
    for (let x = 0; x < width; x++) {
      const sx = ((x + 0.5) * map.width) / width - 0.5;
      const x0 = Math.min(Math.max(Math.floor(sx), 0), map.width - 1);
      const x1 = Math.min(x0 + 1, map.width - 1);
      const tx = Math.min(Math.max(sx - Math.floor(sx), 0), 1);
      for (let k = 0; k < c; k++) {
        const v00 = map.data[(y0 * map.width + x0) * c + k];
        const v01 = map.data[(y0 * map.width + x1) * c + k];
        const v10 = map.data[(y1 * map.width + x0) * c + k];
        const v11 = map.data[(y1 * map.width + x1) * c + k];
        const top = v00 * (1 - tx) + v01 * tx;
        const bottom = v10 * (1 - tx) + v11 * tx;
        out.data[(y * width + x) * c + k] = top * (1 - ty) + bottom * ty;
      }
    }
  }
  return out;
}
