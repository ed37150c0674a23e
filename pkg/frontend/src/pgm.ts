// Minimal 16-bit binary PGM (P5) reader: the frame container the primary
// toolkit emits. Samples are big-endian, maxval 65535.

import * as fs from "node:fs";

export interface GrayImage {
  width: number;
  height: number;
  /** Row-major samples normalized to [0, 1]. */
  data: Float32Array;
}

export function readPgm16(path: string): GrayImage {
  const buf = fs.readFileSync(path);
  if (buf.length < 2 || buf.toString("ascii", 0, 2) !== "P5") {
    throw new Error(`${path}: not a binary PGM (P5) file`);
  }
  let pos = 2;
  const tokens: number[] = [];
  while (tokens.length < 3) {
    if (pos >= buf.length) throw new Error(`${path}: truncated PGM header`);
    const c = buf[pos];
    if (c === 0x20 || c === 0x09 || c === 0x0d || c === 0x0a) {
      pos += 1;
    } else if (c === 0x23) {
      // comment line
      while (pos < buf.length && buf[pos] !== 0x0a) pos += 1;
    } else {
      const start = pos;
      while (pos < buf.length && ![0x20, 0x09, 0x0d, 0x0a].includes(buf[pos])) pos += 1;
      const token = Number(buf.toString("ascii", start, pos));
      if (!Number.isInteger(token)) throw new Error(`${path}: bad PGM header token`);
      tokens.push(token);
    }
  }
  pos += 1; // the single whitespace byte after maxval
  const [width, height, maxval] = tokens;
  if (maxval <= 255) throw new Error(`${path}: unsupported bit depth (maxval ${maxval})`);
  const expected = width * height * 2;
  if (buf.length - pos !== expected) {
    throw new Error(`${path}: payload size mismatch (${buf.length - pos} != ${expected})`);
  }
  const data = new Float32Array(width * height);
  for (let i = 0; i < width * height; i++) {
    data[i] = buf.readUInt16BE(pos + 2 * i) / maxval;
  }
  return { width, height, data };
}

/** Nearest-neighbor resize to size x size (model input preprocessing). */
export function resizeNearest(img: GrayImage, size: number): Float32Array {
  const out = new Float32Array(size * size);
  for (let y = 0; y < size; y++) {
    const sy = Math.min(img.height - 1, Math.floor((y * img.height) / size));
    for (let x = 0; x < size; x++) {
      const sx = Math.min(img.width - 1, Math.floor((x * img.width) / size));
      out[y * size + x] = img.data[sy * img.width + sx];
    }
  }
  return out;
}
