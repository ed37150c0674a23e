import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

import { afterAll, describe, expect, it } from "vitest";

import { readPgm16, resizeNearest } from "../src/pgm";

const tmpdir = fs.mkdtempSync(path.join(os.tmpdir(), "pgm-test-"));
afterAll(() => fs.rmSync(tmpdir, { recursive: true, force: true }));

function writePgm(name: string, width: number, height: number, samples: number[]): string {
  const header = Buffer.from(`P5\n${width} ${height}\n65535\n`, "ascii");
  const payload = Buffer.alloc(samples.length * 2);
  samples.forEach((v, i) => payload.writeUInt16BE(v, 2 * i));
  const file = path.join(tmpdir, name);
  fs.writeFileSync(file, Buffer.concat([header, payload]));
  return file;
}

describe("readPgm16", () => {
  it("reads big-endian 16-bit samples normalized to [0, 1]", () => {
    const file = writePgm("a.pgm", 2, 2, [0, 65535, 32768, 1]);
    const img = readPgm16(file);
    expect(img.width).toBe(2);
    expect(img.height).toBe(2);
    expect(img.data[0]).toBe(0);
    expect(img.data[1]).toBe(1);
    expect(img.data[2]).toBeCloseTo(0.5, 4);
  });

  it("rejects 8-bit files", () => {
    const file = path.join(tmpdir, "b.pgm");
    fs.writeFileSync(file, Buffer.from("P5\n1 1\n255\n\x00", "ascii"));
    expect(() => readPgm16(file)).toThrow(/bit depth/);
  });

  it("rejects payload size mismatches", () => {
    const file = path.join(tmpdir, "c.pgm");
    fs.writeFileSync(file, Buffer.from("P5\n4 4\n65535\n\x00\x00", "ascii"));
    expect(() => readPgm16(file)).toThrow(/size mismatch/);
  });
});

describe("resizeNearest", () => {
  it("upsamples by pixel replication", () => {
    const file = writePgm("d.pgm", 2, 2, [0, 65535, 65535, 0]);
    const out = resizeNearest(readPgm16(file), 4);
    expect(out[0]).toBe(0);
    expect(out[3]).toBe(1);
    expect(out.length).toBe(16);
  });
});
