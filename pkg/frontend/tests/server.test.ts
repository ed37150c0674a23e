// End-to-end tests of the built adapter binary over real pipes: requests in,
// exactly one id-matched response line out, deterministic output, graceful
// recovery from malformed lines, fail-fast model loading.

import { spawn } from "node:child_process";
import * as path from "node:path";

import { describe, expect, it } from "vitest";

const BINARY = path.resolve(import.meta.dirname, "../dist/ref_detector.js");

interface RunResult {
  stdout: string[];
  stderr: string;
  code: number | null;
}

function runServer(args: string[], lines: string[]): Promise<RunResult> {
  return new Promise((resolve, reject) => {
    const child = spawn("node", [BINARY, ...args], { stdio: ["pipe", "pipe", "pipe"] });
    let out = "";
    let err = "";
    child.stdout.on("data", (chunk) => (out += chunk));
    child.stderr.on("data", (chunk) => (err += chunk));
    child.on("error", reject);
    child.on("close", (code) =>
      resolve({ stdout: out.split("\n").filter((l) => l.length > 0), stderr: err, code }),
    );
    for (const line of lines) child.stdin.write(line + "\n");
    child.stdin.end();
  });
}

function request(id: string, conf = 0.25): string {
  return JSON.stringify({ id, image: "/tmp/frame.pgm", conf_threshold: conf });
}

describe("ref-detector --dummy", () => {
  it("answers 50 requests with 50 id-matched responses in order", async () => {
    const ids = Array.from({ length: 50 }, (_, i) => `req-${i}`);
    const result = await runServer(["--dummy"], ids.map((id) => request(id)));
    expect(result.code).toBe(0);
    expect(result.stdout).toHaveLength(50);
    result.stdout.forEach((line, i) => {
      const response = JSON.parse(line);
      expect(response.id).toBe(ids[i]);
      expect(response.detections).toHaveLength(1);
      const box = response.detections[0];
      expect(box.confidence).toBeGreaterThanOrEqual(0);
      expect(box.confidence).toBeLessThanOrEqual(1);
    });
  });

  it("is bit-identical across runs", async () => {
    const lines = Array.from({ length: 10 }, (_, i) => request(`r${i}`));
    const a = await runServer(["--dummy"], lines);
    const b = await runServer(["--dummy"], lines);
    expect(a.stdout).toEqual(b.stdout);
  });

  it("filters the canned box at high confidence thresholds", async () => {
    const result = await runServer(["--dummy"], [request("hi", 0.95)]);
    expect(JSON.parse(result.stdout[0]).detections).toEqual([]);
  });

  it("recovers from malformed request lines", async () => {
    const result = await runServer(
      ["--dummy"],
      [request("ok-1"), "definitely not json", '{"id":"half"}', request("ok-2")],
    );
    expect(result.code).toBe(0);
    expect(result.stdout).toHaveLength(4);
    expect(JSON.parse(result.stdout[0]).id).toBe("ok-1");
    expect(JSON.parse(result.stdout[1]).error).toMatch(/JSON/);
    expect(JSON.parse(result.stdout[2])).toMatchObject({ id: "half" });
    expect(JSON.parse(result.stdout[2]).error).toMatch(/image/);
    expect(JSON.parse(result.stdout[3]).id).toBe("ok-2");
  });

  it("exits 0 when stdin closes", async () => {
    const result = await runServer(["--dummy"], []);
    expect(result.code).toBe(0);
    expect(result.stdout).toHaveLength(0);
  });
});

describe("ref-detector --model", () => {
  it("fails fast with a stderr diagnostic before reading requests", async () => {
    const result = await runServer(["--model", "/nonexistent/model.json"], [request("x")]);
    expect(result.code).toBe(1);
    expect(result.stdout).toHaveLength(0);
    expect(result.stderr).toMatch(/model load failed/);
  });
});

describe("usage errors", () => {
  it("requires a mode flag", async () => {
    const result = await runServer([], []);
    expect(result.code).toBe(2);
    expect(result.stderr).toMatch(/--dummy or --model/);
  });

  it("rejects unknown flags and conflicting modes", async () => {
    expect((await runServer(["--frobnicate"], [])).code).toBe(2);
    expect((await runServer(["--dummy", "--model", "m.json"], [])).code).toBe(2);
  });
});
