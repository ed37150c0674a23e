#!/usr/bin/env node
// Reference external detector for the thermopipe adapter protocol.
//
// Reads line-delimited JSON requests on stdin and answers each with exactly
// one response line on stdout, ids echoed, order preserved. Everything else
// (diagnostics, progress) goes to stderr. A malformed request line gets an
// error-object response and the loop continues; a closed stdin is a clean
// exit 0.
//
//   ref-detector --dummy                      # canned detections, no ML runtime
//   ref-detector --model path/model.json      # TF.js graph model
//              [--input-size 128] [--classes 6]

import * as readline from "node:readline";

import { parseRequest, requestIdOf, validateBox } from "./protocol";
import {
  DEFAULT_CLASS_COUNT,
  DEFAULT_INPUT_SIZE,
  DummySession,
  ModelSession,
  Session,
} from "./session";

interface CliOptions {
  dummy: boolean;
  model: string | null;
  inputSize: number;
  classCount: number;
}

export function parseCli(argv: string[]): CliOptions {
  const opts: CliOptions = {
    dummy: false,
    model: null,
    inputSize: DEFAULT_INPUT_SIZE,
    classCount: DEFAULT_CLASS_COUNT,
  };
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    switch (arg) {
      case "--dummy":
        opts.dummy = true;
        break;
      case "--model":
        opts.model = argv[++i] ?? null;
        if (!opts.model) throw new Error("--model needs a path");
        break;
      case "--input-size": {
        const v = Number(argv[++i]);
        if (!Number.isInteger(v) || v < 1) throw new Error("--input-size needs a positive integer");
        opts.inputSize = v;
        break;
      }
      case "--classes": {
        const v = Number(argv[++i]);
        if (!Number.isInteger(v) || v < 1) throw new Error("--classes needs a positive integer");
        opts.classCount = v;
        break;
      }
      default:
        throw new Error(`unknown argument ${arg}`);
    }
  }
  if (!opts.dummy && !opts.model) {
    throw new Error("pass --dummy or --model <path>");
  }
  if (opts.dummy && opts.model) {
    throw new Error("--dummy and --model are mutually exclusive");
  }
  return opts;
}

export async function serve(
  session: Session,
  input: NodeJS.ReadableStream,
  output: NodeJS.WritableStream,
  classCount: number,
): Promise<void> {
  const rl = readline.createInterface({ input, terminal: false });
  for await (const line of rl) {
    if (line.trim().length === 0) continue;
    let response: string;
    try {
      const request = parseRequest(line);
      const detections = await session.infer(request.image, request.conf_threshold);
      for (const box of detections) validateBox(box, classCount);
      response = JSON.stringify({ id: request.id, detections });
    } catch (err) {
      response = JSON.stringify({
        id: requestIdOf(line),
        error: err instanceof Error ? err.message : String(err),
      });
    }
    output.write(response + "\n");
  }
}

async function main(): Promise<number> {
  let opts: CliOptions;
  try {
    opts = parseCli(process.argv.slice(2));
  } catch (err) {
    console.error(`usage error: ${err instanceof Error ? err.message : err}`);
    return 2;
  }
  let session: Session;
  if (opts.dummy) {
    session = new DummySession();
  } else {
    try {
      // Load before reading any request: a broken model must fail fast.
      session = await ModelSession.load(opts.model!, opts.inputSize, opts.classCount);
      console.error(`model loaded: ${opts.model} (input ${opts.inputSize})`);
    } catch (err) {
      console.error(`model load failed: ${err instanceof Error ? err.message : err}`);
      return 1;
    }
  }
  await serve(session, process.stdin, process.stdout, opts.classCount);
  return 0;
}

if (require.main === module) {
  main().then(
    (code) => process.exit(code),
    (err) => {
      console.error(`fatal: ${err instanceof Error ? err.stack : err}`);
      process.exit(1);
    },
  );
}
