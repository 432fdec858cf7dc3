#!/usr/bin/env node
/**
 * repcount-extract <input> <output.lmjsonl> [options]
 *
 * Runs a pose estimator over the input and writes the landmark file the
 * counting engine consumes, plus a `<output>.stats.json` sidecar.
 *
 * Inputs: `.frames.json` fixtures decode anywhere; video containers need
 * the mediapipe estimator in a WASM-capable runtime.
 *
 * Exit codes: 0 ok, 2 unreadable input, 3 estimator unavailable, 1 other.
 */

import process from "node:process";
import { pathToFileURL } from "node:url";

import { extract } from "./extract.js";
import { createMediapipeEstimator } from "./mediapipe.js";
import { FIXTURE_SUFFIX, fixtureEstimator, mockEstimator, openFrameSource } from "./sources.js";
import { EstimatorUnavailable, UnreadableVideo } from "./types.js";
import type { ExtractionJob, PoseEstimator } from "./types.js";

interface CliArgs {
  job: ExtractionJob;
  estimatorKind: string;
}

function parseArgs(argv: string[]): CliArgs {
  const positional: string[] = [];
  let modelComplexity = 1;
  let minVisibility = 0.5;
  let estimatorKind = "";
  for (let i = 0; i < argv.length; i += 1) {
    const arg = argv[i];
    if (arg === "--model-complexity") {
      modelComplexity = Number(argv[++i]);
    } else if (arg === "--min-visibility") {
      minVisibility = Number(argv[++i]);
    } else if (arg === "--estimator") {
      estimatorKind = argv[++i] ?? "";
    } else if (arg === "--help" || arg === "-h") {
      printUsage();
      process.exit(0);
    } else {
      positional.push(arg);
    }
  }
  if (positional.length !== 2) {
    printUsage();
    throw new UnreadableVideo(`expected <input> and <output>, got ${positional.length} arguments`);
  }
  if (!estimatorKind) {
    estimatorKind = positional[0].endsWith(FIXTURE_SUFFIX) ? "fixture" : "mediapipe";
  }
  return {
    job: {
      videoPath: positional[0],
      outputPath: positional[1],
      modelComplexity,
      minVisibility,
    },
    estimatorKind,
  };
}

function printUsage(): void {
  process.stderr.write(
    "usage: repcount-extract <input> <output.lmjsonl> " +
      "[--model-complexity 0|1|2] [--min-visibility V] [--estimator mediapipe|fixture|mock]\n",
  );
}

async function pickEstimator(kind: string, job: ExtractionJob): Promise<PoseEstimator> {
  switch (kind) {
    case "fixture":
      return fixtureEstimator();
    case "mock":
      return mockEstimator();
    case "mediapipe":
      return createMediapipeEstimator(job);
    default:
      throw new EstimatorUnavailable(`unknown estimator ${JSON.stringify(kind)}`);
  }
}

export async function main(argv: string[]): Promise<number> {
  try {
    const { job, estimatorKind } = parseArgs(argv);
    const source = await openFrameSource(job.videoPath);
    const estimator = await pickEstimator(estimatorKind, job);
    const stats = await extract(job, source, estimator);
    process.stdout.write(JSON.stringify(stats) + "\n");
    return 0;
  } catch (err) {
    const record = {
      error: err instanceof Error ? err.constructor.name : "Error",
      message: String(err instanceof Error ? err.message : err),
    };
    process.stderr.write(JSON.stringify(record) + "\n");
    if (err instanceof UnreadableVideo) {
      return 2;
    }
    if (err instanceof EstimatorUnavailable) {
      return 3;
    }
    return 1;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined && import.meta.url === pathToFileURL(process.argv[1]).href;
if (invokedDirectly) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
