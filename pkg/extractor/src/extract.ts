import { promises as fs } from "node:fs";
import path from "node:path";
import process from "node:process";

import { formatFrameLine, noDetectionLandmarks } from "./lmjsonl.js";
import type {
  ExtractionJob,
  ExtractionStats,
  FrameSource,
  PoseEstimator,
} from "./types.js";

const DEFAULT_MODEL_COMPLEXITY = 1;
const DEFAULT_MIN_VISIBILITY = 0.5;

async function atomicWrite(target: string, payload: string): Promise<void> {
  const tmp = `${target}.tmp.${process.pid}`;
  await fs.mkdir(path.dirname(path.resolve(target)), { recursive: true });
  await fs.writeFile(tmp, payload, "utf8");
  await fs.rename(tmp, target);
}

/**
 * Run the estimator over every decoded frame and emit one `.lmjsonl`
 * record per frame. Frames with no detection are emitted with all
 * visibilities at 0 (never dropped) so record indices stay aligned with
 * the video. A stats sidecar (`<output>.stats.json`) records the run's
 * estimator configuration alongside the counts.
 */
export async function extract(
  job: ExtractionJob,
  source: FrameSource,
  estimator: PoseEstimator,
): Promise<ExtractionStats> {
  const lines: string[] = [];
  let framesWithDetection = 0;
  for await (const sample of source.frames()) {
    const detected = await estimator.detect(sample);
    if (detected !== null) {
      framesWithDetection += 1;
    }
    const landmarks = detected ?? noDetectionLandmarks();
    lines.push(formatFrameLine(sample.index, sample.timestampMs, landmarks));
  }
  const stats: ExtractionStats = {
    framesProcessed: lines.length,
    framesWithDetection,
    modelComplexity: job.modelComplexity ?? DEFAULT_MODEL_COMPLEXITY,
    minVisibility: job.minVisibility ?? DEFAULT_MIN_VISIBILITY,
    estimator: estimator.name,
  };
  await atomicWrite(job.outputPath, lines.join("\n") + "\n");
  await atomicWrite(`${job.outputPath}.stats.json`, JSON.stringify(stats, null, 2) + "\n");
  return stats;
}
