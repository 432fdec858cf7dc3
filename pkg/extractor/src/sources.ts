import { promises as fs } from "node:fs";

import { LANDMARK_COUNT, type Landmark } from "./lmjsonl.js";
import { UnreadableVideo } from "./types.js";
import type { FrameSample, FrameSource, PoseEstimator } from "./types.js";

export const FIXTURE_SUFFIX = ".frames.json";

/** Rows are per-frame landmark sets; null marks a frame with no person. */
export type FixtureRows = ReadonlyArray<Landmark[] | null>;

export function arraySource(rows: FixtureRows, fps = 30): FrameSource {
  return {
    async *frames(): AsyncIterable<FrameSample> {
      for (let i = 0; i < rows.length; i += 1) {
        yield { index: i, timestampMs: (i * 1000) / fps, data: rows[i] };
      }
    },
  };
}

/** Estimator for fixture sources: the decoded "frame" already is the result. */
export function fixtureEstimator(): PoseEstimator {
  return {
    name: "fixture",
    detect(sample: FrameSample): Landmark[] | null {
      return sample.data as Landmark[] | null;
    },
  };
}

interface FixtureFile {
  fps?: number;
  frames: Array<Array<[number, number, number, number]> | null>;
}

/**
 * Load a `.frames.json` fixture:
 * `{"fps": 30, "frames": [[[x,y,z,vis] x 33] | null, ...]}`.
 */
export async function fixtureSource(filePath: string): Promise<FrameSource> {
  let raw: string;
  try {
    raw = await fs.readFile(filePath, "utf8");
  } catch (err) {
    throw new UnreadableVideo(`cannot read ${filePath}: ${String(err)}`);
  }
  let parsed: FixtureFile;
  try {
    parsed = JSON.parse(raw) as FixtureFile;
  } catch (err) {
    throw new UnreadableVideo(`${filePath} is not valid JSON: ${String(err)}`);
  }
  if (!Array.isArray(parsed.frames)) {
    throw new UnreadableVideo(`${filePath} has no "frames" array`);
  }
  const rows: FixtureRows = parsed.frames.map((frame, i) => {
    if (frame === null) {
      return null;
    }
    if (!Array.isArray(frame) || frame.length !== LANDMARK_COUNT) {
      throw new UnreadableVideo(`${filePath}: frame ${i} does not hold 33 landmarks`);
    }
    return frame.map(([x, y, z, visibility]) => ({ x, y, z, visibility }));
  });
  return arraySource(rows, parsed.fps ?? 30);
}

/**
 * Open a frame source for an input path. Pure Node can decode only the
 * fixture format; video containers need a browser (or ffmpeg) runtime.
 */
export async function openFrameSource(inputPath: string): Promise<FrameSource> {
  if (inputPath.endsWith(FIXTURE_SUFFIX)) {
    return fixtureSource(inputPath);
  }
  try {
    await fs.access(inputPath);
  } catch {
    throw new UnreadableVideo(`input path does not exist: ${inputPath}`);
  }
  throw new UnreadableVideo(
    `cannot decode ${inputPath} in this runtime; provide a ${FIXTURE_SUFFIX} fixture ` +
      "or run the mediapipe estimator in a browser",
  );
}

/**
 * Deterministic synthetic estimator for tests: landmarks wobble with the
 * frame index; `missEvery` makes every n-th frame a no-detection frame.
 */
export function mockEstimator(options: { missEvery?: number } = {}): PoseEstimator {
  const missEvery = options.missEvery ?? 0;
  return {
    name: "mock",
    detect(sample: FrameSample): Landmark[] | null {
      if (missEvery > 0 && sample.index % missEvery === missEvery - 1) {
        return null;
      }
      const phase = sample.index / 10;
      return Array.from({ length: LANDMARK_COUNT }, (_, i) => ({
        x: 0.5 + 0.3 * Math.sin(phase + i),
        y: 0.5 + 0.3 * Math.cos(phase + i * 0.5),
        z: 0.1 * Math.sin(phase * 0.7 + i),
        visibility: 0.5 + 0.5 * Math.abs(Math.sin(i + 1)),
      }));
    },
  };
}
