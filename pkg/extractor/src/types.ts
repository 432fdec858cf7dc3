import type { Landmark } from "./lmjsonl.js";

/** Video input could not be opened or decoded. */
export class UnreadableVideo extends Error {}

/** The pose estimator cannot run in this environment. */
export class EstimatorUnavailable extends Error {}

/** One decoded frame handed to the estimator; `data` is decoder-specific. */
export interface FrameSample {
  index: number;
  timestampMs: number;
  data: unknown;
}

export interface FrameSource {
  frames(): AsyncIterable<FrameSample>;
}

export interface PoseEstimator {
  readonly name: string;
  /** Landmarks for a frame, or null when no person is detected. */
  detect(sample: FrameSample): Promise<Landmark[] | null> | Landmark[] | null;
}

export interface ExtractionJob {
  videoPath: string;
  outputPath: string;
  /** 0 = lite, 1 = full, 2 = heavy; forwarded to the estimator. */
  modelComplexity?: number;
  /** Detection confidence floor forwarded to the estimator. */
  minVisibility?: number;
}

export interface ExtractionStats {
  framesProcessed: number;
  framesWithDetection: number;
  modelComplexity: number;
  minVisibility: number;
  estimator: string;
}
