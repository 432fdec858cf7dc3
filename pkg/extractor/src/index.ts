export { LANDMARK_COUNT, formatFrameLine, noDetectionLandmarks } from "./lmjsonl.js";
export type { Landmark } from "./lmjsonl.js";
export { extract } from "./extract.js";
export { createMediapipeEstimator } from "./mediapipe.js";
export {
  FIXTURE_SUFFIX,
  arraySource,
  fixtureEstimator,
  fixtureSource,
  mockEstimator,
  openFrameSource,
} from "./sources.js";
export { EstimatorUnavailable, UnreadableVideo } from "./types.js";
export type {
  ExtractionJob,
  ExtractionStats,
  FrameSample,
  FrameSource,
  PoseEstimator,
} from "./types.js";
