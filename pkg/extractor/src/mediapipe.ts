import { LANDMARK_COUNT, type Landmark } from "./lmjsonl.js";
import { EstimatorUnavailable } from "./types.js";
import type { ExtractionJob, FrameSample, PoseEstimator } from "./types.js";

const MODEL_URLS: Record<number, string> = {
  0: "https://storage.googleapis.com/mediapipe-models/pose_landmarker/pose_landmarker_lite/float16/latest/pose_landmarker_lite.task",
  1: "https://storage.googleapis.com/mediapipe-models/pose_landmarker/pose_landmarker_full/float16/latest/pose_landmarker_full.task",
  2: "https://storage.googleapis.com/mediapipe-models/pose_landmarker/pose_landmarker_heavy/float16/latest/pose_landmarker_heavy.task",
};

const WASM_ROOT = "https://cdn.jsdelivr.net/npm/@mediapipe/tasks-vision@latest/wasm";

/**
 * Adapter around the mediapipe pose landmarker. Needs a WASM-capable
 * runtime with network access (browser / electron); anywhere else the
 * creation fails with EstimatorUnavailable so batch callers can fall back
 * or abort cleanly.
 */
export async function createMediapipeEstimator(job: ExtractionJob): Promise<PoseEstimator> {
  const complexity = job.modelComplexity ?? 1;
  const modelUrl = MODEL_URLS[complexity];
  if (modelUrl === undefined) {
    throw new EstimatorUnavailable(`model complexity must be 0, 1 or 2, got ${complexity}`);
  }
  let landmarker: {
    detectForVideo(frame: unknown, tsMs: number): {
      landmarks: Array<Array<{ x: number; y: number; z: number; visibility?: number }>>;
    };
  };
  try {
    const vision = await import("@mediapipe/tasks-vision");
    const fileset = await vision.FilesetResolver.forVisionTasks(WASM_ROOT);
    landmarker = await vision.PoseLandmarker.createFromOptions(fileset, {
      baseOptions: { modelAssetPath: modelUrl },
      runningMode: "VIDEO",
      numPoses: 1,
      minPoseDetectionConfidence: job.minVisibility ?? 0.5,
    });
  } catch (err) {
    throw new EstimatorUnavailable(
      `mediapipe pose landmarker could not start (${String(err)}); ` +
        "it requires a browser/WASM runtime with network access",
    );
  }
  return {
    name: `mediapipe-complexity${complexity}`,
    detect(sample: FrameSample): Landmark[] | null {
      const result = landmarker.detectForVideo(sample.data, sample.timestampMs);
      const pose = result.landmarks[0];
      if (!pose || pose.length !== LANDMARK_COUNT) {
        return null;
      }
      return pose.map((lm) => ({
        x: lm.x,
        y: lm.y,
        z: lm.z,
        visibility: lm.visibility ?? 0,
      }));
    },
  };
}
