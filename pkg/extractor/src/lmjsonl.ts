/**
 * Canonical `.lmjsonl` line formatting.
 *
 * One frame per line: {"frame": <int>, "ts_ms": <number|-1>, "lm": [[x,y,z,vis] x 33]}
 * Field order is fixed and coordinates are written with 6 decimals so the
 * counting engine's parser accepts every emitted file byte-for-byte.
 */

export const LANDMARK_COUNT = 33;

export interface Landmark {
  x: number;
  y: number;
  z: number;
  visibility: number;
}

/** The all-zero landmark set emitted for frames with no detection. */
export function noDetectionLandmarks(): Landmark[] {
  return Array.from({ length: LANDMARK_COUNT }, () => ({
    x: 0,
    y: 0,
    z: 0,
    visibility: 0,
  }));
}

function fixed6(value: number): string {
  if (!Number.isFinite(value)) {
    throw new Error(`coordinate must be finite, got ${value}`);
  }
  return value.toFixed(6);
}

function formatTimestamp(tsMs: number): string {
  if (!Number.isFinite(tsMs)) {
    throw new Error(`ts_ms must be finite, got ${tsMs}`);
  }
  return Number.isInteger(tsMs) ? String(tsMs) : String(tsMs);
}

export function formatFrameLine(
  frameIndex: number,
  tsMs: number,
  landmarks: readonly Landmark[],
): string {
  if (!Number.isInteger(frameIndex) || frameIndex < 0) {
    throw new Error(`frame index must be a non-negative integer, got ${frameIndex}`);
  }
  if (landmarks.length !== LANDMARK_COUNT) {
    throw new Error(`expected ${LANDMARK_COUNT} landmarks, got ${landmarks.length}`);
  }
  const points = landmarks
    .map((lm) => {
      if (lm.visibility < 0 || lm.visibility > 1) {
        throw new Error(`visibility ${lm.visibility} outside [0, 1]`);
      }
      return `[${fixed6(lm.x)},${fixed6(lm.y)},${fixed6(lm.z)},${fixed6(lm.visibility)}]`;
    })
    .join(",");
  return `{"frame": ${frameIndex}, "ts_ms": ${formatTimestamp(tsMs)}, "lm": [${points}]}`;
}
