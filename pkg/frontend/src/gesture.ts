// Turning an arrow drawn on the floor plan into a gesture cue.
//
// The arrow's tail is where the pointer stands (shoulder height); its tip is
// what they point at (typical furniture-top height). The emitted direction
// is a unit vector within 1e-6, matching the server's cue invariant.

import type { CueJson } from "./types.js";

export const SHOULDER_HEIGHT_M = 1.4;
export const POINTED_HEIGHT_M = 0.8;

export interface GestureArrow {
  fromX: number;
  fromY: number;
  toX: number;
  toY: number;
}

export function arrowToGesture(arrow: GestureArrow,
                               utterance: string | null = null): CueJson | null {
  const dx = arrow.toX - arrow.fromX;
  const dy = arrow.toY - arrow.fromY;
  const dz = POINTED_HEIGHT_M - SHOULDER_HEIGHT_M;
  const norm = Math.sqrt(dx * dx + dy * dy + dz * dz);
  if (Math.hypot(dx, dy) < 1e-9) {
    return null; // zero-length drag points at nothing
  }
  return {
    type: "gesture",
    origin: [arrow.fromX, arrow.fromY, SHOULDER_HEIGHT_M],
    direction: [dx / norm, dy / norm, dz / norm],
    utterance,
  };
}

export function directionNorm(direction: number[]): number {
  return Math.sqrt(direction.reduce((acc, c) => acc + c * c, 0));
}
