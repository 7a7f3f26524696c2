// The view model must derive purely from (snapshot, ordered events): folding
// the recorded stream of a real run twice yields identical panels, and the
// panels show what the live-loop check expects to see.

import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import {
  applyEvent,
  applyEvents,
  applySnapshot,
  initialViewModel,
} from "../src/state.js";
import type { RunEvent, StateSnapshot } from "../src/types.js";

const here = dirname(fileURLToPath(import.meta.url));

function fixtureEvents(): RunEvent[] {
  const raw = readFileSync(join(here, "../fixtures/verbal_apple_events.jsonl"),
                           "utf-8");
  return raw.split("\n").filter(Boolean).map((line) => JSON.parse(line));
}

function fixtureSnapshot(): StateSnapshot {
  return JSON.parse(
    readFileSync(join(here, "../fixtures/verbal_apple_state.json"), "utf-8"),
  );
}

describe("view model derivation from a recorded run", () => {
  it("replays to identical panels (pure derivation)", () => {
    const events = fixtureEvents();
    const a = applyEvents(applySnapshot(initialViewModel(), fixtureSnapshot()),
                          events);
    const b = applyEvents(applySnapshot(initialViewModel(), fixtureSnapshot()),
                          events);
    expect(a.planRevisions).toEqual(b.planRevisions);
    expect([...a.beliefs.entries()]).toEqual([...b.beliefs.entries()]);
    expect(a.cues).toEqual(b.cues);
    expect(a.robotTrail).toEqual(b.robotTrail);
    expect(a.taskStatus).toBe(b.taskStatus);
  });

  it("never regresses the cursor and never mutates its input", () => {
    const events = fixtureEvents();
    let vm = applySnapshot(initialViewModel(), fixtureSnapshot());
    let lastCursor = vm.cursor;
    for (const event of events) {
      const before = JSON.stringify(vm.planRevisions);
      const next = applyEvent(vm, event);
      expect(next.cursor).toBeGreaterThan(lastCursor - 1);
      expect(next.cursor).toBe(vm.cursor + 1);
      expect(JSON.stringify(vm.planRevisions)).toBe(before);
      lastCursor = next.cursor;
      vm = next;
    }
    expect(vm.cursor).toBe(events.length);
  });

  it("shows the live-loop check: rev 1 targets the cleaning table", () => {
    const vm = applyEvents(
      applySnapshot(initialViewModel(), fixtureSnapshot()), fixtureEvents());
    const revs = vm.planRevisions.map((r) => [r.revision, r.firstTargetLabel]);
    expect(revs[0]).toEqual([0, "shelf"]);
    expect(revs[1]).toEqual([1, "cleaning table"]);
    expect(vm.taskStatus).toBe("succeeded");
  });

  it("tracks the believed placement from graph deltas", () => {
    const vm = applyEvents(
      applySnapshot(initialViewModel(), fixtureSnapshot()), fixtureEvents());
    const apple = vm.beliefs.get("apple");
    expect(apple).toBeDefined();
    // the pick happened last, so the freshest placement is held_by the robot
    expect(apple!.relation).toBe("held_by");
    expect(apple!.landmark).toBe("robot");
    // the verbal cue reached the panel
    expect(vm.cues.some((c) => c.kind === "verbal"
      && c.detail.includes("cleaning table"))).toBe(true);
  });

  it("walks the robot to the cleaning table and back", () => {
    const vm = applyEvents(
      applySnapshot(initialViewModel(), fixtureSnapshot()), fixtureEvents());
    expect(vm.robotTrail.length).toBeGreaterThan(2);
    const nearTable = vm.robotTrail.some(
      ([x, y]) => Math.hypot(x - 9.1, y - 2.6) < 0.1);
    expect(nearTable).toBe(true);
  });

  it("derives beliefs from a snapshot's active edges", () => {
    const snapshot = fixtureSnapshot();
    const vm = applySnapshot(initialViewModel(), snapshot);
    // at tick 0 nothing has been asserted about any object yet
    expect(vm.beliefs.size).toBe(0);
    expect(vm.tick).toBe(0);
    expect(vm.taskObject).toBe("apple");
  });
});
