// Contract tests against event streams recorded from the real service.
// The UI computes no physics: these check that folding server events
// reproduces exactly what the service reported.

import { readFileSync } from "node:fs";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { initialView, reduce, reduceAll } from "../src/reducer";
import { isOnStep } from "../src/knobs";
import type { ServerEvent } from "../src/types";

interface Fixture {
  scene: string;
  seed: number;
  events: ServerEvent[];
  final_counts: Record<string, number>;
  final_shots: number;
  scene_doc: { components: { id: string; angle_step_deg: number }[] };
}

function fixture(name: string): Fixture {
  const path = join(__dirname, "fixtures", `${name}.json`);
  return JSON.parse(readFileSync(path, "utf-8")) as Fixture;
}

describe("knob invariant", () => {
  it("every knob value in recorded sessions is a multiple of the 5-degree step", () => {
    for (const name of [
      "single_qubit_fire",
      "cnot_heralding",
      "projective_counts",
      "heralded_batch",
    ]) {
      const fix = fixture(name);
      let state = initialView();
      for (const ev of fix.events) {
        state = reduce(state, ev);
        for (const value of Object.values(state.knobs)) {
          expect(isOnStep(value, 5)).toBe(true);
        }
      }
    }
  });

  it("the interactive edit of 23 degrees arrives snapped to 25", () => {
    const fix = fixture("single_qubit_fire");
    const state = reduceAll(fix.events);
    expect(state.knobs["hwp"]).toBe(25);
  });
});

describe("counter invariant", () => {
  it.each(["cnot_heralding", "projective_counts", "heralded_batch"])(
    "folded detection events equal the service counts (%s)",
    (name) => {
      const fix = fixture(name);
      const state = reduceAll(fix.events);
      const reported = Object.fromEntries(
        Object.entries(fix.final_counts).filter(([, v]) => v > 0),
      );
      expect(state.counters).toEqual(reported);
    },
  );
});

describe("single-qubit fire", () => {
  it("renders exactly three Bloch updates for one shot", () => {
    const fix = fixture("single_qubit_fire");
    const state = reduceAll(fix.events);
    expect(state.blochUpdates).toHaveLength(3);
    expect(state.emissions).toBe(1);
    for (const update of state.blochUpdates) {
      const [x, y, z] = update.bloch;
      expect(Math.abs(x * x + y * y + z * z - 1)).toBeLessThan(1e-9);
    }
  });

  it("updates come in plate traversal order", () => {
    const fix = fixture("single_qubit_fire");
    const state = reduceAll(fix.events);
    expect(state.blochUpdates.map((u) => u.component)).toEqual([
      "qwp1",
      "hwp",
      "qwp2",
    ]);
  });
});

describe("herald banner", () => {
  it("a 1AO1 event raises the banner with its pattern", () => {
    const fix = fixture("cnot_heralding");
    let state = initialView();
    let bannerSeenAtOk = false;
    for (const ev of fix.events) {
      state = reduce(state, ev);
      if (ev.kind === "herald" && ev.ok) {
        expect(state.heraldBanner).not.toBeNull();
        expect(state.heraldBanner!.pattern).toBe(ev.pattern);
        bannerSeenAtOk = true;
      }
    }
    expect(bannerSeenAtOk).toBe(true);
    expect(state.heraldOk).toBeGreaterThan(0);
    expect(state.heraldTotal).toBe(24);
  });

  it("failed shots alone never raise the banner", () => {
    const fix = fixture("cnot_heralding");
    const failures = fix.events.filter((e) => e.kind !== "herald" || !e.ok);
    const state = reduceAll(failures);
    expect(state.heraldBanner).toBeNull();
  });
});

describe("reducer discipline", () => {
  it("is pure: the input state is never mutated", () => {
    const fix = fixture("projective_counts");
    const before = initialView();
    const frozen = JSON.stringify(before);
    reduce(before, fix.events[0]);
    expect(JSON.stringify(before)).toBe(frozen);
  });

  it("is replay-deterministic: same stream, same final state", () => {
    const fix = fixture("cnot_heralding");
    const a = reduceAll(fix.events);
    const b = reduceAll(fix.events);
    expect(JSON.stringify(a)).toBe(JSON.stringify(b));
  });

  it("tracks the last sequence number for stream resumption", () => {
    const fix = fixture("heralded_batch");
    const state = reduceAll(fix.events);
    expect(state.lastSeq).toBe(fix.events[fix.events.length - 1].seq);
  });

  it("batch events fold into counters like detections", () => {
    const fix = fixture("heralded_batch");
    const state = reduceAll(fix.events);
    const detections = fix.events
      .filter((e) => e.kind === "detection")
      .reduce((n, e) => n + (e.clicks ?? 0), 0);
    const batched = fix.events
      .filter((e) => e.kind === "batch")
      .reduce((n, e) => n + Object.values(e.per_detector ?? {}).reduce((a, b) => a + b, 0), 0);
    expect(state.counters["herald_apd"]).toBe(detections + batched);
    expect(state.counters["herald_apd"]).toBe(fix.final_counts["herald_apd"]);
  });
});
