import { describe, expect, it } from "vitest";

import { InvalidConfigError, TIMER_RESOLUTIONS_MS, WebTxConfig } from "../src/config.js";
import { buildTogglePlan, idealBoundariesMs, quantizeToTick } from "../src/togglePlan.js";

function cfg(bits: string, T: number, res: (typeof TIMER_RESOLUTIONS_MS)[number]): WebTxConfig {
  return { sessionIdBits: bits, bitDurationS: T, timerResolutionMs: res, workerCount: 1 };
}

function randomBits(n: number, rng: () => number): string {
  return Array.from({ length: n }, () => (rng() < 0.5 ? "0" : "1")).join("");
}

// Small deterministic PRNG so sweeps are reproducible.
function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

describe("buildTogglePlan", () => {
  it("lands exactly on the grid when T divides the tick evenly", () => {
    const plan = buildTogglePlan(cfg("1010", 4, 250));
    for (const ev of plan.toggles) {
      expect(ev.timeMs % 250).toBe(0);
    }
    expect(plan.toggles.map((e) => e.timeMs)).toEqual([0, 4000, 8000, 12000]);
    expect(plan.totalDurationMs).toBe(16000);
  });

  it("keeps every boundary within half a tick of ideal for awkward T", () => {
    const plan = buildTogglePlan(cfg("101", 1.1, 250));
    const ideal = idealBoundariesMs(cfg("101", 1.1, 250));
    for (const ev of plan.toggles) {
      const nearest = Math.min(...ideal.map((b) => Math.abs(b - ev.timeMs)));
      expect(nearest).toBeLessThanOrEqual(125);
    }
  });

  it("collapses a run of ones into a single on interval", () => {
    const plan = buildTogglePlan(cfg("1", 4, 250));
    expect(plan.toggles).toEqual([
      { timeMs: 0, on: true },
      { timeMs: 4000, on: false },
    ]);
    const run = buildTogglePlan(cfg("1111", 2, 100));
    expect(run.toggles).toEqual([
      { timeMs: 0, on: true },
      { timeMs: 8000, on: false },
    ]);
  });

  it("emits no leading toggle for leading zeros", () => {
    const plan = buildTogglePlan(cfg("0011", 1, 100));
    expect(plan.toggles[0]).toEqual({ timeMs: 2000, on: true });
  });

  it("is a no-op for an empty ID", () => {
    const plan = buildTogglePlan(cfg("", 4, 250));
    expect(plan.toggles).toEqual([]);
    expect(plan.totalDurationMs).toBe(0);
  });

  it("rejects bit durations under two ticks", () => {
    expect(() => buildTogglePlan(cfg("10", 0.3, 250))).toThrow(InvalidConfigError);
    expect(() => buildTogglePlan(cfg("10", 0.44, 250))).toThrow(InvalidConfigError);
  });

  it("rejects non-bit payloads", () => {
    expect(() => buildTogglePlan(cfg("10x1", 1, 100))).toThrow(InvalidConfigError);
  });

  it("is pure and deterministic", () => {
    const a = buildTogglePlan(cfg("100101", 1.3, 100));
    const b = buildTogglePlan(cfg("100101", 1.3, 100));
    expect(a).toEqual(b);
  });
});

describe("quantization bound sweep", () => {
  it("holds for T in [0.5, 10] s across all resolutions", () => {
    const rng = mulberry32(2024);
    for (const res of TIMER_RESOLUTIONS_MS) {
      for (let T = 0.5; T <= 10.0001; T += 0.5) {
        if (T * 1000 < 2 * res) {
          continue;
        }
        const bits = randomBits(1 + Math.floor(rng() * 24), rng);
        const plan = buildTogglePlan(cfg(bits, T, res));
        // Every toggle is a quantized ideal boundary: within half a tick.
        for (const ev of plan.toggles) {
          const ideal = Math.round(ev.timeMs / (T * 1000)) * T * 1000;
          expect(Math.abs(ev.timeMs - ideal)).toBeLessThanOrEqual(res / 2 + 1e-9);
          expect(ev.timeMs % res).toBeCloseTo(0, 9);
        }
        // Planned total duration within one tick of len * T.
        expect(Math.abs(plan.totalDurationMs - bits.length * T * 1000)).toBeLessThanOrEqual(res);
      }
    }
  });

  it("quantizeToTick rounds to the nearest grid point", () => {
    expect(quantizeToTick(1100, 250)).toBe(1000);
    expect(quantizeToTick(1130, 250)).toBe(1250);
    expect(quantizeToTick(0, 100)).toBe(0);
  });
});
