/** Headless transmission runner (Node worker_threads backend).
 *
 *  Walks the toggle plan on the wall clock, posts on/off to every busy
 *  worker, and records the actual toggle instants so tests and demos can
 *  compare them with the plan.
 */

import { existsSync } from "node:fs";
import { fileURLToPath } from "node:url";
import { Worker } from "node:worker_threads";

import { defaultWorkerCount, validateConfig, WebTxConfig } from "./config.js";
import { buildTogglePlan, ToggleEvent, TogglePlan } from "./togglePlan.js";

export interface CompletionReport {
  config: WebTxConfig;
  plan: TogglePlan;
  /** What actually happened, in milliseconds after transmission start. */
  actualToggles: ToggleEvent[];
  startedAtMs: number;
  finishedAtMs: number;
  workerCount: number;
}

function workerScriptPath(): string {
  const candidates = [
    new URL("./workerNode.js", import.meta.url),
    new URL("../dist/workerNode.js", import.meta.url),
  ];
  for (const url of candidates) {
    const path = fileURLToPath(url);
    if (existsSync(path)) {
      return path;
    }
  }
  throw new Error("workerNode.js not found; run the build first");
}

function sleepUntil(targetMs: number): Promise<void> {
  return new Promise((resolve) => {
    const tick = () => {
      const remaining = targetMs - performance.now();
      if (remaining <= 0) {
        resolve();
      } else {
        setTimeout(tick, Math.min(remaining, 20));
      }
    };
    tick();
  });
}

async function spawnWorkers(count: number): Promise<Worker[]> {
  const path = workerScriptPath();
  const workers = Array.from({ length: count }, () => new Worker(path));
  await Promise.all(
    workers.map(
      (w) =>
        new Promise<void>((resolve, reject) => {
          w.once("message", () => resolve());
          w.once("error", reject);
        }),
    ),
  );
  return workers;
}

export async function runTransmission(cfg: WebTxConfig): Promise<CompletionReport> {
  validateConfig(cfg);
  const plan = buildTogglePlan(cfg);
  const startedAtMs = performance.now();
  if (plan.toggles.length === 0) {
    return {
      config: cfg,
      plan,
      actualToggles: [],
      startedAtMs,
      finishedAtMs: startedAtMs,
      workerCount: 0,
    };
  }
  const count =
    cfg.workerCount ?? defaultWorkerCount((await import("node:os")).availableParallelism());
  const workers = await spawnWorkers(count);
  const actual: ToggleEvent[] = [];
  try {
    const t0 = performance.now();
    for (const event of plan.toggles) {
      await sleepUntil(t0 + event.timeMs);
      for (const w of workers) {
        w.postMessage({ type: "set", on: event.on });
      }
      actual.push({ timeMs: performance.now() - t0, on: event.on });
    }
    await sleepUntil(t0 + plan.totalDurationMs);
  } finally {
    for (const w of workers) {
      w.postMessage({ type: "stop" });
    }
    await Promise.allSettled(workers.map((w) => w.terminate()));
  }
  return {
    config: cfg,
    plan,
    actualToggles: actual,
    startedAtMs,
    finishedAtMs: performance.now(),
    workerCount: count,
  };
}

/** Largest |actual - planned| across toggle instants, in milliseconds. */
export function worstToggleDeviationMs(report: CompletionReport): number {
  let worst = 0;
  for (let i = 0; i < report.actualToggles.length; i++) {
    worst = Math.max(worst, Math.abs(report.actualToggles[i].timeMs - report.plan.toggles[i].timeMs));
  }
  return worst;
}
