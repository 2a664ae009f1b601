/** Page wiring: read ?bits=…&T=…&res=… from the query string, drive Web
 *  Workers through the toggle plan, and offer the completion report as a
 *  JSON download.
 */

import { configFromQuery, WebTxConfig } from "./config.js";
import { buildTogglePlan, ToggleEvent } from "./togglePlan.js";

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (!node) {
    throw new Error(`missing element #${id}`);
  }
  return node;
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

async function transmit(cfg: WebTxConfig, status: (text: string) => void): Promise<object> {
  const plan = buildTogglePlan(cfg);
  const count = cfg.workerCount ?? Math.max(1, navigator.hardwareConcurrency - 2);
  const workers = Array.from(
    { length: count },
    () => new Worker(new URL("./workerWeb.js", import.meta.url), { type: "module" }),
  );
  const actual: ToggleEvent[] = [];
  try {
    const t0 = performance.now();
    for (const event of plan.toggles) {
      await sleepUntil(t0 + event.timeMs);
      workers.forEach((w) => w.postMessage({ type: "set", on: event.on }));
      actual.push({ timeMs: performance.now() - t0, on: event.on });
      status(`t=${(event.timeMs / 1000).toFixed(2)}s workers ${event.on ? "BUSY" : "idle"}`);
    }
    await sleepUntil(t0 + plan.totalDurationMs);
  } finally {
    workers.forEach((w) => {
      w.postMessage({ type: "stop" });
      w.terminate();
    });
  }
  return { config: cfg, plan, actualToggles: actual, workerCount: count };
}

export function initPage(): void {
  const params = new URLSearchParams(window.location.search);
  let cfg: WebTxConfig;
  try {
    cfg = configFromQuery(params, navigator.hardwareConcurrency);
  } catch (err) {
    el("status").textContent = `configuration error: ${(err as Error).message}`;
    return;
  }
  el("bits").textContent = cfg.sessionIdBits || "(none)";
  el("meta").textContent =
    `T=${cfg.bitDurationS}s, tick=${cfg.timerResolutionMs}ms, ` +
    `workers=${cfg.workerCount}, airtime=${cfg.sessionIdBits.length * cfg.bitDurationS}s`;
  const button = el("start") as HTMLButtonElement;
  button.onclick = async () => {
    button.disabled = true;
    el("status").textContent = "transmitting…";
    try {
      const report = await transmit(cfg, (text) => (el("status").textContent = text));
      el("status").textContent = "done";
      const blob = new Blob([JSON.stringify(report, null, 2)], { type: "application/json" });
      const link = el("download") as HTMLAnchorElement;
      link.href = URL.createObjectURL(blob);
      link.download = "webtx-report.json";
      link.hidden = false;
    } catch (err) {
      el("status").textContent = `failed: ${(err as Error).message}`;
    } finally {
      button.disabled = false;
    }
  };
}

initPage();
