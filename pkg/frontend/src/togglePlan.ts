/** Pure planning: turn a bit string into worker on/off toggle times
 *  quantized to the environment's coarse timer grid.
 *
 *  ASK over unipolar NRZ: bit k occupies [k*T, (k+1)*T) and the workers
 *  spin through every 1 and idle through every 0.  Each ideal segment
 *  boundary is rounded to the nearest timer tick, so no boundary is more
 *  than half a tick from where it belongs; runs of equal bits merge into
 *  a single interval.
 */

import { InvalidConfigError, validateConfig, WebTxConfig } from "./config.js";

export interface ToggleEvent {
  /** Milliseconds after transmission start, always a tick multiple. */
  timeMs: number;
  /** Desired worker state from this instant on. */
  on: boolean;
}

export interface TogglePlan {
  toggles: ToggleEvent[];
  /** Quantized end of the last bit; workers are off from here. */
  totalDurationMs: number;
  tickMs: number;
}

export function quantizeToTick(idealMs: number, tickMs: number): number {
  return Math.round(idealMs / tickMs) * tickMs;
}

export function buildTogglePlan(cfg: WebTxConfig): TogglePlan {
  validateConfig(cfg);
  const tick = cfg.timerResolutionMs;
  const bits = cfg.sessionIdBits;
  if (bits.length === 0) {
    return { toggles: [], totalDurationMs: 0, tickMs: tick };
  }
  const bitMs = cfg.bitDurationS * 1000;
  const toggles: ToggleEvent[] = [];
  // Workers start idle, so leading zeros need no toggle at all.
  let state = false;
  for (let k = 0; k < bits.length; k++) {
    const on = bits[k] === "1";
    if (on !== state) {
      toggles.push({ timeMs: quantizeToTick(k * bitMs, tick), on });
      state = on;
    }
  }
  const end = quantizeToTick(bits.length * bitMs, tick);
  if (state) {
    toggles.push({ timeMs: end, on: false });
  }
  return { toggles, totalDurationMs: end, tickMs: tick };
}

/** Ideal (unquantized) boundary instants, for post-hoc error analysis. */
export function idealBoundariesMs(cfg: WebTxConfig): number[] {
  if (!/^[01]*$/.test(cfg.sessionIdBits)) {
    throw new InvalidConfigError("session ID must be a bit string");
  }
  const bitMs = cfg.bitDurationS * 1000;
  return Array.from({ length: cfg.sessionIdBits.length + 1 }, (_, k) => k * bitMs);
}
