/** Transmitter configuration and validation. */

export const TIMER_RESOLUTIONS_MS = [1, 100, 250] as const;
export type TimerResolutionMs = (typeof TIMER_RESOLUTIONS_MS)[number];

export interface WebTxConfig {
  /** Session ID as a bit string, e.g. "10110010". May be empty (no-op). */
  sessionIdBits: string;
  /** Seconds of airtime per bit (ASK, unipolar NRZ). */
  bitDurationS: number;
  /** Busy worker threads; defaults to hardware concurrency minus two. */
  workerCount?: number;
  /** Coarse-timer grid the environment allows (privacy-hardened browsers
   *  round timers to 100 or 250 ms). */
  timerResolutionMs: TimerResolutionMs;
}

export class InvalidConfigError extends Error {}

export function defaultWorkerCount(hardwareConcurrency: number): number {
  return Math.max(1, hardwareConcurrency - 2);
}

export function validateConfig(cfg: WebTxConfig): void {
  if (!/^[01]*$/.test(cfg.sessionIdBits)) {
    throw new InvalidConfigError(`session ID must be a bit string, got "${cfg.sessionIdBits}"`);
  }
  if (!Number.isFinite(cfg.bitDurationS) || cfg.bitDurationS <= 0) {
    throw new InvalidConfigError(`bit duration must be positive, got ${cfg.bitDurationS}`);
  }
  if (!TIMER_RESOLUTIONS_MS.includes(cfg.timerResolutionMs)) {
    throw new InvalidConfigError(
      `timer resolution must be one of ${TIMER_RESOLUTIONS_MS.join(", ")} ms`,
    );
  }
  if (cfg.bitDurationS * 1000 < 2 * cfg.timerResolutionMs) {
    throw new InvalidConfigError(
      `bit duration ${cfg.bitDurationS}s is below two timer ticks of ${cfg.timerResolutionMs}ms`,
    );
  }
  if (cfg.workerCount !== undefined && (!Number.isInteger(cfg.workerCount) || cfg.workerCount < 1)) {
    throw new InvalidConfigError(`worker count must be a positive integer, got ${cfg.workerCount}`);
  }
}

/** Parse the page's query string: ?bits=10110010&T=4&res=250 */
export function configFromQuery(params: URLSearchParams, hardwareConcurrency = 4): WebTxConfig {
  const res = Number(params.get("res") ?? "250");
  const cfg: WebTxConfig = {
    sessionIdBits: params.get("bits") ?? "",
    bitDurationS: Number(params.get("T") ?? "4"),
    timerResolutionMs: res as TimerResolutionMs,
    workerCount: params.has("workers")
      ? Number(params.get("workers"))
      : defaultWorkerCount(hardwareConcurrency),
  };
  validateConfig(cfg);
  return cfg;
}
