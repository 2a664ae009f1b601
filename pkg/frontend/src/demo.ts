/** Headless demo: transmit a short ID on this machine's CPU and print the
 *  completion report.  Pair it with the Python receiver for a loopback:
 *
 *      node dist/demo.js 10110010 4 250 &
 *      loadlink recv --expect 8 --bit-duration 4 --metric freq --rate 1
 */

import { runTransmission, worstToggleDeviationMs } from "./runner.js";
import { TimerResolutionMs } from "./config.js";

const bits = process.argv[2] ?? "10110010";
const bitDurationS = Number(process.argv[3] ?? "1");
const res = Number(process.argv[4] ?? "250") as TimerResolutionMs;

const report = await runTransmission({
  sessionIdBits: bits,
  bitDurationS,
  timerResolutionMs: res,
});
console.log(JSON.stringify(report, null, 2));
console.error(`worst toggle deviation: ${worstToggleDeviationMs(report).toFixed(1)} ms`);
