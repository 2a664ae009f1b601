/** Busy-loop worker for Node (worker_threads): spins while "on", idles
 *  while "off", and exits on "stop".  Spinning happens in short chunks
 *  interleaved with the event loop so control messages apply quickly.
 */

import { parentPort } from "node:worker_threads";

import { SpinKernel, SPIN_CHUNK_MS } from "./spin.js";

if (!parentPort) {
  throw new Error("workerNode must run inside a worker thread");
}
const port = parentPort;

const kernel = new SpinKernel();
let busy = false;
let stopped = false;

port.on("message", (msg: { type: string; on?: boolean }) => {
  if (msg.type === "set") {
    busy = Boolean(msg.on);
  } else if (msg.type === "stop") {
    stopped = true;
    port.close();
  }
});

function pump(): void {
  if (stopped) {
    return;
  }
  if (busy) {
    kernel.spinChunk(Date.now() + SPIN_CHUNK_MS);
    setImmediate(pump);
  } else {
    setTimeout(pump, SPIN_CHUNK_MS);
  }
}

pump();
port.postMessage({ type: "ready" });
