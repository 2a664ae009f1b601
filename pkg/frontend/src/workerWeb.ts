/** Busy-loop worker for the browser (Web Worker API). Same protocol as
 *  the Node worker: {type:"set",on} toggles spinning, {type:"stop"} ends.
 */

import { SpinKernel, SPIN_CHUNK_MS } from "./spin.js";

// Minimal structural view of DedicatedWorkerGlobalScope (lib "webworker"
// conflicts with "DOM" in one compilation unit).
interface WorkerScope {
  onmessage: ((event: MessageEvent<{ type: string; on?: boolean }>) => void) | null;
  postMessage(msg: unknown): void;
  close(): void;
}

declare const self: WorkerScope;

const scope = self;
const kernel = new SpinKernel();
let busy = false;
let stopped = false;

scope.onmessage = (event: MessageEvent<{ type: string; on?: boolean }>) => {
  const msg = event.data;
  if (msg.type === "set") {
    busy = Boolean(msg.on);
  } else if (msg.type === "stop") {
    stopped = true;
    scope.close();
  }
};

function pump(): void {
  if (stopped) {
    return;
  }
  if (busy) {
    kernel.spinChunk(Date.now() + SPIN_CHUNK_MS);
  }
  setTimeout(pump, busy ? 0 : SPIN_CHUNK_MS);
}

pump();
scope.postMessage({ type: "ready" });
