/** The busy kernel workers run while "on": repeated small dense matrix
 *  multiplications, executed in short chunks so the worker returns to its
 *  event loop often enough to observe state changes promptly.
 */

const DIM = 32;

function makeMatrix(seed: number): number[] {
  const m = new Array<number>(DIM * DIM);
  let x = seed >>> 0 || 1;
  for (let i = 0; i < m.length; i++) {
    // xorshift32 keeps the kernel self-contained and deterministic.
    x ^= x << 13;
    x ^= x >>> 17;
    x ^= x << 5;
    m[i] = (x >>> 0) / 0xffffffff;
  }
  return m;
}

export class SpinKernel {
  private a = makeMatrix(0xc0ffee);
  private b = makeMatrix(0xbadcafe);

  /** Multiply matrices until `untilMs` (Date.now clock). */
  spinChunk(untilMs: number): void {
    while (Date.now() < untilMs) {
      const out = new Array<number>(DIM * DIM).fill(0);
      for (let i = 0; i < DIM; i++) {
        for (let k = 0; k < DIM; k++) {
          const aik = this.a[i * DIM + k];
          for (let j = 0; j < DIM; j++) {
            out[i * DIM + j] += aik * this.b[k * DIM + j];
          }
        }
      }
      // Feed the product back so the loop cannot be optimized away.
      for (let i = 0; i < out.length; i++) {
        this.a[i] = out[i] % 1 || this.a[i];
      }
    }
  }
}

export const SPIN_CHUNK_MS = 5;
