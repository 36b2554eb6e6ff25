/** Seeded deterministic fixture generation for the binding tests. */

import type { ArrayView, FramePair } from "../src/index.js";

/** mulberry32: tiny deterministic PRNG, good enough for fixtures. */
export function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a |= 0;
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

/** Standard normal via Box-Muller. */
export function gaussian(rand: () => number): () => number {
  return () => {
    const u = Math.max(rand(), 1e-12);
    const v = rand();
    return Math.sqrt(-2.0 * Math.log(u)) * Math.cos(2.0 * Math.PI * v);
  };
}

export function randomView(rows: number, cols: number, seed: number): ArrayView {
  const g = gaussian(mulberry32(seed));
  const data = new Float32Array(rows * cols);
  for (let i = 0; i < data.length; i++) {
    data[i] = g();
  }
  return { data, rows, cols };
}

export function randomFrame(n: number, d: number, seed: number): FramePair {
  const features = randomView(n, d, seed);
  const cls = randomView(1, d, seed + 7919).data;
  return [features, cls];
}

export interface Fixture {
  history: FramePair[];
  current: FramePair;
  n: number;
  d: number;
  opts: { budget?: number; ratio?: number; alpha?: number; strategy?: string };
}

const STRATEGY_CYCLE = ["amm", "amm", "topk", "maxmin", "diversity_only", "semantics_only"] as const;

export function makeFixture(i: number): Fixture {
  const rand = mulberry32(1000 + i);
  const n = 6 + Math.floor(rand() * 34);
  const d = 4 + Math.floor(rand() * 8);
  const historyLen = i % 10 === 0 ? 0 : 1 + Math.floor(rand() * 3);
  const history: FramePair[] = [];
  for (let t = 0; t < historyLen; t++) {
    history.push(randomFrame(n, d, i * 100 + t));
  }
  const current = randomFrame(n, d, i * 100 + 99);
  const useBudget = i % 3 !== 0;
  const opts = {
    ...(useBudget
      ? { budget: 1 + Math.floor(rand() * n) }
      : { ratio: 0.5 + rand() * 0.45 }),
    alpha: 0.5 + rand() * 0.5,
    strategy: STRATEGY_CYCLE[i % STRATEGY_CYCLE.length]!,
  };
  return { history, current, n, d, opts };
}
