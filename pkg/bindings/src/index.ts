/**
 * Bindings for the stprune token-pruning engine.
 *
 * Callers hand in contiguous Float32Arrays with explicit shapes; the binding
 * serializes them to the engine's binary dump format, drives the CLI, parses
 * the selection file, and returns plain arrays.  Caller memory is only read,
 * never retained or mutated, and every shape/domain violation is rejected at
 * this boundary before the engine is invoked.
 */

import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { encodeDump, type DumpFrame } from "./dump.js";
import { DomainError, ShapeError } from "./errors.js";
import { runEngine } from "./runner.js";

export {
  DimensionMismatchError,
  DomainError,
  EngineError,
  FlagConflictError,
  MalformedDumpError,
  ShapeError,
  StpruneError,
} from "./errors.js";

/** A read-only view of caller-owned row-major float32 data. */
export interface ArrayView {
  data: Float32Array;
  rows: number;
  cols: number;
}

export type Strategy = "amm" | "diversity_only" | "semantics_only" | "topk" | "maxmin";

export interface PruneOptions {
  /** Retained tokens per frame; exactly one of budget/ratio must be set. */
  budget?: number;
  /** Fraction of tokens to drop, in (0, 1). */
  ratio?: number;
  /** History re-weighting balance, in [0.5, 1]. Default 0.5. */
  alpha?: number;
  strategy?: Strategy;
  /** Pool the history budget across frames instead of per frame. */
  pooledHistory?: boolean;
}

export interface Selection {
  indices: number[];
  stepScores: number[];
  budget: number;
  strategy: string;
}

export interface EpisodeStats {
  originalTokens: number;
  retainedTokens: number;
  flopRatio: number;
  flopAbsolute: number;
}

export interface EpisodeResult {
  currentSelection: Selection;
  memory: Selection[];
  stats: EpisodeStats;
}

export type FramePair = [features: ArrayView, cls: ArrayView | Float32Array];

const STRATEGIES = new Set(["amm", "diversity_only", "semantics_only", "topk", "maxmin"]);

function checkView(view: ArrayView, what: string): void {
  if (!(view.data instanceof Float32Array)) {
    throw new ShapeError(`${what}: data must be a Float32Array`);
  }
  if (!Number.isInteger(view.rows) || !Number.isInteger(view.cols) || view.rows < 1 || view.cols < 1) {
    throw new ShapeError(`${what}: shape (${view.rows}, ${view.cols}) is not a positive integer pair`);
  }
  if (view.data.length !== view.rows * view.cols) {
    throw new ShapeError(
      `${what}: buffer holds ${view.data.length} values, shape (${view.rows}, ${view.cols}) needs ${view.rows * view.cols}`,
    );
  }
}

function asClsVector(cls: ArrayView | Float32Array, cols: number, what: string): Float32Array {
  if (cls instanceof Float32Array) {
    if (cls.length !== cols) {
      throw new ShapeError(`${what}: cls length ${cls.length} != feature width ${cols}`);
    }
    return cls;
  }
  checkView(cls, what);
  if (cls.rows !== 1 || cls.cols !== cols) {
    throw new ShapeError(`${what}: cls shape (${cls.rows}, ${cls.cols}) != (1, ${cols})`);
  }
  return cls.data;
}

function checkOptions(opts: PruneOptions): void {
  const hasBudget = opts.budget !== undefined;
  const hasRatio = opts.ratio !== undefined;
  if (hasBudget === hasRatio) {
    throw new DomainError("exactly one of budget / ratio must be set");
  }
  if (hasBudget && (!Number.isInteger(opts.budget) || opts.budget! < 1)) {
    throw new DomainError(`budget must be a positive integer, got ${opts.budget}`);
  }
  if (hasRatio && !(opts.ratio! > 0 && opts.ratio! < 1)) {
    throw new DomainError(`ratio must lie in (0, 1), got ${opts.ratio}`);
  }
  if (opts.alpha !== undefined && !(opts.alpha >= 0.5 && opts.alpha <= 1.0)) {
    throw new DomainError(`alpha must lie in [0.5, 1], got ${opts.alpha}`);
  }
  if (opts.strategy !== undefined && !STRATEGIES.has(opts.strategy)) {
    throw new DomainError(`unknown strategy '${opts.strategy}'`);
  }
}

function toFrame(features: ArrayView, cls: ArrayView | Float32Array, what: string): DumpFrame {
  checkView(features, what);
  return {
    features: features.data,
    n: features.rows,
    d: features.cols,
    cls: asClsVector(cls, features.cols, what),
  };
}

function optionFlags(opts: PruneOptions): string[] {
  const flags: string[] = [];
  if (opts.budget !== undefined) flags.push("--budget", String(opts.budget));
  if (opts.ratio !== undefined) flags.push("--ratio", String(opts.ratio));
  if (opts.alpha !== undefined) flags.push("--alpha", String(opts.alpha));
  if (opts.strategy !== undefined) flags.push("--strategy", opts.strategy);
  if (opts.pooledHistory) flags.push("--history-budget-mode", "pooled");
  return flags;
}

interface FrameRecord {
  role: string;
  strategy: string;
  budget: number;
  indices: number[];
  step_scores: number[];
}

interface SelectionPayload {
  frames: FrameRecord[];
  stats: {
    original_tokens: number;
    retained_tokens: number;
    flop_ratio: number;
    flop_absolute: number;
  };
}

function toSelection(rec: FrameRecord): Selection {
  return {
    indices: Array.from(rec.indices),
    stepScores: Array.from(rec.step_scores),
    budget: rec.budget,
    strategy: rec.strategy,
  };
}

function runPrune(frames: DumpFrame[], mode: "frame" | "episode", opts: PruneOptions): SelectionPayload {
  const dir = mkdtempSync(join(tmpdir(), "stprune-"));
  try {
    const dumpPath = join(dir, "frames.tok");
    const outPath = join(dir, "selection.json");
    writeFileSync(dumpPath, encodeDump(frames));
    runEngine([
      "prune",
      "--input", dumpPath,
      "--mode", mode,
      "--output", outPath,
      ...optionFlags(opts),
    ]);
    return JSON.parse(readFileSync(outPath, "utf-8")) as SelectionPayload;
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}

/**
 * Prune a single frame.  Returns the retained token indices in selection
 * order plus the per-step objective scores, exactly as the CLI reports them.
 */
export function pruneFrame(
  features: ArrayView,
  cls: ArrayView | Float32Array,
  opts: PruneOptions,
): Selection {
  checkOptions(opts);
  const payload = runPrune([toFrame(features, cls, "features")], "frame", opts);
  return toSelection(payload.frames[0]!);
}

/**
 * Prune an episode: the current frame first, then every history frame
 * against the retained current tokens.  An empty history yields an empty
 * memory list.
 */
export function pruneEpisode(
  history: FramePair[],
  current: FramePair,
  opts: PruneOptions,
): EpisodeResult {
  checkOptions(opts);
  const frames = history.map(([f, c], i) => toFrame(f, c, `history[${i}]`));
  frames.push(toFrame(current[0], current[1], "current"));
  const payload = runPrune(frames, "episode", opts);
  const records = payload.frames;
  const memory = records.slice(0, -1).map(toSelection);
  const currentSelection = toSelection(records[records.length - 1]!);
  return {
    currentSelection,
    memory,
    stats: {
      originalTokens: payload.stats.original_tokens,
      retainedTokens: payload.stats.retained_tokens,
      flopRatio: payload.stats.flop_ratio,
      flopAbsolute: payload.stats.flop_absolute,
    },
  };
}

/** Version string reported by the underlying engine (e.g. "0.1.0"). */
export function engineVersion(): string {
  const out = runEngine(["--version"]).trim();
  const parts = out.split(/\s+/);
  return parts[parts.length - 1] ?? out;
}
