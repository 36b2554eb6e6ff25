/** Spawns the pruning engine CLI and maps its exit codes to typed errors. */

import { spawnSync } from "node:child_process";

import {
  DimensionMismatchError,
  EngineError,
  FlagConflictError,
  MalformedDumpError,
} from "./errors.js";

/**
 * Engine command: the ST_PRUNE_BIN environment variable (whitespace-split,
 * so "python3 -m stprune" works), defaulting to the installed `st-prune`
 * console script.
 */
export function engineCommand(): string[] {
  const env = process.env.ST_PRUNE_BIN;
  if (env && env.trim()) {
    return env.trim().split(/\s+/);
  }
  return ["st-prune"];
}

export function runEngine(args: string[]): string {
  const [cmd, ...prefix] = engineCommand();
  const proc = spawnSync(cmd!, [...prefix, ...args], {
    encoding: "utf-8",
    maxBuffer: 256 * 1024 * 1024,
  });
  if (proc.error) {
    throw new EngineError(`cannot run pruning engine '${cmd}': ${proc.error.message}`);
  }
  if (proc.status !== 0) {
    const detail = (proc.stderr || "").trim() || `exit code ${proc.status}`;
    switch (proc.status) {
      case 2:
        throw new MalformedDumpError(detail);
      case 3:
        throw new FlagConflictError(detail);
      case 4:
        throw new DimensionMismatchError(detail);
      default:
        throw new EngineError(detail);
    }
  }
  return proc.stdout;
}
