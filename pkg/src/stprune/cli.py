"""Command-line front end: prune, sweep, bench, gen.

Exit codes: 0 success, 2 malformed dump or invalid generator parameters,
3 flag conflict (ratio and budget both set, or neither), 4 dimension
mismatch between frames.  Diagnostics go to stderr; selection output is
byte-deterministic for fixed input and flags (pruning wall time is therefore
reported on stderr and only written into the file under ``--timing``).
"""

from __future__ import annotations

import argparse
import json
import math
import statistics
import sys
import time

import numpy as np

from . import __version__
from .core import STRATEGIES, PruneConfig, frame_importance, set_fast_path
from .dumps import read_dump, write_dump, write_selection_file, _atomic_write_bytes
from .errors import (
    DumpFormatError,
    LengthMismatchError,
    PruneError,
    ShapeMismatchError,
)
from .metrics import coverage
from .pipeline import (
    Episode,
    budget_from_ratio,
    estimate_flops,
    prune_episode,
    prune_frame,
    resolve_budget,
    select_with_strategy,
)
from .synth import clustered_episode, random_tokens


def _ratio_flag(value: str) -> float:
    f = float(value)
    if not (0.0 < f < 1.0):
        raise argparse.ArgumentTypeError(f"ratio must lie in (0, 1), got {value}")
    return f


def _alpha_flag(value: str) -> float:
    f = float(value)
    if not (0.5 <= f <= 1.0):
        raise argparse.ArgumentTypeError(f"alpha must lie in [0.5, 1], got {value}")
    return f


def _budget_flag(value: str) -> int:
    i = int(value)
    if i < 1:
        raise argparse.ArgumentTypeError(f"budget must be >= 1, got {value}")
    return i


def _positive_int(value: str) -> int:
    i = int(value)
    if i < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {value}")
    return i


def _csv_list(value: str) -> list[str]:
    items = [s.strip() for s in value.split(",") if s.strip()]
    if not items:
        raise argparse.ArgumentTypeError("expected a comma-separated list")
    return items


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="st-prune",
        description="Spatio-temporal vision-token pruning over token-feature dumps.",
    )
    parser.add_argument(
        "--version", action="version", version=f"st-prune {__version__}"
    )
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("prune", help="prune a token dump and emit a selection file")
    p.add_argument("--input", required=True, help="token dump (binary or text)")
    p.add_argument("--ratio", type=_ratio_flag, help="fraction of tokens to drop, in (0,1)")
    p.add_argument("--budget", type=_budget_flag, help="retained tokens per frame")
    p.add_argument("--alpha", type=_alpha_flag, default=0.5, help="history re-weighting balance [0.5,1]")
    p.add_argument("--strategy", choices=STRATEGIES, default="amm")
    p.add_argument("--merge", action="store_true", help="fold dropped tokens into retained ones")
    p.add_argument(
        "--mode",
        choices=("episode", "frame"),
        default="episode",
        help="episode: last frame is current, rest are history; frame: prune frames independently",
    )
    p.add_argument(
        "--history-budget-mode",
        choices=("per-frame", "pooled"),
        default="per-frame",
        help="apply the budget per history frame, or pool it across history",
    )
    p.add_argument("--timing", action="store_true", help="include pruning wall time in the output file (breaks byte determinism)")
    p.add_argument("--output", default="-", help="selection file path, or - for stdout")
    p.set_defaults(func=cmd_prune)

    p = sub.add_parser("sweep", help="compare strategies across pruning ratios")
    p.add_argument("--input", required=True)
    p.add_argument("--ratios", type=_csv_list, default=["0.7", "0.8", "0.9"], metavar="R1,R2,...")
    p.add_argument(
        "--strategies",
        type=_csv_list,
        default=["amm", "topk", "maxmin", "diversity_only"],
        metavar="S1,S2,...",
    )
    p.add_argument("--output", default="-", help="TSV path, or - for stdout")
    p.set_defaults(func=cmd_sweep)
    p.epilog = (
        "Columns: strategy, ratio, frames, retained (tokens kept over all frames), "
        "importance_mass (selected share of total base importance), coverage "
        "(mean max-cosine of dropped tokens to the retained set)."
    )

    p = sub.add_parser("bench", help="microbenchmark the pruning stage")
    p.add_argument("--n", type=_positive_int, default=729, help="tokens per frame")
    p.add_argument("--dim", type=_positive_int, default=1152, help="feature width")
    p.add_argument("--budget", type=_budget_flag, default=None)
    p.add_argument("--ratio", type=_ratio_flag, default=None)
    p.add_argument("--iters", type=_positive_int, default=100)
    p.add_argument("--warmup", type=int, default=5)
    p.add_argument("--strategies", type=_csv_list, default=list(STRATEGIES), metavar="S1,S2,...")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fast", action="store_true", help="benchmark the BLAS fast path instead of the deterministic default")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("gen", help="generate a seeded synthetic token dump")
    p.add_argument("--output", required=True)
    p.add_argument("--frames", type=int, default=1)
    p.add_argument("--n", type=int, default=729)
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--clusters", type=int, default=5)
    p.add_argument("--spread", type=float, default=0.06)
    p.add_argument("--format", choices=("binary", "text"), default="binary")
    p.add_argument("--with-attention", action="store_true", help="embed planted attention vectors in the dump")
    p.set_defaults(func=cmd_gen)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DumpFormatError as e:
        print(f"st-prune: error: {e}", file=sys.stderr)
        return 2
    except (ShapeMismatchError, LengthMismatchError) as e:
        print(f"st-prune: error: dimension mismatch: {e}", file=sys.stderr)
        return 4
    except PruneError as e:
        print(f"st-prune: error: {e}", file=sys.stderr)
        return 2


def _budget_flags_config(args, strategy=None) -> PruneConfig | None:
    """Build a PruneConfig from flags; None plus stderr message on conflict."""
    if (args.ratio is None) == (args.budget is None):
        which = "both" if args.ratio is not None else "neither"
        print(
            f"st-prune: error: exactly one of --ratio / --budget must be given ({which} set)",
            file=sys.stderr,
        )
        return None
    return PruneConfig(
        budget=args.budget,
        ratio=args.ratio,
        alpha=getattr(args, "alpha", 0.5),
        strategy=strategy or args.strategy,
        merge_unselected=getattr(args, "merge", False),
        history_mode=getattr(args, "history_budget_mode", "per-frame").replace("-", "_"),
    )


def _frame_record(frame_id: int, role: str, sel) -> dict:
    return {
        "frame_id": frame_id,
        "role": role,
        "strategy": sel.strategy,
        "budget": sel.budget,
        "indices": list(sel.indices),
        "step_scores": list(sel.step_scores),
    }


def cmd_prune(args) -> int:
    config = _budget_flags_config(args)
    if config is None:
        return 3
    frames = read_dump(args.input)

    t0 = time.perf_counter_ns()
    if args.mode == "episode":
        ep = Episode(history=tuple(frames[:-1]), current=frames[-1], config=config)
        result = prune_episode(ep)
        records = [
            _frame_record(f.frame_id, "history", sel)
            for f, sel in zip(ep.history, result.memory.selections)
        ]
        records.append(
            _frame_record(ep.current.frame_id, "current", result.current_selection)
        )
        stats = result.stats
        original, retained = stats.original_tokens, stats.retained_tokens
        flop_ratio, flop_absolute = stats.flop_ratio, stats.flop_absolute
    else:
        records = []
        original = retained = 0
        for f in frames:
            sel = prune_frame(f, config)
            records.append(_frame_record(f.frame_id, "frame", sel))
            original += f.n_tokens
            retained += len(sel)
        flop_ratio, flop_absolute = estimate_flops(
            original, retained, config.flop_linear, config.flop_quadratic
        )
    elapsed_us = (time.perf_counter_ns() - t0) // 1000

    stats_block = {
        "original_tokens": original,
        "retained_tokens": retained,
        "flop_ratio": flop_ratio,
        "flop_absolute": flop_absolute,
    }
    if args.timing:
        stats_block["prune_time_us"] = int(elapsed_us)
    payload = {
        "format": "stprune-selection/1",
        "config": {
            "strategy": config.strategy,
            "budget": config.budget,
            "ratio": config.ratio,
            "alpha": config.alpha,
            "epsilon": config.epsilon,
            "merge": config.merge_unselected,
            "mode": args.mode,
            "history_budget_mode": args.history_budget_mode,
        },
        "frames": records,
        "stats": stats_block,
    }
    write_selection_file(args.output, payload)
    print(f"st-prune: pruning stage took {elapsed_us} us", file=sys.stderr)
    return 0


def cmd_sweep(args) -> int:
    try:
        ratios = [_ratio_flag(r) for r in args.ratios]
    except (argparse.ArgumentTypeError, ValueError) as e:
        print(f"st-prune: error: {e}", file=sys.stderr)
        return 2
    for s in args.strategies:
        if s not in STRATEGIES:
            print(f"st-prune: error: unknown strategy {s!r}", file=sys.stderr)
            return 2
    frames = read_dump(args.input)

    importances = [frame_importance(f) for f in frames]
    lines = ["strategy\tratio\tframes\tretained\timportance_mass\tcoverage"]
    for strategy in args.strategies:
        for ratio in ratios:
            retained = 0
            mass_num = mass_den = 0.0
            cov_num = cov_den = 0.0
            for f, imp in zip(frames, importances):
                k = min(budget_from_ratio(f.n_tokens, ratio), f.n_tokens)
                sel = select_with_strategy(f, imp.base, k, strategy)
                retained += len(sel)
                mass_num += float(np.sum(imp.base[list(sel.indices)]))
                mass_den += float(np.sum(imp.base))
                dropped = f.n_tokens - len(sel)
                if dropped:
                    cov_num += coverage(f, sel.indices) * dropped
                    cov_den += dropped
            mass = 1.0 if mass_den == 0.0 else mass_num / mass_den
            cov = 1.0 if cov_den == 0.0 else cov_num / cov_den
            lines.append(
                f"{strategy}\t{ratio:g}\t{len(frames)}\t{retained}\t{mass:.6f}\t{cov:.6f}"
            )
    text = "\n".join(lines) + "\n"
    if args.output in (None, "-"):
        sys.stdout.write(text)
    else:
        _atomic_write_bytes(args.output, text.encode("utf-8"))
    return 0


def cmd_bench(args) -> int:
    if args.budget is not None and args.ratio is not None:
        print("st-prune: error: give at most one of --ratio / --budget", file=sys.stderr)
        return 3
    budget, ratio = args.budget, args.ratio
    if budget is None and ratio is None:
        budget = 72
    for s in args.strategies:
        if s not in STRATEGIES:
            print(f"st-prune: error: unknown strategy {s!r}", file=sys.stderr)
            return 2

    tokens = random_tokens(args.n, args.dim, seed=args.seed)
    if args.fast:
        set_fast_path(True)
    try:
        k = resolve_budget(
            PruneConfig(budget=budget, ratio=ratio), tokens.n_tokens
        )
        print(
            f"# bench n={args.n} dim={args.dim} k={k} iters={args.iters} "
            f"warmup={args.warmup} fast={args.fast}"
        )
        print("strategy\tmedian_us\tp95_us\tper_frame_ms\ttokens_per_s")
        for strategy in args.strategies:
            config = PruneConfig(budget=budget, ratio=ratio, strategy=strategy)
            for _ in range(max(0, args.warmup)):
                prune_frame(tokens, config)
            samples = []
            for _ in range(args.iters):
                t0 = time.perf_counter_ns()
                prune_frame(tokens, config)
                samples.append((time.perf_counter_ns() - t0) / 1000.0)
            samples.sort()
            median = statistics.median(samples)
            p95 = samples[max(0, math.ceil(0.95 * len(samples)) - 1)]
            tokens_per_s = args.n / (median / 1e6)
            print(
                f"{strategy}\t{median:.1f}\t{p95:.1f}\t{median / 1000.0:.3f}\t{tokens_per_s:.0f}"
            )
    finally:
        if args.fast:
            set_fast_path(False)
    return 0


def cmd_gen(args) -> int:
    if args.frames < 1 or args.n < 1 or args.dim < 1 or not (1 <= args.clusters <= args.n):
        print(
            "st-prune: error: need frames >= 1, n >= 1, dim >= 1, 1 <= clusters <= n",
            file=sys.stderr,
        )
        return 2
    if args.spread < 0:
        print("st-prune: error: spread must be non-negative", file=sys.stderr)
        return 2
    episode, meta = clustered_episode(
        frames=args.frames,
        n=args.n,
        dim=args.dim,
        seed=args.seed,
        clusters=args.clusters,
        spread=args.spread,
        with_attention=args.with_attention,
    )
    write_dump(args.output, episode, fmt=args.format)
    _atomic_write_bytes(
        str(args.output) + ".meta.json", (json.dumps(meta, indent=2) + "\n").encode("utf-8")
    )
    print(
        f"st-prune: wrote {args.frames} frame(s) of {args.n}x{args.dim} tokens to {args.output}",
        file=sys.stderr,
    )
    return 0
