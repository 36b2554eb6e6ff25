"""Episode-level orchestration: budgets, frame pruning, memory assembly.

An episode is an ordered list of history frames plus one current frame.  The
current frame is pruned first; its retained rows become the query set guiding
the compression of every history frame.  History frames are independent given
the query set, so they run under a parallel map whose width is capped by the
``ST_PRUNE_THREADS`` environment variable (0 or unset = auto).  Results are
bit-identical regardless of the map width.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .core import ImportanceVector, PruneConfig, TokenSet, frame_importance, _gram
from .errors import DomainError, EmptySelectionError, ShapeMismatchError
from .memory import MemoryPool, QuerySet, reweight, st_relevance
from .selector import (
    SelectionResult,
    amm_select,
    diversity_only_select,
    maxmin_baseline,
    semantics_only_select,
    topk_baseline,
)

__all__ = [
    "Episode",
    "PrunedEpisode",
    "EpisodeStats",
    "EpisodeStream",
    "budget_from_ratio",
    "resolve_budget",
    "select_with_strategy",
    "prune_frame",
    "prune_episode",
    "merge_unselected",
    "estimate_flops",
]


def budget_from_ratio(n_tokens: int, ratio: float) -> int:
    """Retained-token budget for a pruning ratio: ``floor(n * (1 - ratio))``.

    Clamped to at least 1.  A 1e-9 nudge absorbs the binary representation
    error of decimal ratios (e.g. ``1 - 0.9`` is slightly below 0.1) so the
    floor matches the exact decimal arithmetic.
    """
    if not isinstance(n_tokens, (int, np.integer)) or n_tokens < 1:
        raise DomainError(f"n_tokens must be a positive integer, got {n_tokens!r}")
    if not (0.0 < ratio < 1.0):
        raise DomainError(f"ratio must lie in (0, 1), got {ratio!r}")
    return max(1, int(math.floor(n_tokens * (1.0 - ratio) + 1e-9)))


def resolve_budget(config: PruneConfig, n_tokens: int) -> int:
    """Concrete per-frame budget, clamped into [1, n_tokens]."""
    if config.budget is not None:
        return max(1, min(int(config.budget), n_tokens))
    return min(budget_from_ratio(n_tokens, config.ratio), n_tokens)


def select_with_strategy(tokens: TokenSet, base, k: int, strategy: str) -> SelectionResult:
    """Dispatch one frame's selection to the configured strategy."""
    if strategy == "amm":
        return amm_select(tokens, base, k)
    if strategy == "diversity_only":
        return diversity_only_select(tokens, k)
    if strategy == "semantics_only":
        return semantics_only_select(base, k)
    if strategy == "topk":
        return topk_baseline(base, k)
    if strategy == "maxmin":
        return maxmin_baseline(tokens, k)
    raise DomainError(f"unknown strategy {strategy!r}")


def prune_frame(tokens: TokenSet, config: PruneConfig) -> SelectionResult:
    """Prune a single frame: attention -> normalized importance -> selection."""
    imp = frame_importance(tokens, config.epsilon)
    k = resolve_budget(config, tokens.n_tokens)
    return select_with_strategy(tokens, imp.base, k, config.strategy)


@dataclass(frozen=True)
class Episode:
    """Ordered history frames plus the current frame and a shared config."""

    history: tuple[TokenSet, ...]
    current: TokenSet
    config: PruneConfig

    def __post_init__(self):
        object.__setattr__(self, "history", tuple(self.history))
        d = self.current.dim
        for i, f in enumerate(self.history):
            if f.dim != d:
                raise ShapeMismatchError(
                    f"history frame {i} width {f.dim} != current width {d}"
                )


@dataclass(frozen=True)
class EpisodeStats:
    """Retained/original token accounting plus the downstream cost estimate."""

    original_tokens: int
    retained_tokens: int
    flop_ratio: float
    flop_absolute: float


@dataclass(frozen=True)
class PrunedEpisode:
    """Hand-off payload: what survived pruning, and at what estimated cost."""

    current_selection: SelectionResult
    current_importance: ImportanceVector
    memory: MemoryPool
    stats: EpisodeStats
    merged_current: np.ndarray | None = None
    merged_history: tuple[np.ndarray, ...] | None = None


def estimate_flops(
    original_tokens: int,
    retained_tokens: int,
    linear_coeff: float = 1.0,
    quad_coeff: float = 0.0,
) -> tuple[float, float]:
    """Downstream cost ratio (pruned/unpruned) and absolute pruned estimate.

    Cost per pass over T visual tokens is modeled as ``c1*T + c2*T**2``
    (linear projector/MLP work plus quadratic attention work).  Returns
    ``(ratio, absolute)``; the ratio is 1.0 at zero pruning and monotone
    nondecreasing in the retained count.
    """
    if original_tokens < 1 or retained_tokens < 0 or retained_tokens > original_tokens:
        raise DomainError(
            f"need 0 <= retained ({retained_tokens}) <= original ({original_tokens}), original >= 1"
        )
    if linear_coeff < 0.0 or quad_coeff < 0.0 or (linear_coeff == 0.0 and quad_coeff == 0.0):
        raise DomainError("cost coefficients must be non-negative and not both zero")

    def cost(t: int) -> float:
        return linear_coeff * t + quad_coeff * t * t

    absolute = cost(retained_tokens)
    return absolute / cost(original_tokens), absolute


def merge_unselected(tokens: TokenSet, sel: SelectionResult) -> np.ndarray:
    """Fold each dropped token into its nearest retained token by cosine.

    Output row j is the unweighted mean of retained token ``sel.indices[j]``
    and every dropped token assigned to it; rows follow selection order.
    Similarity ties assign to the lowest retained token index.
    """
    if len(sel) == 0:
        raise EmptySelectionError("cannot merge into an empty selection")
    n = tokens.n_tokens
    sel_idx = np.asarray(sel.indices, dtype=np.intp)
    if sel_idx.max() >= n:
        raise DomainError("selection references tokens outside this frame")
    keep = np.zeros(n, dtype=bool)
    keep[sel_idx] = True
    dropped = np.flatnonzero(~keep)
    feats64 = np.asarray(tokens.features, dtype=np.float64)
    if dropped.size == 0:
        return tokens.features[sel_idx].copy()

    U = tokens.unit_features
    sims = np.clip(_gram(U[dropped], U[sel_idx]), -1.0, 1.0)
    best = sims.max(axis=1)
    # among tied columns prefer the smallest retained *token* index
    tied = sims == best[:, None]
    cand = np.where(tied, sel_idx[None, :], n)
    assigned_token = cand.min(axis=1)
    pos_of_token = np.empty(n, dtype=np.intp)
    pos_of_token[sel_idx] = np.arange(sel_idx.size)
    assigned_pos = pos_of_token[assigned_token]

    sums = feats64[sel_idx].copy()
    counts = np.ones(sel_idx.size, dtype=np.float64)
    np.add.at(sums, assigned_pos, feats64[dropped])
    np.add.at(counts, assigned_pos, 1.0)
    return (sums / counts[:, None]).astype(np.float32)


def _thread_width(n_jobs: int) -> int:
    raw = os.environ.get("ST_PRUNE_THREADS", "0")
    try:
        width = int(raw)
    except ValueError:
        width = 0
    if width <= 0:
        width = min(8, os.cpu_count() or 1)
    return max(1, min(width, n_jobs))


def _map_frames(fn, frames):
    if len(frames) <= 1 or _thread_width(len(frames)) <= 1:
        return [fn(f) for f in frames]
    with ThreadPoolExecutor(max_workers=_thread_width(len(frames))) as ex:
        return list(ex.map(fn, frames))


def _history_importance(frame: TokenSet, queries: QuerySet, config: PruneConfig) -> ImportanceVector:
    imp = frame_importance(frame, config.epsilon)
    final = reweight(imp.base, st_relevance(frame, queries), config.alpha)
    return ImportanceVector(raw=imp.raw, base=imp.base, final=final)


def _select_history_frame(
    frame: TokenSet, imp: ImportanceVector, k: int, strategy: str
) -> SelectionResult:
    # importance-driven strategies rank by the re-weighted importance;
    # the geometry-only strategies (diversity_only, maxmin) ignore it
    return select_with_strategy(frame, imp.final, k, strategy)


def _pooled_memory(
    history: tuple[TokenSet, ...],
    importances: list[ImportanceVector],
    budgets: list[int],
    config: PruneConfig,
) -> tuple[SelectionResult, ...]:
    """Pooled history mode: rank all history tokens globally by final
    importance, keep the global top-B, then order each frame's survivors with
    the greedy selector (budget = that frame's survivor count)."""
    total_budget = sum(budgets)
    finals = np.concatenate([imp.final for imp in importances])
    order = np.argsort(-finals, kind="stable")
    survivors_flat = np.sort(order[:total_budget])

    offsets = np.cumsum([0] + [f.n_tokens for f in history])
    selections = []
    for i, frame in enumerate(history):
        in_frame = survivors_flat[
            (survivors_flat >= offsets[i]) & (survivors_flat < offsets[i + 1])
        ] - offsets[i]
        if in_frame.size == 0:
            selections.append(SelectionResult((), (), "amm", 0))
            continue
        sub = TokenSet(
            features=frame.features[in_frame],
            cls=frame.cls,
            frame_id=frame.frame_id,
            timestamp=frame.timestamp,
        )
        sub_sel = amm_select(sub, importances[i].final[in_frame], int(in_frame.size))
        selections.append(
            SelectionResult(
                tuple(int(in_frame[j]) for j in sub_sel.indices),
                sub_sel.step_scores,
                "amm",
                int(in_frame.size),
            )
        )
    return tuple(selections)


def prune_episode(ep: Episode) -> PrunedEpisode:
    """Prune the current frame, then compress every history frame against it.

    The current frame always completes first (its retained rows form the
    query set); history frames then run independently.  An empty history
    yields an empty memory pool.
    """
    config = ep.config
    current_imp = frame_importance(ep.current, config.epsilon)
    k_current = resolve_budget(config, ep.current.n_tokens)
    current_sel = select_with_strategy(
        ep.current, current_imp.base, k_current, config.strategy
    )

    if ep.history:
        queries = QuerySet.from_selection(ep.current, current_sel)
        importances = _map_frames(
            lambda f: _history_importance(f, queries, config), list(ep.history)
        )
        budgets = [resolve_budget(config, f.n_tokens) for f in ep.history]
        if config.history_mode == "pooled":
            if config.strategy != "amm":
                raise DomainError("pooled history mode requires the amm strategy")
            selections = _pooled_memory(ep.history, importances, budgets, config)
        else:
            jobs = list(zip(ep.history, importances, budgets))
            selections = tuple(
                _map_frames(
                    lambda job: _select_history_frame(
                        job[0], job[1], job[2], config.strategy
                    ),
                    jobs,
                )
            )
        memory = MemoryPool(selections=tuple(selections), importances=tuple(importances))
    else:
        memory = MemoryPool(selections=(), importances=())

    merged_current = None
    merged_history = None
    if config.merge_unselected:
        merged_current = merge_unselected(ep.current, current_sel)
        merged = []
        for frame, sel in zip(ep.history, memory.selections):
            if len(sel) == 0:  # pooled mode can starve a frame entirely
                merged.append(np.zeros((0, frame.dim), dtype=np.float32))
            else:
                merged.append(merge_unselected(frame, sel))
        merged_history = tuple(merged)

    original = ep.current.n_tokens + sum(f.n_tokens for f in ep.history)
    retained = len(current_sel) + memory.total_retained
    ratio, absolute = estimate_flops(
        original, retained, config.flop_linear, config.flop_quadratic
    )
    stats = EpisodeStats(
        original_tokens=original,
        retained_tokens=retained,
        flop_ratio=ratio,
        flop_absolute=absolute,
    )
    return PrunedEpisode(
        current_selection=current_sel,
        current_importance=current_imp,
        memory=memory,
        stats=stats,
        merged_current=merged_current,
        merged_history=merged_history,
    )


class EpisodeStream:
    """Streaming driver: frames arrive one at a time.

    Each pushed frame is pruned as the current view.  The previously current
    frame enters history and is compressed once, against the query set of the
    frame that displaced it (prune-once-on-arrival).  With ``reprune=True``
    every stored history frame is instead re-compressed from its original
    tokens on every push.
    """

    def __init__(self, config: PruneConfig, reprune: bool = False):
        self.config = config
        self.reprune = bool(reprune)
        self._frames: list[TokenSet] = []
        self._memory_selections: list[SelectionResult] = []
        self._memory_importances: list[ImportanceVector] = []

    def push(self, tokens: TokenSet) -> PrunedEpisode:
        config = self.config
        current_imp = frame_importance(tokens, config.epsilon)
        k = resolve_budget(config, tokens.n_tokens)
        current_sel = select_with_strategy(tokens, current_imp.base, k, config.strategy)
        queries = QuerySet.from_selection(tokens, current_sel)

        if self._frames:
            if self.reprune:
                self._memory_selections = []
                self._memory_importances = []
                for f in self._frames:
                    imp = _history_importance(f, queries, config)
                    sel = _select_history_frame(
                        f, imp, resolve_budget(config, f.n_tokens), config.strategy
                    )
                    self._memory_selections.append(sel)
                    self._memory_importances.append(imp)
            else:
                newest = self._frames[-1]
                imp = _history_importance(newest, queries, config)
                sel = _select_history_frame(
                    newest, imp, resolve_budget(config, newest.n_tokens), config.strategy
                )
                self._memory_selections.append(sel)
                self._memory_importances.append(imp)

        self._frames.append(tokens)
        memory = MemoryPool(
            selections=tuple(self._memory_selections),
            importances=tuple(self._memory_importances),
        )
        original = sum(f.n_tokens for f in self._frames)
        retained = len(current_sel) + memory.total_retained
        ratio, absolute = estimate_flops(
            original, retained, config.flop_linear, config.flop_quadratic
        )
        return PrunedEpisode(
            current_selection=current_sel,
            current_importance=current_imp,
            memory=memory,
            stats=EpisodeStats(original, retained, ratio, absolute),
        )

    @property
    def n_frames(self) -> int:
        return len(self._frames)
