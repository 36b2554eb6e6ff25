"""History-frame compression guided by the pruned current frame.

A history token's importance is re-weighted by its best cosine match against
the query set (the retained current-frame tokens):

    final[i] = base[i] * (alpha + (1 - alpha) * R[i])

where ``R[i]`` is the token's max similarity to any query row, clamped to
[0, 1] so anti-correlated tokens count as merely irrelevant rather than
negative.  The same greedy selection then runs on ``final`` to build the
compact memory pool.  ``alpha`` is restricted to [0.5, 1]; at 1 the query
guidance is disabled and ``final == base``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ImportanceVector, TokenSet, unit_rows, _gram
from .errors import DomainError, LengthMismatchError, ShapeMismatchError
from .selector import SelectionResult, amm_select

__all__ = ["QuerySet", "MemoryPool", "st_relevance", "reweight", "prune_history"]


@dataclass(frozen=True)
class QuerySet:
    """Retained current-frame token features acting as relevance queries."""

    features: np.ndarray
    source_indices: tuple[int, ...]

    def __post_init__(self):
        feats = np.asarray(self.features)
        if feats.ndim != 2 or feats.shape[0] < 1:
            raise ShapeMismatchError("query features must be a non-empty 2-D matrix")
        if feats.shape[0] != len(self.source_indices):
            raise LengthMismatchError("source_indices length != query row count")
        object.__setattr__(self, "features", feats)

    @classmethod
    def from_selection(cls, tokens: TokenSet, sel: SelectionResult) -> "QuerySet":
        idx = np.asarray(sel.indices, dtype=np.intp)
        return cls(features=tokens.features[idx].copy(), source_indices=sel.indices)

    @property
    def dim(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class MemoryPool:
    """Per-history-frame selections plus their importance breakdowns."""

    selections: tuple[SelectionResult, ...]
    importances: tuple[ImportanceVector, ...]

    def __post_init__(self):
        if len(self.selections) != len(self.importances):
            raise LengthMismatchError("selections and importances lengths differ")

    @property
    def n_frames(self) -> int:
        return len(self.selections)

    @property
    def total_retained(self) -> int:
        return sum(len(s) for s in self.selections)


def st_relevance(history: TokenSet, queries: QuerySet) -> np.ndarray:
    """Max cosine of each history token to any query row, clamped to [0, 1]."""
    if history.dim != queries.dim:
        raise ShapeMismatchError(
            f"history width {history.dim} != query width {queries.dim}"
        )
    sims = _gram(history.unit_features, unit_rows(np.asarray(queries.features)))
    sims = np.clip(sims, -1.0, 1.0)
    r = sims.max(axis=1).astype(np.float64, copy=False)
    return np.clip(r, 0.0, 1.0)


def reweight(base, relevance, alpha: float) -> np.ndarray:
    """Scale base importance by query relevance: ``base * (alpha + (1-alpha)*R)``.

    Element-wise the result stays within ``[alpha * base, base]``.
    """
    if not (0.5 <= alpha <= 1.0):
        raise DomainError(f"alpha must lie in [0.5, 1], got {alpha!r}")
    b = np.asarray(base, dtype=np.float64).reshape(-1)
    r = np.asarray(relevance, dtype=np.float64).reshape(-1)
    if b.shape != r.shape:
        raise LengthMismatchError(f"base length {b.shape[0]} != relevance length {r.shape[0]}")
    return b * (alpha + (1.0 - alpha) * r)


def prune_history(history: TokenSet, base, queries: QuerySet, k, alpha: float) -> SelectionResult:
    """Compress one history frame: re-weight by query relevance, then select."""
    final = reweight(base, st_relevance(history, queries), alpha)
    return amm_select(history, final, k)
