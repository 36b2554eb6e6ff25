"""Greedy token-subset selection strategies.

The main strategy (``amm``) iteratively picks the unselected token maximizing

    base[i] * (1 - max_sim(i, selected))

balancing semantic importance against distinctness from what is already kept.
The distinctness factor is defined as 1 for an empty selected set (the max
over the empty set is taken as 0), so the first pick is always the
highest-importance token.  Ties break to the lowest index everywhere.

``amm_oracle`` is an intentionally naive re-implementation used as ground
truth in tests: it recomputes the full objective from scratch every step
through an independent reduction route, with no incremental caching.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import TokenSet, cosine_matrix, _matvec
from .errors import DomainError, LengthMismatchError

__all__ = [
    "SelectionResult",
    "amm_select",
    "amm_oracle",
    "diversity_only_select",
    "semantics_only_select",
    "topk_baseline",
    "maxmin_baseline",
]


@dataclass(frozen=True)
class SelectionResult:
    """Ordered retained-token indices with per-step objective scores.

    ``indices`` preserves selection order.  ``step_scores[t]`` is the value
    of the strategy's objective for the token picked at step ``t`` (for the
    greedy strategies this is the per-step maximum; for the top-k strategies
    it is the pick's base importance; the farthest-point seed records 1.0).
    ``budget`` is the requested k; ``len(indices) == min(k, N)``.
    """

    indices: tuple[int, ...]
    step_scores: tuple[float, ...]
    strategy: str
    budget: int

    def __post_init__(self):
        if len(self.indices) != len(self.step_scores):
            raise LengthMismatchError("indices and step_scores lengths differ")
        if len(set(self.indices)) != len(self.indices):
            raise DomainError("selected indices must be pairwise distinct")
        if any(i < 0 for i in self.indices):
            raise DomainError("selected indices must be non-negative")

    def __len__(self) -> int:
        return len(self.indices)


def _check_k(k) -> int:
    if not isinstance(k, (int, np.integer)) or k < 1:
        raise DomainError(f"k must be a positive integer, got {k!r}")
    return int(k)


def _check_base(base, n: int) -> np.ndarray:
    b = np.asarray(base, dtype=np.float64).reshape(-1)
    if b.shape[0] != n:
        raise LengthMismatchError(f"importance length {b.shape[0]} != token count {n}")
    if not np.isfinite(b).all():
        raise DomainError("importance contains non-finite values")
    return b


def _greedy_mmr(unit_feats: np.ndarray, base: np.ndarray, k: int, strategy: str) -> SelectionResult:
    n = unit_feats.shape[0]
    take = min(k, n)
    # max similarity to the selected set; None while the set is empty, where
    # the distinctness factor is 1 by convention (similarities may be
    # negative, so a zero-filled running max would be wrong)
    max_sim: np.ndarray | None = None
    alive = np.ones(n, dtype=bool)
    picks: list[int] = []
    scores: list[float] = []
    for step in range(take):
        distinct = 1.0 if max_sim is None else 1.0 - max_sim
        obj = np.where(alive, base * distinct, -np.inf)
        i = int(np.argmax(obj))  # first occurrence == lowest index on ties
        picks.append(i)
        scores.append(float(obj[i]))
        alive[i] = False
        if step + 1 < take:
            col = np.clip(_matvec(unit_feats, unit_feats[i]), -1.0, 1.0)
            col = col.astype(np.float64, copy=False)
            if max_sim is None:
                max_sim = col.copy()
            else:
                np.maximum(max_sim, col, out=max_sim)
    return SelectionResult(tuple(picks), tuple(scores), strategy, k)


def amm_select(tokens: TokenSet, base, k) -> SelectionResult:
    """Greedy importance-times-distinctness selection of ``min(k, N)`` tokens.

    Maintains a running max-similarity-to-selected vector, updated with one
    similarity column per pick (O(N*D) per step).  Distinctness is kept raw:
    it may exceed 1 when every similarity to the selected set is negative.
    """
    k = _check_k(k)
    b = _check_base(base, tokens.n_tokens)
    return _greedy_mmr(tokens.unit_features, b, k, "amm")


def diversity_only_select(tokens: TokenSet, k) -> SelectionResult:
    """Ablation: the greedy loop with every token's importance fixed at 1.

    All step-one objectives tie at 1, so the first pick is index 0.
    """
    k = _check_k(k)
    ones = np.ones(tokens.n_tokens, dtype=np.float64)
    return _greedy_mmr(tokens.unit_features, ones, k, "diversity_only")


def _top_k(base, k: int, strategy: str) -> SelectionResult:
    b = np.asarray(base, dtype=np.float64).reshape(-1)
    if b.size < 1:
        raise LengthMismatchError("importance vector is empty")
    if not np.isfinite(b).all():
        raise DomainError("importance contains non-finite values")
    order = np.argsort(-b, kind="stable")  # stable: equal values keep index order
    picks = order[: min(k, b.size)]
    return SelectionResult(
        tuple(int(i) for i in picks),
        tuple(float(b[i]) for i in picks),
        strategy,
        k,
    )


def semantics_only_select(base, k) -> SelectionResult:
    """Ablation: the k largest base-importance tokens, no diversity term.

    Output is ordered by descending importance, ties by lowest index.
    """
    return _top_k(base, _check_k(k), "semantics_only")


def topk_baseline(base, k) -> SelectionResult:
    """Plain attention top-k; proxy for relevance-driven pruning baselines."""
    return _top_k(base, _check_k(k), "topk")


def maxmin_baseline(tokens: TokenSet, k) -> SelectionResult:
    """Greedy farthest-point selection in cosine distance; diversity proxy.

    Seeded at index 0 for determinism; each step picks the token maximizing
    the minimum cosine distance to the selected set.  The seed's recorded
    score is 1.0 by convention.
    """
    k = _check_k(k)
    U = tokens.unit_features
    n = U.shape[0]
    take = min(k, n)
    picks = [0]
    scores = [1.0]
    alive = np.ones(n, dtype=bool)
    alive[0] = False
    if take > 1:
        col = np.clip(_matvec(U, U[0]), -1.0, 1.0).astype(np.float64, copy=False)
        min_dist = 1.0 - col
        for step in range(1, take):
            obj = np.where(alive, min_dist, -np.inf)
            i = int(np.argmax(obj))
            picks.append(i)
            scores.append(float(obj[i]))
            alive[i] = False
            if step + 1 < take:
                col = np.clip(_matvec(U, U[i]), -1.0, 1.0).astype(np.float64, copy=False)
                np.minimum(min_dist, 1.0 - col, out=min_dist)
    return SelectionResult(tuple(picks), tuple(scores), "maxmin", k)


def amm_oracle(tokens: TokenSet, base, k) -> SelectionResult:
    """Brute-force reference for :func:`amm_select`.

    Recomputes every candidate's objective from scratch each step: fresh row
    normalization, full similarity against the selected set, no running
    state.  O(k^2 * N * D) and proud of it; use only for verification.  The
    cosine kernel itself is shared with the main path (it is validated
    separately against scalar oracles); the independence here is in the
    greedy mechanics, where incremental-update bugs would live.
    """
    k = _check_k(k)
    b = _check_base(base, tokens.n_tokens)
    feats = tokens.features
    n = feats.shape[0]
    take = min(k, n)
    picks: list[int] = []
    scores: list[float] = []
    alive = np.ones(n, dtype=bool)
    for _ in range(take):
        if picks:
            sims = cosine_matrix(feats, feats[np.asarray(picks, dtype=np.intp)])
            distinct = 1.0 - sims.max(axis=1).astype(np.float64)
        else:
            distinct = np.ones(n, dtype=np.float64)
        obj = np.where(alive, b * distinct, -np.inf)
        i = int(np.argmax(obj))
        picks.append(i)
        scores.append(float(obj[i]))
        alive[i] = False
    return SelectionResult(tuple(picks), tuple(scores), "amm", k)
