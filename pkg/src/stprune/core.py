"""Domain types, similarity kernels, and attention-based importance scores.

All similarity math reduces to cosine similarity between feature rows.  The
default kernels accumulate in a fixed order (single-threaded ``np.einsum``),
so results are bit-identical across runs and across BLAS thread counts.  A
documented opt-in fast path (:func:`set_fast_path`) routes the same products
through BLAS matmul, which may reorder accumulation; it is excluded from the
golden-value test suite.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, LengthMismatchError, ShapeMismatchError, ZeroVectorError

STRATEGIES = ("amm", "diversity_only", "semantics_only", "topk", "maxmin")

_FAST = os.environ.get("ST_PRUNE_FAST", "0") not in ("", "0")


def set_fast_path(enabled: bool) -> None:
    """Route similarity kernels through BLAS matmul.

    The fast path may reorder floating-point accumulation, so its outputs are
    only reproducible on a fixed BLAS build at a fixed thread count.  The
    default path is bit-deterministic everywhere.  Also reachable via the
    ``ST_PRUNE_FAST=1`` environment variable at import time.
    """
    global _FAST
    _FAST = bool(enabled)


def fast_path_enabled() -> bool:
    return _FAST


def _matvec(m: np.ndarray, v: np.ndarray) -> np.ndarray:
    if _FAST:
        return m @ v
    return np.einsum("ij,j->i", m, v)


def _gram(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if _FAST:
        return a @ b.T
    return np.einsum("ik,jk->ij", a, b)


def _row_norms(m: np.ndarray) -> np.ndarray:
    # einsum keeps the reduction single-threaded and fixed-order on both paths
    return np.sqrt(np.einsum("ij,ij->i", m, m))


def unit_rows(m: np.ndarray) -> np.ndarray:
    """Rows rescaled to unit Euclidean length; all-zero rows stay zero."""
    norms = _row_norms(m)
    safe = np.where(norms == 0.0, 1.0, norms)
    return m / safe[:, None]


def _as_float_matrix(x, name: str) -> np.ndarray:
    m = np.asarray(x)
    if m.dtype.kind not in "fiu":
        raise DomainError(f"{name} must be numeric, got dtype {m.dtype}")
    if m.dtype.kind in "iu":
        m = m.astype(np.float64)
    if m.ndim != 2:
        raise ShapeMismatchError(f"{name} must be 2-D, got shape {m.shape}")
    return m


@dataclass(frozen=True)
class TokenSet:
    """One frame's patch-token feature matrix plus its global aggregate vector.

    Parameters
    ----------
    features : (N, D) float32
        Per-token embedding rows.  Copied and frozen on construction.
    cls : (D,) float32
        The frame's global aggregate token (the encoder's summary vector).
    frame_id, timestamp : int
        Non-negative frame identifier and frame ordinal.
    raw_attention : (N,) float32, optional
        Pre-computed attention weights carried alongside the features (for
        example read from a token dump).  When present the pipeline uses
        these instead of deriving attention from ``cls``.
    """

    features: np.ndarray
    cls: np.ndarray
    frame_id: int = 0
    timestamp: int = 0
    raw_attention: np.ndarray | None = None
    _unit_features: np.ndarray | None = field(
        default=None, init=False, repr=False, compare=False
    )

    def __post_init__(self):
        feats = np.array(self.features, dtype=np.float32, order="C")
        if feats.ndim != 2 or feats.shape[0] < 1 or feats.shape[1] < 1:
            raise ShapeMismatchError(
                f"features must be a non-empty 2-D matrix, got shape {np.shape(self.features)}"
            )
        if not np.isfinite(feats).all():
            raise DomainError("features contain non-finite values")
        cls = np.array(self.cls, dtype=np.float32).reshape(-1)
        if cls.shape[0] != feats.shape[1]:
            raise ShapeMismatchError(
                f"cls length {cls.shape[0]} != feature width {feats.shape[1]}"
            )
        if not np.isfinite(cls).all():
            raise DomainError("cls contains non-finite values")
        for name in ("frame_id", "timestamp"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v < 0:
                raise DomainError(f"{name} must be a non-negative integer, got {v!r}")
        raw = self.raw_attention
        if raw is not None:
            raw = np.array(raw, dtype=np.float32).reshape(-1)
            if raw.shape[0] != feats.shape[0]:
                raise LengthMismatchError(
                    f"raw_attention length {raw.shape[0]} != token count {feats.shape[0]}"
                )
            if not np.isfinite(raw).all():
                raise DomainError("raw_attention contains non-finite values")
            raw.flags.writeable = False
        feats.flags.writeable = False
        cls.flags.writeable = False
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "cls", cls)
        object.__setattr__(self, "raw_attention", raw)

    @property
    def n_tokens(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    @property
    def unit_features(self) -> np.ndarray:
        """Unit-normalized feature rows, computed once and cached."""
        u = self._unit_features
        if u is None:
            u = unit_rows(self.features)
            u.flags.writeable = False
            object.__setattr__(self, "_unit_features", u)
        return u


@dataclass(frozen=True)
class ImportanceVector:
    """Per-token scores: raw attention, normalized base, optional final.

    ``raw`` holds attention weights (cosine of each token to the aggregate
    token, or dump-provided values).  ``base`` is ``raw`` min-max normalized
    into [0, 1].  ``final`` is the history re-weighted importance and is only
    present after query-guided re-weighting; it never exceeds ``base``.
    """

    raw: np.ndarray
    base: np.ndarray | None = None
    final: np.ndarray | None = None

    def __post_init__(self):
        raw = np.asarray(self.raw)
        if raw.ndim != 1 or raw.size < 1:
            raise ShapeMismatchError("raw must be a non-empty 1-D vector")
        if not np.isfinite(raw).all():
            raise DomainError("raw contains non-finite values")
        object.__setattr__(self, "raw", raw)
        for name in ("base", "final"):
            v = getattr(self, name)
            if v is None:
                continue
            v = np.asarray(v, dtype=np.float64)
            if v.shape != raw.shape:
                raise LengthMismatchError(f"{name} shape {v.shape} != raw shape {raw.shape}")
            if name == "base" and ((v < 0.0) | (v > 1.0)).any():
                raise DomainError("base values must lie in [0, 1]")
            object.__setattr__(self, name, v)
        if self.final is not None and self.base is not None:
            if (self.final > self.base).any():
                raise DomainError("final importance may not exceed base importance")

    @property
    def n_tokens(self) -> int:
        return self.raw.shape[0]


@dataclass(frozen=True)
class PruneConfig:
    """Pruning parameters.  Exactly one of ``budget`` / ``ratio`` is set.

    ``budget`` is the retained-token count; ``ratio`` is the dropped fraction
    and converts to a budget by flooring.  Tie-breaking is fixed to
    lowest-index everywhere.  ``flop_linear`` / ``flop_quadratic`` are the
    downstream per-pass cost coefficients used by the FLOP estimator.
    """

    budget: int | None = None
    ratio: float | None = None
    alpha: float = 0.5
    epsilon: float = 1e-6
    strategy: str = "amm"
    merge_unselected: bool = False
    history_mode: str = "per_frame"
    flop_linear: float = 1.0
    flop_quadratic: float = 0.0

    TIE_BREAK = "lowest_index"

    def __post_init__(self):
        if (self.budget is None) == (self.ratio is None):
            raise DomainError("exactly one of budget / ratio must be set")
        if self.budget is not None:
            if not isinstance(self.budget, (int, np.integer)) or self.budget < 1:
                raise DomainError(f"budget must be a positive integer, got {self.budget!r}")
        if self.ratio is not None and not (0.0 < self.ratio < 1.0):
            raise DomainError(f"ratio must lie in (0, 1), got {self.ratio!r}")
        if not (0.5 <= self.alpha <= 1.0):
            raise DomainError(f"alpha must lie in [0.5, 1], got {self.alpha!r}")
        if not (self.epsilon > 0.0):
            raise DomainError(f"epsilon must be positive, got {self.epsilon!r}")
        if self.strategy not in STRATEGIES:
            raise DomainError(f"unknown strategy {self.strategy!r}; choose from {STRATEGIES}")
        if self.history_mode not in ("per_frame", "pooled"):
            raise DomainError(f"history_mode must be per_frame or pooled, got {self.history_mode!r}")
        if self.flop_linear < 0.0 or self.flop_quadratic < 0.0:
            raise DomainError("flop cost coefficients must be non-negative")
        if self.flop_linear == 0.0 and self.flop_quadratic == 0.0:
            raise DomainError("at least one flop cost coefficient must be positive")


def cls_attention(tokens: TokenSet, zero_norm: str = "neutral") -> ImportanceVector:
    """Raw attention of each patch token: its cosine to the aggregate token.

    The cosine distribution over tokens acts as the frame's effective
    attention map; tokens aligned with the aggregate direction score near 1.
    Cosine against a zero-norm vector is 0 under the default ``"neutral"``
    policy; ``zero_norm="error"`` raises :class:`ZeroVectorError` instead.
    Outputs are clamped to [-1, 1].  Only ``raw`` is populated.
    """
    if zero_norm not in ("neutral", "error"):
        raise DomainError(f"zero_norm must be 'neutral' or 'error', got {zero_norm!r}")
    cls_sq = float(np.einsum("i,i->", tokens.cls, tokens.cls))
    if zero_norm == "error":
        if cls_sq == 0.0:
            raise ZeroVectorError("cls has zero norm")
        if (_row_norms(tokens.features) == 0.0).any():
            raise ZeroVectorError("a feature row has zero norm")
    if cls_sq == 0.0:
        raw = np.zeros(tokens.n_tokens, dtype=tokens.features.dtype)
    else:
        ucls = tokens.cls / np.float32(np.sqrt(cls_sq))
        raw = np.clip(_matvec(tokens.unit_features, ucls), -1.0, 1.0)
    return ImportanceVector(raw=raw)


def normalize_importance(raw, epsilon: float) -> np.ndarray:
    """Min-max normalize raw attention into [0, 1).

    ``out[i] = (raw[i] - min) / (max - min + epsilon)``.  The epsilon term
    keeps constant inputs well-defined (they map to all zeros) and pushes the
    maximum slightly below 1.  Ordering of ``raw`` is preserved exactly.
    """
    if not (epsilon > 0.0):
        raise DomainError(f"epsilon must be positive, got {epsilon!r}")
    r = np.asarray(raw, dtype=np.float64)
    if r.ndim != 1 or r.size < 1:
        raise ShapeMismatchError("raw must be a non-empty 1-D vector")
    if not np.isfinite(r).all():
        raise DomainError("raw contains non-finite values")
    lo = float(r.min())
    span = float(r.max()) - lo
    return (r - lo) / (span + epsilon)


def cosine_matrix(a, b) -> np.ndarray:
    """Pairwise cosine similarity between the rows of two matrices.

    Zero-norm rows behave as cosine 0 against everything.  Entries are
    clamped to [-1, 1].  When ``a`` and ``b`` are the same object the result
    is made exactly symmetric.
    """
    am = _as_float_matrix(a, "a")
    bm = am if b is a else _as_float_matrix(b, "b")
    if am.shape[1] != bm.shape[1]:
        raise ShapeMismatchError(
            f"column counts differ: {am.shape[1]} vs {bm.shape[1]}"
        )
    ua = unit_rows(am)
    ub = ua if bm is am else unit_rows(bm)
    out = _gram(ua, ub)
    if bm is am:
        out = np.triu(out) + np.triu(out, 1).T
    return np.clip(out, -1.0, 1.0)


def frame_importance(
    tokens: TokenSet, epsilon: float = 1e-6, zero_norm: str = "neutral"
) -> ImportanceVector:
    """Raw plus normalized base importance for one frame.

    Uses the frame's dump-provided attention when present, otherwise derives
    it from the aggregate token via :func:`cls_attention`.
    """
    if tokens.raw_attention is not None:
        raw = tokens.raw_attention
    else:
        raw = cls_attention(tokens, zero_norm=zero_norm).raw
    return ImportanceVector(raw=raw, base=normalize_importance(raw, epsilon))
