"""Retained-set quality proxies computable from token dumps alone.

These stand in for downstream task metrics, which need a full model stack:
``importance_mass`` measures how much attention-derived importance survives
pruning (top-k maximizes it by construction), ``coverage`` measures how well
the retained set represents the dropped tokens geometrically (diversity-aware
strategies win here, especially when high-importance tokens are duplicated).
"""

from __future__ import annotations

import numpy as np

from .core import TokenSet, _gram
from .errors import LengthMismatchError

__all__ = ["importance_mass", "coverage"]


def importance_mass(base, indices) -> float:
    """Fraction of total base importance carried by the retained tokens.

    Defined as 1.0 when the frame carries no importance at all.
    """
    b = np.asarray(base, dtype=np.float64).reshape(-1)
    idx = np.asarray(indices, dtype=np.intp)
    if idx.size and idx.max() >= b.size:
        raise LengthMismatchError("selection references tokens outside the importance vector")
    total = float(b.sum())
    if total == 0.0:
        return 1.0
    return float(b[idx].sum()) / total


def coverage(tokens: TokenSet, indices) -> float:
    """Mean max-cosine of each dropped token to the retained set.

    Defined as 1.0 when nothing was dropped.
    """
    idx = np.asarray(indices, dtype=np.intp)
    keep = np.zeros(tokens.n_tokens, dtype=bool)
    keep[idx] = True
    dropped = np.flatnonzero(~keep)
    if dropped.size == 0:
        return 1.0
    U = tokens.unit_features
    sims = np.clip(_gram(U[dropped], U[idx]), -1.0, 1.0)
    return float(sims.max(axis=1).mean())
