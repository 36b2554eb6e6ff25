"""Seeded synthetic token generators, so everything runs without a model.

Frames are Gaussian cluster mixtures with a planted salient cluster: the
aggregate (CLS) vector points mostly at cluster 0, so attention-derived
importance concentrates there while the remaining clusters supply graded
background saliency.  ``duplicated_cluster_frame`` builds the adversarial
fixture where the highest-importance tokens are exact duplicates.
"""

from __future__ import annotations

import numpy as np

from .core import TokenSet
from .errors import DomainError

__all__ = [
    "random_tokens",
    "clustered_frame",
    "clustered_episode",
    "duplicated_cluster_frame",
]


def _check_dims(n: int, dim: int):
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise DomainError(f"token count must be a positive integer, got {n!r}")
    if not isinstance(dim, (int, np.integer)) or dim < 1:
        raise DomainError(f"feature width must be a positive integer, got {dim!r}")


def random_tokens(n: int, dim: int, seed: int, frame_id: int = 0) -> TokenSet:
    """Plain Gaussian tokens; CLS is the mean direction plus a little jitter."""
    _check_dims(n, dim)
    rng = np.random.default_rng(seed)
    feats = rng.standard_normal((n, dim))
    cls = feats.mean(axis=0) + 0.1 * rng.standard_normal(dim)
    return TokenSet(features=feats, cls=cls, frame_id=frame_id, timestamp=frame_id)


def clustered_frame(
    n: int,
    dim: int,
    seed: int,
    clusters: int = 5,
    spread: float = 0.06,
    frame_id: int = 0,
    with_attention: bool = False,
) -> tuple[TokenSet, np.ndarray]:
    """One frame of ``clusters`` Gaussian clusters with cluster 0 salient.

    Returns the frame plus each token's cluster id.  ``spread`` is the
    within-cluster noise scale relative to the unit-norm centers; the default
    keeps within-cluster cosines high so clusters read as redundant regions.
    With ``with_attention`` the frame carries a pre-computed attention vector
    (the planted saliency plus small noise) instead of relying on CLS cosine.
    """
    _check_dims(n, dim)
    if clusters < 1 or clusters > n:
        raise DomainError(f"clusters must lie in [1, n], got {clusters!r}")
    rng = np.random.default_rng(seed)
    centers = rng.standard_normal((clusters, dim))
    centers /= np.linalg.norm(centers, axis=1, keepdims=True)
    cluster_ids = np.arange(n) % clusters
    rng.shuffle(cluster_ids)
    feats = centers[cluster_ids] + spread * rng.standard_normal((n, dim))
    # aggregate vector: mostly the salient cluster, graded leakage elsewhere
    weights = np.concatenate(([1.0], rng.uniform(0.1, 0.35, size=clusters - 1)))
    cls = weights @ centers + 0.02 * rng.standard_normal(dim)
    raw = None
    if with_attention:
        saliency = np.where(cluster_ids == 0, 1.0, rng.uniform(0.05, 0.5, size=n))
        raw = (saliency + 0.01 * rng.standard_normal(n)).astype(np.float32)
    tokens = TokenSet(
        features=feats, cls=cls, frame_id=frame_id, timestamp=frame_id, raw_attention=raw
    )
    return tokens, cluster_ids


def clustered_episode(
    frames: int,
    n: int,
    dim: int,
    seed: int,
    clusters: int = 5,
    spread: float = 0.06,
    with_attention: bool = False,
) -> tuple[list[TokenSet], dict]:
    """A sequence of clustered frames plus planted-cluster metadata."""
    if not isinstance(frames, (int, np.integer)) or frames < 1:
        raise DomainError(f"frame count must be a positive integer, got {frames!r}")
    out = []
    meta_frames = []
    for t in range(frames):
        tokens, ids = clustered_frame(
            n,
            dim,
            seed=seed * 100003 + t,
            clusters=clusters,
            spread=spread,
            frame_id=t,
            with_attention=with_attention,
        )
        out.append(tokens)
        meta_frames.append({"frame_id": t, "salient_cluster": 0, "cluster_ids": ids.tolist()})
    meta = {"seed": int(seed), "clusters": int(clusters), "frames": meta_frames}
    return out, meta


def duplicated_cluster_frame(
    n: int, dim: int, seed: int, n_duplicates: int = 12, frame_id: int = 0
) -> TokenSet:
    """Adversarial fixture: the top-importance tokens are exact duplicates.

    ``n_duplicates`` bit-identical copies of one unit direction sit at
    attention 1 (CLS equals that direction), while the remaining tokens are
    distinct directions with graded attention strictly below 1.  Attention
    top-k therefore spends its whole budget inside the duplicate cluster,
    while a diversity-aware selector covers the rest of the frame.
    """
    _check_dims(n, dim)
    if dim < 2:
        raise DomainError("duplicated_cluster_frame needs dim >= 2")
    if not (1 <= n_duplicates < n):
        raise DomainError(f"n_duplicates must lie in [1, n), got {n_duplicates!r}")
    rng = np.random.default_rng(seed)
    hot = rng.standard_normal(dim)
    hot /= np.linalg.norm(hot)
    n_rest = n - n_duplicates
    raw = rng.standard_normal((n_rest, dim))
    ortho = raw - np.outer(raw @ hot, hot)  # exactly orthogonal to the hot direction
    ortho /= np.linalg.norm(ortho, axis=1, keepdims=True)
    tilt = rng.uniform(0.05, 0.45, size=n_rest)  # cosine-to-hot in (0.05, 0.41)
    rest = ortho + tilt[:, None] * hot
    feats = np.vstack([np.tile(hot, (n_duplicates, 1)), rest])
    return TokenSet(features=feats, cls=hot, frame_id=frame_id, timestamp=frame_id)
