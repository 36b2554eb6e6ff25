"""Compress history-frame memories against the pruned current frame.

An episode walks through a scene: early frames share some content with the
final view and add some that has drifted away.  Query-guided re-weighting
keeps history tokens that still matter for the current view and drops the
rest, then the same greedy selection builds the memory pool.
"""

import numpy as np

from stprune import Episode, PruneConfig, TokenSet, prune_episode

rng = np.random.default_rng(7)
n, d, n_frames = 120, 48, 6

# shared scene content plus per-frame drift that grows with age
scene = rng.standard_normal((n // 2, d))
frames = []
for t in range(n_frames):
    drift = rng.standard_normal((n - n // 2, d)) * (1.0 + 0.5 * (n_frames - t))
    feats = np.vstack([scene + 0.1 * rng.standard_normal(scene.shape), drift])
    cls = scene.mean(axis=0) + 0.05 * rng.standard_normal(d)
    frames.append(TokenSet(features=feats, cls=cls, frame_id=t, timestamp=t))

config = PruneConfig(ratio=0.8, alpha=0.5)
result = prune_episode(Episode(history=tuple(frames[:-1]), current=frames[-1], config=config))

print(f"episode: {n_frames} frames x {n} tokens, ratio 0.8")
print(f"current frame keeps {len(result.current_selection)} tokens")
print(f"memory pool: {result.memory.total_retained} tokens across {result.memory.n_frames} history frames")
print(f"tokens {result.stats.original_tokens} -> {result.stats.retained_tokens} "
      f"(flop ratio {result.stats.flop_ratio:.3f})\n")

print("history re-weighting (base vs final importance, shared-scene rows):")
for t, imp in enumerate(result.memory.importances):
    shared = slice(0, n // 2)
    drifted = slice(n // 2, n)
    kept = result.memory.selections[t].indices
    kept_shared = sum(1 for i in kept if i < n // 2)
    print(
        f"  frame {t}: shared tokens keep {imp.final[shared].mean() / max(imp.base[shared].mean(), 1e-12):.2f} "
        f"of their importance, drifted keep "
        f"{imp.final[drifted].mean() / max(imp.base[drifted].mean(), 1e-12):.2f}; "
        f"{kept_shared}/{len(kept)} retained tokens are shared-scene"
    )
