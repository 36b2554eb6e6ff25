"""Prune a single frame: attention scores, then greedy selection.

Builds one synthetic frame of clustered tokens where cluster 0 carries the
salient content, derives per-token importance from the aggregate-token
cosine, and compares what each selection strategy keeps.
"""

import numpy as np

from stprune import (
    STRATEGIES,
    clustered_frame,
    coverage,
    frame_importance,
    importance_mass,
    resolve_budget,
    select_with_strategy,
    PruneConfig,
)

tokens, cluster_ids = clustered_frame(n=200, dim=64, seed=42, clusters=5)
imp = frame_importance(tokens)

print(f"frame: {tokens.n_tokens} tokens x {tokens.dim} dims, 5 planted clusters")
print(f"attention range: [{imp.raw.min():+.3f}, {imp.raw.max():+.3f}]")
print(f"mean importance by cluster:")
for c in range(5):
    mask = cluster_ids == c
    tag = " (salient)" if c == 0 else ""
    print(f"  cluster {c}: {imp.base[mask].mean():.3f}{tag}")

k = resolve_budget(PruneConfig(ratio=0.9), tokens.n_tokens)
print(f"\nretaining {k} of {tokens.n_tokens} tokens (90% pruned):\n")
print(f"{'strategy':<16} {'clusters hit':<14} {'importance mass':<17} coverage")
for strategy in STRATEGIES:
    sel = select_with_strategy(tokens, imp.base, k, strategy)
    hit = len(set(cluster_ids[list(sel.indices)]))
    mass = importance_mass(imp.base, sel.indices)
    cov = coverage(tokens, sel.indices)
    print(f"{strategy:<16} {hit}/5{'':<10} {mass:<17.3f} {cov:.3f}")

sel = select_with_strategy(tokens, imp.base, k, "amm")
print("\nfirst five greedy picks (index, cluster, step objective):")
for i, s in list(zip(sel.indices, sel.step_scores))[:5]:
    print(f"  token {i:>3}  cluster {cluster_ids[i]}  objective {s:.4f}")
