"""Training-free spatio-temporal vision-token pruning.

Selects a compact, high-importance, mutually distinct subset of a frame's
vision tokens, and compresses history-frame token memories against the
retained current-frame tokens.  Everything operates on token-feature dumps:
no model weights, no GPU, bit-deterministic by default.
"""

__version__ = "0.1.0"

from .core import (
    STRATEGIES,
    ImportanceVector,
    PruneConfig,
    TokenSet,
    cls_attention,
    cosine_matrix,
    fast_path_enabled,
    frame_importance,
    normalize_importance,
    set_fast_path,
    unit_rows,
)
from .dumps import read_dump, read_selection_file, write_dump, write_selection_file
from .errors import (
    DomainError,
    DumpFormatError,
    EmptySelectionError,
    LengthMismatchError,
    PruneError,
    ShapeMismatchError,
    ZeroVectorError,
)
from .memory import MemoryPool, QuerySet, prune_history, reweight, st_relevance
from .metrics import coverage, importance_mass
from .pipeline import (
    Episode,
    EpisodeStats,
    EpisodeStream,
    PrunedEpisode,
    budget_from_ratio,
    estimate_flops,
    merge_unselected,
    prune_episode,
    prune_frame,
    resolve_budget,
    select_with_strategy,
)
from .selector import (
    SelectionResult,
    amm_oracle,
    amm_select,
    diversity_only_select,
    maxmin_baseline,
    semantics_only_select,
    topk_baseline,
)
from .synth import (
    clustered_episode,
    clustered_frame,
    duplicated_cluster_frame,
    random_tokens,
)

__all__ = [
    "__version__",
    "STRATEGIES",
    "TokenSet",
    "ImportanceVector",
    "PruneConfig",
    "SelectionResult",
    "QuerySet",
    "MemoryPool",
    "Episode",
    "PrunedEpisode",
    "EpisodeStats",
    "EpisodeStream",
    "cls_attention",
    "normalize_importance",
    "cosine_matrix",
    "unit_rows",
    "frame_importance",
    "set_fast_path",
    "fast_path_enabled",
    "amm_select",
    "amm_oracle",
    "diversity_only_select",
    "semantics_only_select",
    "topk_baseline",
    "maxmin_baseline",
    "st_relevance",
    "reweight",
    "prune_history",
    "budget_from_ratio",
    "resolve_budget",
    "select_with_strategy",
    "prune_frame",
    "prune_episode",
    "merge_unselected",
    "estimate_flops",
    "importance_mass",
    "coverage",
    "random_tokens",
    "clustered_frame",
    "clustered_episode",
    "duplicated_cluster_frame",
    "read_dump",
    "write_dump",
    "read_selection_file",
    "write_selection_file",
    "PruneError",
    "ShapeMismatchError",
    "LengthMismatchError",
    "DomainError",
    "ZeroVectorError",
    "DumpFormatError",
    "EmptySelectionError",
]
