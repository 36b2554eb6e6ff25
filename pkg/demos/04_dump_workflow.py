"""Round-trip the on-disk formats and cross-check library vs CLI results.

Writes a seeded episode dump, prunes it twice (once through the library,
once through the CLI front end), and verifies the selections agree exactly.
"""

import json
import subprocess
import sys
import tempfile
from pathlib import Path

from stprune import (
    Episode,
    PruneConfig,
    clustered_episode,
    prune_episode,
    read_dump,
    write_dump,
)

with tempfile.TemporaryDirectory() as td:
    dump_path = Path(td) / "episode.tok"
    sel_path = Path(td) / "selection.json"

    frames, meta = clustered_episode(frames=4, n=243, dim=32, seed=21)
    write_dump(dump_path, frames)
    print(f"wrote {dump_path.stat().st_size} bytes ({len(frames)} frames of 243x32)")

    back = read_dump(dump_path)
    assert all((a.features == b.features).all() for a, b in zip(frames, back))
    print("binary round-trip: bit-exact")

    config = PruneConfig(ratio=0.9)
    lib = prune_episode(Episode(history=tuple(back[:-1]), current=back[-1], config=config))

    cmd = [
        sys.executable, "-m", "stprune", "prune",
        "--input", str(dump_path), "--ratio", "0.9", "--output", str(sel_path),
    ]
    subprocess.run(cmd, check=True, capture_output=True)
    payload = json.loads(sel_path.read_text())

    cli_current = tuple(payload["frames"][-1]["indices"])
    assert cli_current == lib.current_selection.indices
    for rec, sel in zip(payload["frames"], lib.memory.selections):
        assert tuple(rec["indices"]) == sel.indices
    print("library vs CLI: identical index sequences")
    print(f"retained {payload['stats']['retained_tokens']} of {payload['stats']['original_tokens']} tokens; "
          f"flop ratio {payload['stats']['flop_ratio']:.4f}")
