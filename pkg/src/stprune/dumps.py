"""Token-dump and selection-file formats.

Binary dump layout (all integers little-endian):

    8 bytes   magic ``STPRUNE1``
    uint32    frame count F
    per frame:
        uint32 N, uint32 D, uint8 flags (bit 0: raw attention present)
        N*D float32 row-major patch features
        D   float32 aggregate (CLS) vector
        N   float32 raw attention (only when flagged)

Counts are validated against the remaining file size before any
payload-proportional allocation.  A human-readable text twin (JSON lines: a
header object, then one object per frame with the same fields) is accepted
interchangeably and exists for fixtures and debugging.

Selection files are a single JSON document with per-frame index/score records
plus an episode stats block; serialization is deterministic, so identical
inputs produce byte-identical files.
"""

from __future__ import annotations

import json
import os
import struct
import sys
from pathlib import Path

import numpy as np

from .core import TokenSet
from .errors import DumpFormatError, PruneError, ShapeMismatchError

__all__ = [
    "MAGIC",
    "write_dump",
    "read_dump",
    "write_selection_file",
    "read_selection_file",
    "selection_to_text",
]

MAGIC = b"STPRUNE1"
_FRAME_HEADER = struct.Struct("<IIB")


def _check_shared_dim(frames):
    if not frames:
        raise DumpFormatError("a dump must contain at least one frame")
    d = frames[0].dim
    for i, f in enumerate(frames):
        if f.dim != d:
            raise ShapeMismatchError(f"frame {i} width {f.dim} != frame 0 width {d}")


def write_dump(path, frames, fmt: str = "binary") -> None:
    """Write frames to ``path`` in binary or text format (atomic replace)."""
    frames = list(frames)
    _check_shared_dim(frames)
    if fmt == "binary":
        payload = _to_binary(frames)
    elif fmt == "text":
        payload = _to_text(frames).encode("utf-8")
    else:
        raise DumpFormatError(f"unknown dump format {fmt!r}")
    _atomic_write_bytes(path, payload)


def _to_binary(frames) -> bytes:
    parts = [MAGIC, struct.pack("<I", len(frames))]
    for f in frames:
        has_attn = f.raw_attention is not None
        parts.append(_FRAME_HEADER.pack(f.n_tokens, f.dim, 1 if has_attn else 0))
        parts.append(np.ascontiguousarray(f.features, dtype="<f4").tobytes())
        parts.append(np.ascontiguousarray(f.cls, dtype="<f4").tobytes())
        if has_attn:
            parts.append(np.ascontiguousarray(f.raw_attention, dtype="<f4").tobytes())
    return b"".join(parts)


def _to_text(frames) -> str:
    lines = [json.dumps({"magic": MAGIC.decode(), "frame_count": len(frames)})]
    for f in frames:
        obj = {
            "n": f.n_tokens,
            "d": f.dim,
            "features": f.features.tolist(),
            "cls": f.cls.tolist(),
            "attention": None if f.raw_attention is None else f.raw_attention.tolist(),
        }
        lines.append(json.dumps(obj))
    return "\n".join(lines) + "\n"


def read_dump(path) -> list[TokenSet]:
    """Read a binary or text dump; frames get positional ids/timestamps.

    Per-frame widths are allowed to differ at this layer so that callers can
    report a dimension mismatch distinctly from file corruption.
    """
    try:
        data = Path(path).read_bytes()
    except OSError as e:
        raise DumpFormatError(f"cannot read dump: {e}") from e
    if data[:8] == MAGIC:
        return _from_binary(data)
    return _from_text(data)


def _from_binary(data: bytes) -> list[TokenSet]:
    off = 8
    if len(data) < off + 4:
        raise DumpFormatError("truncated dump: missing frame count")
    (count,) = struct.unpack_from("<I", data, off)
    off += 4
    if count < 1:
        raise DumpFormatError("dump contains no frames")
    if len(data) - off < count * _FRAME_HEADER.size:
        raise DumpFormatError(f"truncated dump: {count} frames cannot fit")
    frames = []
    for i in range(count):
        if len(data) - off < _FRAME_HEADER.size:
            raise DumpFormatError(f"truncated dump: frame {i} header missing")
        n, d, flags = _FRAME_HEADER.unpack_from(data, off)
        off += _FRAME_HEADER.size
        if n < 1 or d < 1:
            raise DumpFormatError(f"frame {i}: invalid counts n={n}, d={d}")
        if flags & ~1:
            raise DumpFormatError(f"frame {i}: unknown flag bits 0x{flags:02x}")
        has_attn = bool(flags & 1)
        need = 4 * (n * d + d + (n if has_attn else 0))
        if len(data) - off < need:
            raise DumpFormatError(f"truncated dump: frame {i} payload missing")
        feats = np.frombuffer(data, dtype="<f4", count=n * d, offset=off).reshape(n, d)
        off += 4 * n * d
        cls = np.frombuffer(data, dtype="<f4", count=d, offset=off)
        off += 4 * d
        attn = None
        if has_attn:
            attn = np.frombuffer(data, dtype="<f4", count=n, offset=off)
            off += 4 * n
        frames.append(_build_frame(i, feats, cls, attn))
    if off != len(data):
        raise DumpFormatError(f"{len(data) - off} trailing bytes after last frame")
    return frames


def _from_text(data: bytes) -> list[TokenSet]:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as e:
        raise DumpFormatError(f"not a token dump (bad magic, not UTF-8): {e}") from e
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise DumpFormatError("empty dump file")
    header = _parse_json_line(lines[0], "header")
    if header.get("magic") != MAGIC.decode():
        raise DumpFormatError("not a token dump: bad magic")
    count = header.get("frame_count")
    if not isinstance(count, int) or count < 1:
        raise DumpFormatError(f"invalid frame_count {count!r}")
    if len(lines) - 1 != count:
        raise DumpFormatError(f"expected {count} frame records, found {len(lines) - 1}")
    frames = []
    for i, line in enumerate(lines[1:]):
        obj = _parse_json_line(line, f"frame {i}")
        try:
            n, d = int(obj["n"]), int(obj["d"])
            feats = np.asarray(obj["features"], dtype=np.float32)
            cls = np.asarray(obj["cls"], dtype=np.float32)
            attn = obj.get("attention")
            attn = None if attn is None else np.asarray(attn, dtype=np.float32)
        except (KeyError, TypeError, ValueError) as e:
            raise DumpFormatError(f"frame {i}: malformed record ({e})") from e
        if feats.shape != (n, d) or cls.shape != (d,):
            raise DumpFormatError(f"frame {i}: shapes disagree with declared n/d")
        if attn is not None and attn.shape != (n,):
            raise DumpFormatError(f"frame {i}: attention length != n")
        frames.append(_build_frame(i, feats, cls, attn))
    return frames


def _parse_json_line(line: str, what: str) -> dict:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as e:
        raise DumpFormatError(f"{what}: invalid JSON ({e})") from e
    if not isinstance(obj, dict):
        raise DumpFormatError(f"{what}: expected a JSON object")
    return obj


def _build_frame(i: int, feats, cls, attn) -> TokenSet:
    try:
        return TokenSet(
            features=feats, cls=cls, frame_id=i, timestamp=i, raw_attention=attn
        )
    except PruneError as e:
        raise DumpFormatError(f"frame {i}: {e}") from e


def selection_to_text(payload: dict) -> str:
    """Deterministic serialization of a selection payload."""
    return json.dumps(payload, indent=2) + "\n"


def write_selection_file(path, payload: dict) -> None:
    text = selection_to_text(payload)
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        _atomic_write_bytes(path, text.encode("utf-8"))


def read_selection_file(path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise DumpFormatError(f"cannot read selection file: {e}") from e


def _atomic_write_bytes(path, payload: bytes) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(payload)
    os.replace(tmp, path)
