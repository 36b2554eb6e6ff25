import json
import struct

import numpy as np
import pytest

from stprune import (
    DumpFormatError,
    ShapeMismatchError,
    TokenSet,
    read_dump,
    read_selection_file,
    write_dump,
    write_selection_file,
)
from stprune.dumps import MAGIC, selection_to_text


def _frames(seed=0, with_attention=True):
    rng = np.random.default_rng(seed)
    out = []
    for t in range(3):
        attn = rng.uniform(-1, 1, size=10).astype(np.float32) if (with_attention and t == 1) else None
        out.append(
            TokenSet(
                features=rng.standard_normal((10, 6)).astype(np.float32),
                cls=rng.standard_normal(6).astype(np.float32),
                frame_id=t,
                timestamp=t,
                raw_attention=attn,
            )
        )
    return out


class TestBinaryDump:
    def test_round_trip_bit_exact(self, tmp_path):
        frames = _frames()
        path = tmp_path / "ep.tok"
        write_dump(path, frames)
        back = read_dump(path)
        assert len(back) == 3
        for orig, rt in zip(frames, back):
            assert np.array_equal(orig.features, rt.features)
            assert np.array_equal(orig.cls, rt.cls)
            if orig.raw_attention is None:
                assert rt.raw_attention is None
            else:
                assert np.array_equal(orig.raw_attention, rt.raw_attention)
        assert [f.frame_id for f in back] == [0, 1, 2]
        assert [f.timestamp for f in back] == [0, 1, 2]

    def test_write_is_deterministic(self, tmp_path):
        frames = _frames()
        a, b = tmp_path / "a.tok", tmp_path / "b.tok"
        write_dump(a, frames)
        write_dump(b, frames)
        assert a.read_bytes() == b.read_bytes()

    def test_bad_magic(self, tmp_path):
        p = tmp_path / "bad.tok"
        p.write_bytes(b"NOTMAGIC" + b"\x00" * 32)
        with pytest.raises(DumpFormatError):
            read_dump(p)

    def test_truncations_all_fail_cleanly(self, tmp_path):
        p = tmp_path / "full.tok"
        write_dump(p, _frames())
        blob = p.read_bytes()
        for cut in (4, 9, 12, 15, 20, len(blob) // 2, len(blob) - 3):
            q = tmp_path / f"cut{cut}.tok"
            q.write_bytes(blob[:cut])
            with pytest.raises(DumpFormatError):
                read_dump(q)

    def test_trailing_garbage_rejected(self, tmp_path):
        p = tmp_path / "full.tok"
        write_dump(p, _frames())
        q = tmp_path / "trail.tok"
        q.write_bytes(p.read_bytes() + b"zz")
        with pytest.raises(DumpFormatError):
            read_dump(q)

    def test_zero_counts_rejected(self, tmp_path):
        payload = MAGIC + struct.pack("<I", 1) + struct.pack("<IIB", 0, 4, 0)
        p = tmp_path / "zero.tok"
        p.write_bytes(payload)
        with pytest.raises(DumpFormatError):
            read_dump(p)

    def test_unknown_flags_rejected(self, tmp_path):
        payload = (
            MAGIC
            + struct.pack("<I", 1)
            + struct.pack("<IIB", 1, 1, 0x02)
            + struct.pack("<f", 1.0) * 2
        )
        p = tmp_path / "flags.tok"
        p.write_bytes(payload)
        with pytest.raises(DumpFormatError):
            read_dump(p)

    def test_oversized_count_fails_before_allocation(self, tmp_path):
        payload = MAGIC + struct.pack("<I", 0xFFFFFFFF) + b"\x00" * 16
        p = tmp_path / "huge.tok"
        p.write_bytes(payload)
        with pytest.raises(DumpFormatError):
            read_dump(p)

    def test_non_finite_payload_rejected(self, tmp_path):
        feats = np.array([[np.nan, 1.0]], dtype="<f4")
        payload = (
            MAGIC
            + struct.pack("<I", 1)
            + struct.pack("<IIB", 1, 2, 0)
            + feats.tobytes()
            + np.zeros(2, dtype="<f4").tobytes()
        )
        p = tmp_path / "nan.tok"
        p.write_bytes(payload)
        with pytest.raises(DumpFormatError):
            read_dump(p)

    def test_writer_rejects_mixed_widths(self, tmp_path):
        frames = [
            TokenSet(features=np.ones((2, 3)), cls=np.ones(3)),
            TokenSet(features=np.ones((2, 4)), cls=np.ones(4)),
        ]
        with pytest.raises(ShapeMismatchError):
            write_dump(tmp_path / "mixed.tok", frames)

    def test_reader_accepts_per_frame_widths(self, tmp_path):
        # handcrafted mixed-width dump: the reader is per-frame tolerant so
        # that episode assembly can report the mismatch distinctly
        def frame_bytes(n, d):
            return (
                struct.pack("<IIB", n, d, 0)
                + np.ones(n * d, dtype="<f4").tobytes()
                + np.ones(d, dtype="<f4").tobytes()
            )

        payload = MAGIC + struct.pack("<I", 2) + frame_bytes(2, 3) + frame_bytes(2, 4)
        p = tmp_path / "mixed.tok"
        p.write_bytes(payload)
        frames = read_dump(p)
        assert frames[0].dim == 3 and frames[1].dim == 4


class TestTextDump:
    def test_round_trip_value_exact(self, tmp_path):
        frames = _frames(seed=5)
        path = tmp_path / "ep.jsonl"
        write_dump(path, frames, fmt="text")
        back = read_dump(path)
        for orig, rt in zip(frames, back):
            assert np.array_equal(orig.features, rt.features)
            assert np.array_equal(orig.cls, rt.cls)
            if orig.raw_attention is None:
                assert rt.raw_attention is None
            else:
                assert np.array_equal(orig.raw_attention, rt.raw_attention)

    def test_header_checked(self, tmp_path):
        p = tmp_path / "bad.jsonl"
        p.write_text('{"magic": "WRONG", "frame_count": 1}\n{}\n')
        with pytest.raises(DumpFormatError):
            read_dump(p)

    def test_frame_count_mismatch(self, tmp_path):
        frames = _frames()
        p = tmp_path / "ep.jsonl"
        write_dump(p, frames, fmt="text")
        lines = p.read_text().splitlines()
        p.write_text("\n".join(lines[:-1]) + "\n")
        with pytest.raises(DumpFormatError):
            read_dump(p)

    def test_malformed_json_line(self, tmp_path):
        p = tmp_path / "bad.jsonl"
        p.write_text('{"magic": "STPRUNE1", "frame_count": 1}\nnot json\n')
        with pytest.raises(DumpFormatError):
            read_dump(p)

    def test_shape_disagreement(self, tmp_path):
        p = tmp_path / "bad.jsonl"
        header = json.dumps({"magic": "STPRUNE1", "frame_count": 1})
        frame = json.dumps({"n": 2, "d": 2, "features": [[1.0, 2.0]], "cls": [1.0, 0.0], "attention": None})
        p.write_text(header + "\n" + frame + "\n")
        with pytest.raises(DumpFormatError):
            read_dump(p)


class TestSelectionFile:
    def test_round_trip_lossless(self, tmp_path):
        payload = {
            "format": "stprune-selection/1",
            "config": {"strategy": "amm", "budget": 72, "ratio": None},
            "frames": [
                {
                    "frame_id": 0,
                    "role": "current",
                    "strategy": "amm",
                    "budget": 72,
                    "indices": [5, 1, 9],
                    "step_scores": [0.9999995, 0.25, 1e-12],
                }
            ],
            "stats": {"original_tokens": 729, "retained_tokens": 72, "flop_ratio": 72 / 729},
        }
        p = tmp_path / "sel.json"
        write_selection_file(p, payload)
        back = read_selection_file(p)
        assert back == payload
        assert back["frames"][0]["indices"] == [5, 1, 9]
        assert back["frames"][0]["budget"] == 72

    def test_serialization_deterministic(self):
        payload = {"a": 1, "b": [1.5, 2.25], "c": {"d": True}}
        assert selection_to_text(payload) == selection_to_text({"a": 1, "b": [1.5, 2.25], "c": {"d": True}})
