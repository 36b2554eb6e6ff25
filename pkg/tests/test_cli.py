import json
import struct

import numpy as np
import pytest

from stprune import TokenSet, duplicated_cluster_frame, read_selection_file, write_dump
from stprune.cli import main
from stprune.dumps import MAGIC


@pytest.fixture()
def episode_dump(tmp_path):
    path = tmp_path / "ep.tok"
    code = main(
        ["gen", "--output", str(path), "--frames", "3", "--n", "729", "--dim", "16", "--seed", "7"]
    )
    assert code == 0
    return path


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert capsys.readouterr().out.strip() == "st-prune 0.1.0"


class TestPruneCommand:
    def test_table_budget_selection_lengths(self, episode_dump, tmp_path):
        out = tmp_path / "sel.json"
        code = main(
            ["prune", "--input", str(episode_dump), "--ratio", "0.9", "--strategy", "amm",
             "--output", str(out)]
        )
        assert code == 0
        payload = read_selection_file(out)
        assert len(payload["frames"]) == 3
        for rec in payload["frames"]:
            assert rec["budget"] == 72
            assert len(rec["indices"]) == 72
            assert len(rec["step_scores"]) == 72
        assert payload["frames"][-1]["role"] == "current"
        assert payload["stats"]["retained_tokens"] == 3 * 72
        assert payload["stats"]["original_tokens"] == 3 * 729

    def test_flag_conflict_both(self, episode_dump, tmp_path):
        code = main(
            ["prune", "--input", str(episode_dump), "--ratio", "0.9", "--budget", "72",
             "--output", str(tmp_path / "x.json")]
        )
        assert code == 3

    def test_flag_conflict_neither(self, episode_dump, tmp_path):
        code = main(["prune", "--input", str(episode_dump), "--output", str(tmp_path / "x.json")])
        assert code == 3

    def test_malformed_dump_exit_2(self, tmp_path):
        bad = tmp_path / "bad.tok"
        bad.write_bytes(b"garbage bytes that are not a dump")
        code = main(["prune", "--input", str(bad), "--ratio", "0.5", "--output", str(tmp_path / "x.json")])
        assert code == 2
        assert not (tmp_path / "x.json").exists()

    def test_truncated_dump_exit_2_no_partial_output(self, episode_dump, tmp_path):
        blob = episode_dump.read_bytes()
        cut = tmp_path / "cut.tok"
        cut.write_bytes(blob[: len(blob) // 2])
        out = tmp_path / "x.json"
        code = main(["prune", "--input", str(cut), "--ratio", "0.5", "--output", str(out)])
        assert code == 2
        assert not out.exists()

    def test_dimension_mismatch_exit_4(self, tmp_path):
        def frame_bytes(n, d):
            return (
                struct.pack("<IIB", n, d, 0)
                + np.ones(n * d, dtype="<f4").tobytes()
                + np.ones(d, dtype="<f4").tobytes()
            )

        mixed = tmp_path / "mixed.tok"
        mixed.write_bytes(MAGIC + struct.pack("<I", 2) + frame_bytes(3, 4) + frame_bytes(3, 5))
        code = main(["prune", "--input", str(mixed), "--budget", "2", "--output", str(tmp_path / "x.json")])
        assert code == 4

    def test_frame_mode_tolerates_mixed_widths(self, tmp_path):
        def frame_bytes(n, d):
            return (
                struct.pack("<IIB", n, d, 0)
                + np.random.default_rng(d).standard_normal(n * d).astype("<f4").tobytes()
                + np.ones(d, dtype="<f4").tobytes()
            )

        mixed = tmp_path / "mixed.tok"
        mixed.write_bytes(MAGIC + struct.pack("<I", 2) + frame_bytes(6, 4) + frame_bytes(6, 5))
        out = tmp_path / "sel.json"
        code = main(["prune", "--input", str(mixed), "--budget", "2", "--mode", "frame", "--output", str(out)])
        assert code == 0
        payload = read_selection_file(out)
        assert [r["role"] for r in payload["frames"]] == ["frame", "frame"]

    def test_byte_identical_reruns(self, episode_dump, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        args = ["prune", "--input", str(episode_dump), "--ratio", "0.8"]
        assert main(args + ["--output", str(a)]) == 0
        assert main(args + ["--output", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_byte_identical_across_thread_widths(self, episode_dump, tmp_path, monkeypatch):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        args = ["prune", "--input", str(episode_dump), "--ratio", "0.8"]
        monkeypatch.setenv("ST_PRUNE_THREADS", "1")
        assert main(args + ["--output", str(a)]) == 0
        monkeypatch.setenv("ST_PRUNE_THREADS", "3")
        assert main(args + ["--output", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_timing_flag_controls_stats_field(self, episode_dump, tmp_path):
        out = tmp_path / "sel.json"
        main(["prune", "--input", str(episode_dump), "--ratio", "0.9", "--output", str(out)])
        assert "prune_time_us" not in read_selection_file(out)["stats"]
        main(["prune", "--input", str(episode_dump), "--ratio", "0.9", "--timing", "--output", str(out)])
        assert read_selection_file(out)["stats"]["prune_time_us"] >= 0

    def test_empty_history_single_frame(self, tmp_path):
        path = tmp_path / "one.tok"
        assert main(["gen", "--output", str(path), "--frames", "1", "--n", "50", "--dim", "8"]) == 0
        out = tmp_path / "sel.json"
        assert main(["prune", "--input", str(path), "--ratio", "0.5", "--output", str(out)]) == 0
        payload = read_selection_file(out)
        assert len(payload["frames"]) == 1
        assert payload["frames"][0]["role"] == "current"

    def test_text_and_binary_dumps_agree(self, tmp_path):
        bin_path, txt_path = tmp_path / "ep.tok", tmp_path / "ep.jsonl"
        common = ["gen", "--frames", "2", "--n", "64", "--dim", "8", "--seed", "3"]
        assert main(common + ["--output", str(bin_path)]) == 0
        assert main(common + ["--output", str(txt_path), "--format", "text"]) == 0
        out_a, out_b = tmp_path / "a.json", tmp_path / "b.json"
        assert main(["prune", "--input", str(bin_path), "--ratio", "0.7", "--output", str(out_a)]) == 0
        assert main(["prune", "--input", str(txt_path), "--ratio", "0.7", "--output", str(out_b)]) == 0
        sa, sb = read_selection_file(out_a), read_selection_file(out_b)
        assert sa["frames"] == sb["frames"]

    def test_merge_flag_does_not_change_indices(self, episode_dump, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        assert main(["prune", "--input", str(episode_dump), "--ratio", "0.9", "--output", str(a)]) == 0
        assert main(["prune", "--input", str(episode_dump), "--ratio", "0.9", "--merge", "--output", str(b)]) == 0
        sa, sb = read_selection_file(a), read_selection_file(b)
        for ra, rb in zip(sa["frames"], sb["frames"]):
            assert ra["indices"] == rb["indices"]


class TestSweepCommand:
    def test_row_count_and_columns(self, episode_dump, tmp_path):
        out = tmp_path / "sweep.tsv"
        code = main(["sweep", "--input", str(episode_dump), "--output", str(out)])
        assert code == 0
        lines = out.read_text().strip().splitlines()
        header, rows = lines[0], lines[1:]
        assert header.split("\t") == [
            "strategy", "ratio", "frames", "retained", "importance_mass", "coverage",
        ]
        assert len(rows) == 4 * 3  # default strategies x default ratios

    def test_topk_maximizes_importance_mass(self, episode_dump, tmp_path):
        out = tmp_path / "sweep.tsv"
        assert main(["sweep", "--input", str(episode_dump), "--output", str(out)]) == 0
        rows = [ln.split("\t") for ln in out.read_text().strip().splitlines()[1:]]
        by_ratio = {}
        for strategy, ratio, _, _, mass, cov in rows:
            by_ratio.setdefault(ratio, {})[strategy] = (float(mass), float(cov))
        for ratio, per in by_ratio.items():
            topk_mass = per["topk"][0]
            assert all(topk_mass >= mass for mass, _ in per.values())

    def test_amm_beats_topk_coverage_on_duplicated_fixture(self, tmp_path):
        frames = [duplicated_cluster_frame(n=120, dim=24, seed=s, n_duplicates=12, frame_id=s) for s in range(3)]
        dump = tmp_path / "dup.tok"
        write_dump(dump, frames)
        out = tmp_path / "sweep.tsv"
        assert main(["sweep", "--input", str(dump), "--strategies", "amm,topk", "--ratios", "0.9", "--output", str(out)]) == 0
        rows = {r.split("\t")[0]: r.split("\t") for r in out.read_text().strip().splitlines()[1:]}
        assert float(rows["amm"][5]) > float(rows["topk"][5])

    def test_unknown_strategy_exit_2(self, episode_dump):
        assert main(["sweep", "--input", str(episode_dump), "--strategies", "amm,nope"]) == 2

    def test_deterministic_output(self, episode_dump, tmp_path):
        a, b = tmp_path / "a.tsv", tmp_path / "b.tsv"
        assert main(["sweep", "--input", str(episode_dump), "--output", str(a)]) == 0
        assert main(["sweep", "--input", str(episode_dump), "--output", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()


class TestBenchCommand:
    def test_single_iteration_p95_equals_median(self, capsys):
        code = main(
            ["bench", "--n", "64", "--dim", "16", "--budget", "8", "--iters", "1",
             "--warmup", "0", "--strategies", "amm"]
        )
        assert code == 0
        lines = capsys.readouterr().out.strip().splitlines()
        row = [ln for ln in lines if ln.startswith("amm\t")][0].split("\t")
        assert row[1] == row[2]  # median == p95

    def test_budget_equal_n_still_reports(self, capsys):
        code = main(
            ["bench", "--n", "32", "--dim", "8", "--budget", "32", "--iters", "2",
             "--warmup", "0", "--strategies", "amm,maxmin"]
        )
        assert code == 0
        out = capsys.readouterr().out
        assert "k=32" in out
        assert len([ln for ln in out.splitlines() if "\t" in ln and not ln.startswith("strategy")]) == 2

    def test_conflicting_budget_and_ratio(self):
        assert main(["bench", "--budget", "8", "--ratio", "0.5", "--iters", "1"]) == 3

    def test_unknown_strategy(self):
        assert main(["bench", "--strategies", "nope", "--iters", "1"]) == 2


class TestGenCommand:
    def test_deterministic_files(self, tmp_path):
        a, b = tmp_path / "a.tok", tmp_path / "b.tok"
        args = ["gen", "--frames", "2", "--n", "81", "--dim", "8", "--seed", "9"]
        assert main(args + ["--output", str(a)]) == 0
        assert main(args + ["--output", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()
        assert (tmp_path / "a.tok.meta.json").read_bytes() == (tmp_path / "b.tok.meta.json").read_bytes()

    def test_meta_describes_clusters(self, tmp_path):
        path = tmp_path / "ep.tok"
        assert main(["gen", "--output", str(path), "--frames", "2", "--n", "40", "--dim", "8"]) == 0
        meta = json.loads((tmp_path / "ep.tok.meta.json").read_text())
        assert meta["clusters"] == 5
        assert len(meta["frames"]) == 2
        assert len(meta["frames"][0]["cluster_ids"]) == 40

    def test_rejects_zero_tokens(self, tmp_path):
        assert main(["gen", "--output", str(tmp_path / "x.tok"), "--n", "0"]) == 2

    def test_rejects_bad_clusters(self, tmp_path):
        assert main(["gen", "--output", str(tmp_path / "x.tok"), "--n", "4", "--clusters", "9"]) == 2

    def test_with_attention_round_trips(self, tmp_path):
        path = tmp_path / "attn.tok"
        assert main(["gen", "--output", str(path), "--n", "30", "--dim", "8", "--with-attention"]) == 0
        from stprune import read_dump

        frames = read_dump(path)
        assert frames[0].raw_attention is not None
        assert frames[0].raw_attention.shape == (30,)
