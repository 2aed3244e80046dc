import json
import random

import numpy as np
import pytest

from codediagram.corpus import (
    CorpusManifest,
    FileRecord,
    curate,
    dedup,
    filter_files,
    filter_metadata_rows,
    language_for_path,
    load_metadata,
    scan_directory,
    stratified_split,
)
from codediagram.similarity import (
    _greedy_dedup_numba,
    _greedy_dedup_numpy,
    encode_token_sets,
    greedy_dedup_mask,
    jaccard_unigram,
    numba_enabled,
    tokenize,
)


def record(repo="r", path="a.py", content="x " * 1500, language=None):
    return FileRecord.from_content(repo, path, content, language)


class TestJaccard:
    def test_identical_texts(self):
        assert jaccard_unigram("a b c", "a b c") == 1.0

    def test_disjoint_texts(self):
        assert jaccard_unigram("a b", "c d") == 0.0

    def test_half_overlap(self):
        # {a,b,c} vs {b,c,d}: intersection 2, union 4
        assert jaccard_unigram("a b c", "b c d") == 0.5

    def test_both_empty_count_identical(self):
        assert jaccard_unigram("", "   ") == 1.0

    def test_one_empty(self):
        assert jaccard_unigram("", "a") == 0.0

    def test_token_multiplicity_ignored(self):
        assert jaccard_unigram("a a a b", "a b") == 1.0

    def test_tokenize_whitespace_unigrams(self):
        assert tokenize("  a\tb\nc  ") == ["a", "b", "c"]


class TestEncodeTokenSets:
    def test_layout(self):
        flat, offsets = encode_token_sets(["a b", "b c", ""])
        assert offsets.tolist() == [0, 2, 4, 4]
        assert flat.dtype == np.int64
        sets = [set(flat[offsets[i]:offsets[i + 1]].tolist()) for i in range(3)]
        assert sets[0] & sets[1] and len(sets[0] & sets[1]) == 1
        assert sets[2] == set()

    def test_rows_are_sorted_unique(self):
        flat, offsets = encode_token_sets(["b a b a"])
        row = flat[offsets[0]:offsets[1]]
        assert row.tolist() == sorted(set(row.tolist()))


class TestDedupKernels:
    def corpus(self, rng, count=30):
        words = [f"w{i}" for i in range(40)]
        return [
            " ".join(rng.choices(words, k=rng.randint(0, 60))) for _ in range(count)
        ]

    def test_numba_and_numpy_agree(self):
        rng = random.Random(3)
        for _ in range(10):
            texts = self.corpus(rng)
            tokens, offsets = encode_token_sets(texts)
            for threshold in (0.3, 0.8, 1.0):
                got_nb = _greedy_dedup_numba(tokens, offsets, threshold)
                got_np = _greedy_dedup_numpy(tokens, offsets, threshold)
                for a, b in zip(got_nb, got_np):
                    assert np.array_equal(a, b)

    def test_mask_first_kept_wins(self):
        keep, matched, similarity = greedy_dedup_mask(["a b c", "a b c d", "z"], 0.5)
        assert keep.tolist() == [True, False, True]
        assert matched.tolist() == [-1, 0, -1]
        assert similarity[1] == pytest.approx(0.75)

    def test_threshold_is_inclusive(self):
        # {a,b,c,d} vs {a,b,c,e}: 3/5 = 0.6
        keep, _, _ = greedy_dedup_mask(["a b c d", "a b c e"], 0.6)
        assert keep.tolist() == [True, False]
        keep, _, _ = greedy_dedup_mask(["a b c d", "a b c e"], 0.61)
        assert keep.tolist() == [True, True]

    def test_numba_enabled_reflects_env(self, monkeypatch):
        monkeypatch.delenv("CODEDIAGRAM_DISABLE_NUMBA", raising=False)
        enabled_default = numba_enabled()
        monkeypatch.setenv("CODEDIAGRAM_DISABLE_NUMBA", "1")
        assert numba_enabled() is False
        monkeypatch.setenv("CODEDIAGRAM_DISABLE_NUMBA", "0")
        assert numba_enabled() == enabled_default

    def test_disabled_path_still_correct(self, monkeypatch):
        monkeypatch.setenv("CODEDIAGRAM_DISABLE_NUMBA", "1")
        keep, matched, _ = greedy_dedup_mask(["a b", "a b", "c"], 0.8)
        assert keep.tolist() == [True, False, True]


class TestLanguageDetection:
    @pytest.mark.parametrize(("path", "language"), [
        ("src/x.py", "Python"),
        ("A.JAVA", "Java"),
        ("web/app.tsx", "TypeScript"),
        ("README", "other"),
        ("weird.xyz", "other"),
    ])
    def test_extension_map(self, path, language):
        assert language_for_path(path) == language


class TestFilterFiles:
    def test_closed_interval(self):
        records = [
            record(path="small.py", content="x" * 2999),
            record(path="lo.py", content="x" * 3000),
            record(path="hi.py", content="x" * 15000),
            record(path="big.py", content="x" * 15001),
        ]
        kept = filter_files(records)
        assert [r.path for r in kept] == ["lo.py", "hi.py"]

    def test_ascii_rejection(self):
        records = [
            record(path="ok.py", content="x" * 3000),
            record(path="uni.py", content="é" + "x" * 3000),
        ]
        assert [r.path for r in filter_files(records)] == ["ok.py"]

    def test_non_ascii_allowed_when_disabled(self):
        records = [record(path="uni.py", content="é" + "x" * 3000)]
        assert filter_files(records, ascii_only=False) == records

    def test_custom_bounds(self):
        records = [record(path="tiny.py", content="x" * 10)]
        assert filter_files(records, min_chars=5, max_chars=20) == records


class TestDedupRecords:
    def test_keeps_earliest_by_repo_path(self):
        base = " ".join(f"tok{i}" for i in range(20))
        records = [
            FileRecord.from_content("b_repo", "z.py", base),
            FileRecord.from_content("a_repo", "a.py", base + " extra"),
        ]
        survivors, dropped = dedup(records, threshold=0.8)
        assert [r.repo for r in survivors] == ["a_repo"]
        assert dropped[0].record.repo == "b_repo"
        assert dropped[0].kept.repo == "a_repo"
        assert dropped[0].similarity >= 0.8

    def test_idempotent(self):
        rng = random.Random(11)
        words = [f"tok{i}" for i in range(30)]
        records = [
            FileRecord.from_content("r", f"f{i:03}.py",
                                    " ".join(rng.choices(words, k=40)))
            for i in range(40)
        ]
        survivors, _ = dedup(records, threshold=0.7)
        again, dropped_again = dedup(survivors, threshold=0.7)
        assert again == survivors
        assert dropped_again == []


def synthetic_records(language_counts: dict[str, int]) -> list[FileRecord]:
    ext = {ln: e for e, ln in (
        (".py", "Python"), (".java", "Java"), (".go", "Go"),
        (".rs", "Rust"), (".ts", "TypeScript"), (".rb", "Ruby"),
    )}
    out = []
    for language, count in language_counts.items():
        for i in range(count):
            out.append(
                FileRecord.from_content(
                    "repo", f"{language.lower()}/file{i:04}{ext[language]}",
                    f"content {language} {i} " + "pad " * i,
                )
            )
    return out


class TestStratifiedSplit:
    def test_exact_sizes(self):
        records = synthetic_records({"Python": 60, "Java": 40, "Go": 24})
        manifest = stratified_split(records, sizes=[88, 12, 24], seed=1)
        assert manifest.split_counts() == {"train": 88, "val": 12, "test": 24}
        assert len(manifest.entries) == 124

    def test_deterministic_for_seed(self):
        records = synthetic_records({"Python": 30, "Java": 20})
        one = stratified_split(records, sizes=[20, 5, 5], seed=9)
        two = stratified_split(records, sizes=[20, 5, 5], seed=9)
        assert one.to_json() == two.to_json()

    def test_seed_changes_selection(self):
        records = synthetic_records({"Python": 30, "Java": 20})
        one = stratified_split(records, sizes=[20, 5, 5], seed=1)
        two = stratified_split(records, sizes=[20, 5, 5], seed=2)
        assert one.to_json() != two.to_json()

    def test_language_proportions_roughly_held(self):
        records = synthetic_records({"Python": 80, "Java": 40})
        manifest = stratified_split(records, sizes=[30, 15, 15], seed=3)
        by_language = {}
        for entry in manifest.entries:
            by_language[entry.language] = by_language.get(entry.language, 0) + 1
        assert by_language == {"Python": 40, "Java": 20}

    def test_minority_language_present_in_every_split(self):
        records = synthetic_records({"Python": 100, "Go": 3})
        manifest = stratified_split(records, sizes=[60, 20, 20], seed=5)
        go_splits = {e.split for e in manifest.entries if e.language == "Go"}
        assert go_splits == {"train", "val", "test"}

    def test_two_file_language_is_not_forced(self):
        records = synthetic_records({"Python": 50, "Go": 2})
        manifest = stratified_split(records, sizes=[30, 10, 10], seed=5)
        assert manifest.split_counts() == {"train": 30, "val": 10, "test": 10}

    def test_ratios(self):
        records = synthetic_records({"Python": 50})
        manifest = stratified_split(records, ratios=[0.8, 0.1, 0.1], seed=0)
        assert manifest.split_counts() == {"train": 40, "val": 5, "test": 5}

    def test_oversized_request_raises(self):
        with pytest.raises(ValueError):
            stratified_split(synthetic_records({"Python": 3}), sizes=[4, 0, 0])

    def test_needs_sizes_or_ratios(self):
        with pytest.raises(ValueError):
            stratified_split(synthetic_records({"Python": 3}))

    def test_entries_sorted_and_contentless(self):
        records = synthetic_records({"Python": 10})
        manifest = stratified_split(records, sizes=[5, 2, 2], seed=0)
        keys = [(e.repo, e.path) for e in manifest.entries]
        assert keys == sorted(keys)
        assert "content" not in manifest.entries[0].to_dict()

    def test_manifest_json_round_trip(self):
        manifest = stratified_split(synthetic_records({"Python": 10}), sizes=[5, 2, 2], seed=0)
        assert CorpusManifest.from_json(manifest.to_json()) == manifest


class TestScanAndMetadata:
    def test_scan_directory(self, tmp_path):
        (tmp_path / "repo1").mkdir()
        (tmp_path / "repo1" / "a.py").write_text("print('hi')\n")
        (tmp_path / "repo1" / "b.rs").write_text("fn main() {}\n")
        records = scan_directory(tmp_path)
        assert [(r.repo, r.path, r.language) for r in records] == [
            ("repo1", "a.py", "Python"),
            ("repo1", "b.rs", "Rust"),
        ]

    def test_scan_with_repo_override(self, tmp_path):
        (tmp_path / "x.go").write_text("package main\n")
        records = scan_directory(tmp_path, repo="named")
        assert records[0].repo == "named" and records[0].path == "x.go"

    def test_load_metadata(self, tmp_path):
        rows = [
            {"repo": "r2", "path": "b.py", "content": "bbb"},
            {"repo": "r1", "path": "a.py", "content": "aaa", "language": "Custom"},
        ]
        path = tmp_path / "meta.json"
        path.write_text(json.dumps(rows))
        records = load_metadata(path)
        assert [r.repo for r in records] == ["r1", "r2"]
        assert records[0].language == "Custom"

    def test_load_metadata_rejects_bad_rows(self, tmp_path):
        path = tmp_path / "meta.json"
        path.write_text(json.dumps([{"repo": "r"}]))
        with pytest.raises(ValueError):
            load_metadata(path)

    def test_filter_metadata_rows(self):
        rows = [
            {"repo": "a", "stars": 100, "license": "mit"},
            {"repo": "b", "stars": 3, "license": "mit"},
            {"repo": "c", "stars": 50},
        ]
        assert [r["repo"] for r in filter_metadata_rows(rows, min_stars=10)] == ["a", "c"]
        assert [r["repo"] for r in filter_metadata_rows(rows, require_license=True)] == ["a", "b"]


class TestCurate:
    def build_corpus(self):
        records = []
        for i in range(30):
            body = " ".join(f"file{i}_tok{j}" for j in range(400))
            records.append(FileRecord.from_content("repo", f"src/f{i:02}.py", body))
        # one near-duplicate pair and one undersized file
        records.append(FileRecord.from_content("repo", "src/f00_copy.py", records[0].content))
        records.append(FileRecord.from_content("repo", "tiny.py", "short"))
        return records

    def test_end_to_end(self):
        manifest, dropped = curate(self.build_corpus(), sizes=[20, 5, 5], seed=2)
        assert manifest.split_counts() == {"train": 20, "val": 5, "test": 5}
        assert len(dropped) == 1
        assert dropped[0].record.path == "src/f00_copy.py"
        assert manifest.filter_params["jaccard_threshold"] == 0.8

    def test_default_split_is_everything_train(self):
        manifest, _ = curate(self.build_corpus())
        counts = manifest.split_counts()
        assert counts["val"] == 0 and counts["test"] == 0 and counts["train"] == 30
