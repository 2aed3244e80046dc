"""Corpus curation: size/charset filtering, near-duplicate removal, stratified splits.

The pipeline is deterministic end to end: records are canonically ordered by
(repo, path), dedup is greedy first-kept-wins in that order, and the split
shuffles only within a language under a caller-provided seed.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import random
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

from .similarity import greedy_dedup_mask, jaccard_unigram

logger = logging.getLogger(__name__)

LANGUAGE_BY_EXTENSION = {
    ".c": "C",
    ".h": "C",
    ".cc": "C++",
    ".cpp": "C++",
    ".cxx": "C++",
    ".hpp": "C++",
    ".cs": "C#",
    ".go": "Go",
    ".java": "Java",
    ".js": "JavaScript",
    ".jsx": "JavaScript",
    ".kt": "Kotlin",
    ".kts": "Kotlin",
    ".php": "PHP",
    ".py": "Python",
    ".rb": "Ruby",
    ".rs": "Rust",
    ".scala": "Scala",
    ".ts": "TypeScript",
    ".tsx": "TypeScript",
}

MIN_CHARS_DEFAULT = 3000
MAX_CHARS_DEFAULT = 15000
JACCARD_THRESHOLD_DEFAULT = 0.8
SPLIT_NAMES = ("train", "val", "test")


def language_for_path(path: str) -> str:
    suffix = Path(path).suffix.lower()
    return LANGUAGE_BY_EXTENSION.get(suffix, "other")


@dataclass(frozen=True)
class FileRecord:
    repo: str
    path: str
    language: str
    char_count: int
    digest: str
    content: str | None = None  # kept in memory for the pipeline, never in the manifest

    @classmethod
    def from_content(
        cls, repo: str, path: str, content: str, language: str | None = None
    ) -> FileRecord:
        return cls(
            repo=repo,
            path=path,
            language=language or language_for_path(path),
            char_count=len(content),
            digest=hashlib.sha256(content.encode("utf-8")).hexdigest(),
            content=content,
        )

    def sort_key(self) -> tuple[str, str]:
        return (self.repo, self.path)


def scan_directory(root: str | Path, repo: str | None = None) -> list[FileRecord]:
    """Read every regular file under root into records, sorted by (repo, path)."""
    root = Path(root)
    records = []
    for file in sorted(p for p in root.rglob("*") if p.is_file()):
        rel = file.relative_to(root).as_posix()
        if repo is not None:
            repo_name, path = repo, rel
        elif "/" in rel:
            repo_name, path = rel.split("/", 1)
        else:
            repo_name, path = root.name, rel
        content = file.read_text(encoding="utf-8", errors="replace")
        records.append(FileRecord.from_content(repo_name, path, content))
    records.sort(key=FileRecord.sort_key)
    return records


def load_metadata(path: str | Path) -> list[FileRecord]:
    """Ingest a metadata JSON file: a list of {repo, path, content, language?} rows.

    Rows carrying precomputed columns (stars, license) can be pre-filtered with
    filter_metadata_rows before this call.
    """
    with open(path, encoding="utf-8") as handle:
        rows = json.load(handle)
    if not isinstance(rows, list):
        raise ValueError("metadata file must hold a JSON list of file rows")
    records = []
    for i, row in enumerate(rows):
        if not isinstance(row, dict) or not {"repo", "path", "content"} <= set(row):
            raise ValueError(f"metadata row {i} must carry repo, path and content")
        records.append(
            FileRecord.from_content(
                row["repo"], row["path"], row["content"], row.get("language")
            )
        )
    records.sort(key=FileRecord.sort_key)
    return records


def filter_metadata_rows(
    rows: Iterable[dict], min_stars: int = 0, require_license: bool = False
) -> list[dict]:
    """Apply precomputed metadata columns; rows missing a required column drop out."""
    kept = []
    for row in rows:
        if min_stars and int(row.get("stars", 0) or 0) < min_stars:
            continue
        if require_license and not row.get("license"):
            continue
        kept.append(row)
    return kept


def filter_files(
    records: Sequence[FileRecord],
    min_chars: int = MIN_CHARS_DEFAULT,
    max_chars: int = MAX_CHARS_DEFAULT,
    ascii_only: bool = True,
) -> list[FileRecord]:
    """Keep records inside the closed character-count interval, optionally ASCII-only."""
    kept = []
    for record in records:
        if not (min_chars <= record.char_count <= max_chars):
            continue
        if ascii_only:
            if record.content is None:
                raise ValueError(
                    f"{record.repo}/{record.path}: ascii_only filtering needs content"
                )
            if not record.content.isascii():
                continue
        kept.append(record)
    return kept


@dataclass(frozen=True)
class DroppedRecord:
    record: FileRecord
    kept: FileRecord
    similarity: float


def dedup(
    records: Sequence[FileRecord], threshold: float = JACCARD_THRESHOLD_DEFAULT
) -> tuple[list[FileRecord], list[DroppedRecord]]:
    """Greedy near-duplicate removal in canonical (repo, path) order.

    A record is dropped when its unigram Jaccard similarity against any earlier
    surviving record reaches the threshold.
    """
    ordered = sorted(records, key=FileRecord.sort_key)
    for record in ordered:
        if record.content is None:
            raise ValueError(f"{record.repo}/{record.path}: dedup needs content")
    keep, matched, similarity = greedy_dedup_mask(
        [r.content for r in ordered], threshold
    )
    survivors = [r for r, k in zip(ordered, keep) if k]
    dropped = [
        DroppedRecord(record=r, kept=ordered[matched[i]], similarity=float(similarity[i]))
        for i, r in enumerate(ordered)
        if not keep[i]
    ]
    return survivors, dropped


def _largest_remainder(weights: Sequence[float], total: int) -> list[int]:
    """Integer apportionment: floors plus remainder ranking, deterministic ties."""
    floors = [math.floor(w) for w in weights]
    leftover = total - sum(floors)
    order = sorted(
        range(len(weights)), key=lambda i: (-(weights[i] - floors[i]), i)
    )
    out = list(floors)
    for i in order[:leftover]:
        out[i] += 1
    return out


@dataclass(frozen=True)
class ManifestEntry:
    repo: str
    path: str
    language: str
    char_count: int
    digest: str
    split: str

    def to_dict(self) -> dict:
        return {
            "repo": self.repo,
            "path": self.path,
            "language": self.language,
            "char_count": self.char_count,
            "digest": self.digest,
            "split": self.split,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> ManifestEntry:
        return cls(**{k: obj[k] for k in ("repo", "path", "language", "char_count", "digest", "split")})


@dataclass(frozen=True)
class CorpusManifest:
    seed: int
    filter_params: dict
    entries: list[ManifestEntry]
    warnings: list[str] = field(default_factory=list)

    def split_counts(self) -> dict[str, int]:
        counts = {name: 0 for name in SPLIT_NAMES}
        for entry in self.entries:
            counts[entry.split] = counts.get(entry.split, 0) + 1
        return counts

    def to_json(self) -> str:
        payload = {
            "seed": self.seed,
            "filter_params": self.filter_params,
            "split_counts": self.split_counts(),
            "entries": [e.to_dict() for e in self.entries],
            "warnings": list(self.warnings),
        }
        return json.dumps(payload, indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> CorpusManifest:
        obj = json.loads(text)
        return cls(
            seed=obj["seed"],
            filter_params=obj["filter_params"],
            entries=[ManifestEntry.from_dict(e) for e in obj["entries"]],
            warnings=list(obj.get("warnings", [])),
        )


def stratified_split(
    records: Sequence[FileRecord],
    sizes: Sequence[int] | None = None,
    ratios: Sequence[float] | None = None,
    seed: int = 0,
    filter_params: dict | None = None,
) -> CorpusManifest:
    """Language-stratified train/val/test selection with largest-remainder rounding.

    Selection is proportional to language frequency; every language with at
    least 3 files gets one file in each non-empty split when feasible. The same
    seed over the same records yields byte-identical manifests.
    """
    ordered = sorted(records, key=FileRecord.sort_key)
    n = len(ordered)
    if sizes is None:
        if ratios is None:
            raise ValueError("provide sizes or ratios")
        if len(ratios) != len(SPLIT_NAMES):
            raise ValueError(f"need {len(SPLIT_NAMES)} ratios")
        sizes = _largest_remainder([r * n for r in ratios], round(sum(ratios) * n))
    sizes = [int(s) for s in sizes]
    if len(sizes) != len(SPLIT_NAMES):
        raise ValueError(f"need {len(SPLIT_NAMES)} sizes")
    total = sum(sizes)
    if total > n:
        raise ValueError(f"requested {total} files but only {n} are available")
    warnings: list[str] = []

    by_language: dict[str, list[FileRecord]] = {}
    for record in ordered:
        by_language.setdefault(record.language, []).append(record)
    languages = sorted(by_language)
    counts = {lang: len(by_language[lang]) for lang in languages}

    if total == 0:
        return CorpusManifest(
            seed=seed, filter_params=filter_params or {}, entries=[], warnings=warnings
        )

    selected = dict(
        zip(languages, _largest_remainder([counts[l] * total / n for l in languages], total))
    )

    allocation: dict[str, list[int]] = {}
    for lang in languages:
        allocation[lang] = _largest_remainder(
            [selected[lang] * s / total for s in sizes], selected[lang]
        )

    # coverage rule: a language with >= 3 files gets a file in every non-empty split
    for lang in languages:
        if counts[lang] < 3:
            continue
        cells = allocation[lang]
        for split_index, size in enumerate(sizes):
            if size == 0 or cells[split_index] > 0:
                continue
            donors = [i for i in range(len(cells)) if cells[i] > 1]
            if not donors:
                warnings.append(
                    f"cannot place language {lang!r} in split "
                    f"{SPLIT_NAMES[split_index]!r}: too few selected files"
                )
                continue
            donor = max(donors, key=lambda i: (cells[i], -i))
            cells[donor] -= 1
            cells[split_index] += 1

    # rebalance: per-split totals must match the requested sizes exactly
    def split_totals() -> list[int]:
        return [sum(allocation[lang][i] for lang in languages) for i in range(len(sizes))]

    guard = 0
    while True:
        totals = split_totals()
        over = [i for i in range(len(sizes)) if totals[i] > sizes[i]]
        under = [i for i in range(len(sizes)) if totals[i] < sizes[i]]
        if not over or not under:
            break
        guard += 1
        if guard > 10 * (n + 1):
            warnings.append("split rebalancing did not converge; sizes are approximate")
            break
        src, dst = over[0], under[0]
        movable = [
            lang
            for lang in languages
            if allocation[lang][src] > (1 if counts[lang] >= 3 and sizes[src] > 0 else 0)
        ]
        if not movable:
            movable = [lang for lang in languages if allocation[lang][src] > 0]
        if not movable:
            warnings.append("split rebalancing stuck; sizes are approximate")
            break
        lang = max(movable, key=lambda l: (allocation[l][src], l))
        allocation[lang][src] -= 1
        allocation[lang][dst] += 1

    final_totals = split_totals()
    if final_totals != sizes:
        warnings.append(
            f"requested split sizes {sizes} degraded to {final_totals}"
        )

    rng = random.Random(seed)
    entries: list[ManifestEntry] = []
    for lang in languages:
        pool = list(by_language[lang])
        rng.shuffle(pool)
        cursor = 0
        for split_index, take in enumerate(allocation[lang]):
            for record in pool[cursor : cursor + take]:
                entries.append(
                    ManifestEntry(
                        repo=record.repo,
                        path=record.path,
                        language=record.language,
                        char_count=record.char_count,
                        digest=record.digest,
                        split=SPLIT_NAMES[split_index],
                    )
                )
            cursor += take
    entries.sort(key=lambda e: (e.repo, e.path))
    return CorpusManifest(
        seed=seed,
        filter_params=filter_params or {},
        entries=entries,
        warnings=warnings,
    )


def curate(
    records: Sequence[FileRecord],
    min_chars: int = MIN_CHARS_DEFAULT,
    max_chars: int = MAX_CHARS_DEFAULT,
    ascii_only: bool = True,
    threshold: float = JACCARD_THRESHOLD_DEFAULT,
    sizes: Sequence[int] | None = None,
    ratios: Sequence[float] | None = None,
    seed: int = 0,
) -> tuple[CorpusManifest, list[DroppedRecord]]:
    """Filter, dedup and split in one pass; returns the manifest and dropped pairs."""
    filtered = filter_files(records, min_chars=min_chars, max_chars=max_chars, ascii_only=ascii_only)
    survivors, dropped = dedup(filtered, threshold=threshold)
    if sizes is None and ratios is None:
        sizes = [len(survivors), 0, 0]
    manifest = stratified_split(
        survivors,
        sizes=sizes,
        ratios=ratios,
        seed=seed,
        filter_params={
            "min_chars": min_chars,
            "max_chars": max_chars,
            "ascii_only": ascii_only,
            "jaccard_threshold": threshold,
        },
    )
    return manifest, dropped
