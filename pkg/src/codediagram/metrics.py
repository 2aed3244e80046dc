"""Relevance evaluation: confusion counts, precision/recall/F1 grids, Cohen's kappa.

Annotators label every node of a generated diagram with one of four classes:
Su (relevant and sufficient), Co (relevant complement), Ha (hallucinated),
Ve (verbose). False negatives are inferred per query from the best-covering
model rather than from an unknowable ground-truth node set.
"""

from __future__ import annotations

import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from statistics import fmean
from typing import Iterable, Sequence

logger = logging.getLogger(__name__)


class RelevanceLabel(str, Enum):
    SUFFICIENT = "Su"
    COMPLEMENT = "Co"
    HALLUCINATED = "Ha"
    VERBOSE = "Ve"


@dataclass(frozen=True)
class AnnotatedDiagram:
    """One labelled diagram: every node of one (query, model, level) answer."""

    query_id: str
    model_id: str
    labels: dict[str, RelevanceLabel]
    detail_level: str | None = None
    annotator: str | None = None

    def class_counts(self) -> dict[RelevanceLabel, int]:
        counts = Counter(self.labels.values())
        return {label: counts.get(label, 0) for label in RelevanceLabel}

    @classmethod
    def from_dict(cls, obj: dict) -> AnnotatedDiagram:
        labels = {
            node_id: RelevanceLabel(value) for node_id, value in obj["labels"].items()
        }
        return cls(
            query_id=obj["query_id"],
            model_id=obj["model_id"],
            labels=labels,
            detail_level=obj.get("detail_level"),
            annotator=obj.get("annotator"),
        )

    def to_dict(self) -> dict:
        out: dict = {
            "query_id": self.query_id,
            "model_id": self.model_id,
            "labels": {k: v.value for k, v in self.labels.items()},
        }
        if self.detail_level is not None:
            out["detail_level"] = self.detail_level
        if self.annotator is not None:
            out["annotator"] = self.annotator
        return out


@dataclass(frozen=True)
class ConfusionCounts:
    su: int
    co: int
    ha: int
    ve: int
    fn: int
    fn_hard: int

    @property
    def tp(self) -> int:
        return self.su + self.co

    @property
    def tp_hard(self) -> int:
        return self.su

    @property
    def fp(self) -> int:
        return self.ha + self.ve

    def to_dict(self) -> dict:
        return {
            "su": self.su,
            "co": self.co,
            "ha": self.ha,
            "ve": self.ve,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "tp_hard": self.tp_hard,
            "fn_hard": self.fn_hard,
        }


class EmptyQueryGroupError(ValueError):
    """A per-query confusion needs at least one annotated diagram."""


def confusion_per_query(diagrams: Sequence[AnnotatedDiagram]) -> dict[str, ConfusionCounts]:
    """Confusion counts per model for one query group.

    The group must hold the competing answers to a single query (same detail
    level); false negatives for each model come from the per-query maxima of
    Su and Co across all models in the group.
    """
    if not diagrams:
        raise EmptyQueryGroupError("query group has no annotated diagrams")
    per_model: dict[str, dict[RelevanceLabel, int]] = {}
    for diagram in diagrams:
        if diagram.model_id in per_model:
            raise ValueError(
                f"duplicate diagram for model {diagram.model_id!r} in one query group"
            )
        per_model[diagram.model_id] = diagram.class_counts()
    max_su = max(c[RelevanceLabel.SUFFICIENT] for c in per_model.values())
    max_co = max(c[RelevanceLabel.COMPLEMENT] for c in per_model.values())
    out: dict[str, ConfusionCounts] = {}
    for model_id, counts in per_model.items():
        su = counts[RelevanceLabel.SUFFICIENT]
        co = counts[RelevanceLabel.COMPLEMENT]
        out[model_id] = ConfusionCounts(
            su=su,
            co=co,
            ha=counts[RelevanceLabel.HALLUCINATED],
            ve=counts[RelevanceLabel.VERBOSE],
            fn=max(0, max_su + max_co - (su + co)),
            fn_hard=max(0, max_su - su),
        )
    return out


_METRIC_NAMES = ("precision", "recall", "f1", "precision_hard", "recall_hard", "f1_hard")


def _ratio(numerator: int, denominator: int) -> float | None:
    return numerator / denominator if denominator > 0 else None


def _slice_from_totals(tp: int, fp: int, fn: int, tp_hard: int, fn_hard: int) -> dict[str, float | None]:
    return {
        "precision": _ratio(tp, tp + fp),
        "recall": _ratio(tp, tp + fn),
        "f1": _ratio(2 * tp, 2 * tp + fp + fn),
        "precision_hard": _ratio(tp_hard, tp_hard + fp),
        "recall_hard": _ratio(tp_hard, tp_hard + fn_hard),
        "f1_hard": _ratio(2 * tp_hard, 2 * tp_hard + fp + fn_hard),
    }


@dataclass(frozen=True)
class MetricsSlice:
    precision: float | None
    recall: float | None
    f1: float | None
    precision_hard: float | None
    recall_hard: float | None
    f1_hard: float | None
    # per-metric count of queries excluded as undefined (macro averaging only)
    excluded: dict[str, int] = field(default_factory=dict)

    @classmethod
    def from_values(
        cls, values: dict[str, float | None], excluded: dict[str, int] | None = None
    ) -> MetricsSlice:
        return cls(excluded=dict(excluded or {}), **values)

    def to_dict(self) -> dict:
        out: dict = {name: getattr(self, name) for name in _METRIC_NAMES}
        if self.excluded:
            out["excluded"] = dict(self.excluded)
        return out


class AllUndefinedError(ValueError):
    """Every metric is undefined for every query in the group."""


def micro_metrics(counts: Sequence[ConfusionCounts]) -> MetricsSlice:
    """Pool counts over queries, then apply the metric formulas once."""
    tp = sum(c.tp for c in counts)
    fp = sum(c.fp for c in counts)
    fn = sum(c.fn for c in counts)
    tp_hard = sum(c.tp_hard for c in counts)
    fn_hard = sum(c.fn_hard for c in counts)
    return MetricsSlice.from_values(_slice_from_totals(tp, fp, fn, tp_hard, fn_hard))


def macro_metrics(counts: Sequence[ConfusionCounts]) -> MetricsSlice:
    """Unweighted mean of per-query metric values; undefined queries are excluded.

    A metric undefined for every query yields None with an exclusion count;
    AllUndefinedError fires only when that holds for all six metrics.
    """
    values: dict[str, float | None] = {}
    excluded: dict[str, int] = {}
    for name in _METRIC_NAMES:
        defined = []
        for c in counts:
            value = _slice_from_totals(c.tp, c.fp, c.fn, c.tp_hard, c.fn_hard)[name]
            if value is not None:
                defined.append(value)
        excluded[name] = len(counts) - len(defined)
        values[name] = fmean(defined) if defined else None
    if counts and all(values[name] is None for name in _METRIC_NAMES):
        raise AllUndefinedError("every metric is undefined for every query")
    return MetricsSlice.from_values(values, excluded)


class LengthMismatchError(ValueError):
    """Kappa inputs must be two aligned, equal-length, non-empty label sequences."""


class DegenerateMarginalsError(ValueError):
    """Chance agreement is 1, so kappa is undefined."""


@dataclass(frozen=True)
class AgreementReport:
    kappa: float
    observed_agreement: float
    expected_agreement: float
    marginals_a: dict[str, float]
    marginals_b: dict[str, float]

    def to_dict(self) -> dict:
        return {
            "kappa": self.kappa,
            "observed_agreement": self.observed_agreement,
            "expected_agreement": self.expected_agreement,
            "marginals_a": dict(self.marginals_a),
            "marginals_b": dict(self.marginals_b),
        }


def cohens_kappa(
    labels_a: Sequence[RelevanceLabel], labels_b: Sequence[RelevanceLabel]
) -> AgreementReport:
    """Cohen's kappa over the four relevance classes for two aligned label vectors."""
    if len(labels_a) != len(labels_b) or not labels_a:
        raise LengthMismatchError(
            f"label sequences must be equal-length and non-empty, got "
            f"{len(labels_a)} and {len(labels_b)}"
        )
    n = len(labels_a)
    observed = sum(1 for a, b in zip(labels_a, labels_b) if a == b) / n
    counts_a = Counter(labels_a)
    counts_b = Counter(labels_b)
    expected = sum(
        (counts_a.get(label, 0) / n) * (counts_b.get(label, 0) / n)
        for label in RelevanceLabel
    )
    if expected >= 1.0:
        raise DegenerateMarginalsError("chance agreement is 1; kappa undefined")
    kappa = (observed - expected) / (1.0 - expected)
    return AgreementReport(
        kappa=kappa,
        observed_agreement=observed,
        expected_agreement=expected,
        marginals_a={label.value: counts_a.get(label, 0) / n for label in RelevanceLabel},
        marginals_b={label.value: counts_b.get(label, 0) / n for label in RelevanceLabel},
    )


def load_annotations(path: str | Path) -> list[AnnotatedDiagram]:
    """Load every .json annotation file under a directory, sorted by file name."""
    root = Path(path)
    out: list[AnnotatedDiagram] = []
    for file in sorted(root.glob("*.json")):
        with open(file, encoding="utf-8") as handle:
            obj = json.load(handle)
        try:
            out.append(AnnotatedDiagram.from_dict(obj))
        except (KeyError, ValueError) as exc:
            raise ValueError(f"{file}: bad annotation file: {exc}") from exc
    return out


def _group_key(diagram: AnnotatedDiagram) -> tuple[str, str | None]:
    return (diagram.query_id, diagram.detail_level)


def grouped_confusion(
    annotations: Iterable[AnnotatedDiagram],
) -> dict[str, list[ConfusionCounts]]:
    """Per-model confusion count lists, one entry per (query, level) group."""
    groups: dict[tuple[str, str | None], list[AnnotatedDiagram]] = {}
    for diagram in annotations:
        groups.setdefault(_group_key(diagram), []).append(diagram)
    per_model: dict[str, list[ConfusionCounts]] = {}
    for key in sorted(groups, key=lambda k: (k[0], k[1] or "")):
        for model_id, counts in confusion_per_query(groups[key]).items():
            per_model.setdefault(model_id, []).append(counts)
    return per_model


def relevance_report(annotations: Sequence[AnnotatedDiagram]) -> dict:
    """Full evaluation artifact: class counts, metric grid, annotator agreement."""
    consensus = [a for a in annotations if a.annotator is None]
    judged = [a for a in annotations if a.annotator is not None]

    class_totals: dict[str, Counter] = {}
    for diagram in consensus:
        bucket = class_totals.setdefault(diagram.model_id, Counter())
        bucket.update(diagram.class_counts())

    per_model = grouped_confusion(consensus)
    metrics: dict[str, dict] = {}
    for model_id in sorted(per_model):
        counts = per_model[model_id]
        metrics[model_id] = {
            "queries": len(counts),
            "micro": micro_metrics(counts).to_dict(),
            "macro": macro_metrics(counts).to_dict(),
        }

    agreements: dict[str, dict] = {}
    by_annotator: dict[str, dict[tuple, AnnotatedDiagram]] = {}
    for diagram in judged:
        key = (diagram.query_id, diagram.model_id, diagram.detail_level)
        by_annotator.setdefault(diagram.annotator, {})[key] = diagram
    names = sorted(by_annotator)
    for i, first in enumerate(names):
        for second in names[i + 1 :]:
            shared = sorted(
                set(by_annotator[first]) & set(by_annotator[second]),
                key=lambda k: (k[0], k[1], k[2] or ""),
            )
            vector_a: list[RelevanceLabel] = []
            vector_b: list[RelevanceLabel] = []
            for key in shared:
                one, two = by_annotator[first][key], by_annotator[second][key]
                common = sorted(set(one.labels) & set(two.labels))
                if set(one.labels) != set(two.labels):
                    logger.warning(
                        "annotators %s/%s labelled different node sets for %s",
                        first,
                        second,
                        key,
                    )
                vector_a.extend(one.labels[nid] for nid in common)
                vector_b.extend(two.labels[nid] for nid in common)
            if vector_a:
                report = cohens_kappa(vector_a, vector_b)
                agreements[f"{first}|{second}"] = report.to_dict()

    return {
        "class_counts": {
            model: {label.value: counter.get(label, 0) for label in RelevanceLabel}
            for model, counter in sorted(class_totals.items())
        },
        "metrics": metrics,
        "agreement": agreements,
    }
