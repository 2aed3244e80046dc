"""Defect catalog and linter for diagram graphs.

Every check is read-only over the IR; a report never mutates the graph. Severity
drives CLI exit codes and the repair loop, so the catalog order and the defect
ordering inside a report are both canonical and deterministic.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from statistics import fmean
from typing import Iterable

from . import _structure, render
from .ir import (
    BrokenJsonError,
    Graph,
    NodeKind,
    ParseError,
    parse_graph,
)


class Severity(IntEnum):
    MINOR = 1
    SEVERE = 2
    UNACCEPTABLE = 3

    @property
    def label(self) -> str:
        return self.name.lower()

    @classmethod
    def parse(cls, value: str) -> Severity:
        try:
            return cls[value.upper()]
        except KeyError:
            raise ValueError(f"unknown severity: {value!r}") from None


class DefectKind(str, Enum):
    SPACES_IN_NODE_NAMES = "spaces_in_node_names"
    SPACES_IN_PACKAGE_IDS = "spaces_in_package_ids"
    SINGLE_NODE = "single_node"
    NO_EDGES = "no_edges"
    EDGE_TO_ITSELF = "edge_to_itself"
    REPEATED_EDGES = "repeated_edges"
    MULTI_EDGE_BETWEEN_PAIR = "multi_edge_between_pair"
    EDGE_TO_SOURCE_CLASS = "edge_to_source_class"
    NO_EDGE_FROM_SOURCE_CLASS = "no_edge_from_source_class"
    INVALID_NODE_NAME = "invalid_node_name"
    INVALID_NODE_ID = "invalid_node_id"
    INVALID_PACKAGE_ID = "invalid_package_id"
    NAME_NOT_FOUND_IN_CODE = "name_not_found_in_code"
    SINGLE_NODE_PACKAGE = "single_node_package"
    MEMBER_OUTSIDE_CLASS_PACKAGE = "member_outside_class_package"
    NON_UNIQUE_PACKAGE_IDS = "non_unique_package_ids"
    NON_UNIQUE_NODE_IDS = "non_unique_node_ids"
    EDGE_TO_INVALID_ID = "edge_to_invalid_id"
    EMPTY_SOURCE_CLASS_ID = "empty_source_class_id"
    PACKAGE_WITHOUT_NODES = "package_without_nodes"
    CHILD_IN_MULTIPLE_PACKAGES = "child_in_multiple_packages"
    MORE_PACKAGES_THAN_NODES = "more_packages_than_nodes"
    PACKAGE_RECURSION = "package_recursion"
    MULTIPLE_CONNECTED_COMPONENTS = "multiple_connected_components"
    BROKEN_JSON = "broken_json"
    NON_DRAWABLE = "non_drawable"


CATALOG: dict[DefectKind, Severity] = {
    DefectKind.SPACES_IN_NODE_NAMES: Severity.MINOR,
    DefectKind.SPACES_IN_PACKAGE_IDS: Severity.MINOR,
    DefectKind.SINGLE_NODE: Severity.MINOR,
    DefectKind.NO_EDGES: Severity.MINOR,
    DefectKind.EDGE_TO_ITSELF: Severity.MINOR,
    DefectKind.REPEATED_EDGES: Severity.MINOR,
    DefectKind.MULTI_EDGE_BETWEEN_PAIR: Severity.MINOR,
    DefectKind.EDGE_TO_SOURCE_CLASS: Severity.MINOR,
    DefectKind.NO_EDGE_FROM_SOURCE_CLASS: Severity.MINOR,
    DefectKind.INVALID_NODE_NAME: Severity.MINOR,
    DefectKind.INVALID_NODE_ID: Severity.MINOR,
    DefectKind.INVALID_PACKAGE_ID: Severity.MINOR,
    DefectKind.NAME_NOT_FOUND_IN_CODE: Severity.MINOR,
    DefectKind.SINGLE_NODE_PACKAGE: Severity.MINOR,
    DefectKind.MEMBER_OUTSIDE_CLASS_PACKAGE: Severity.MINOR,
    DefectKind.NON_UNIQUE_PACKAGE_IDS: Severity.SEVERE,
    DefectKind.NON_UNIQUE_NODE_IDS: Severity.SEVERE,
    DefectKind.EDGE_TO_INVALID_ID: Severity.SEVERE,
    DefectKind.EMPTY_SOURCE_CLASS_ID: Severity.SEVERE,
    DefectKind.PACKAGE_WITHOUT_NODES: Severity.SEVERE,
    DefectKind.CHILD_IN_MULTIPLE_PACKAGES: Severity.SEVERE,
    DefectKind.MORE_PACKAGES_THAN_NODES: Severity.SEVERE,
    DefectKind.PACKAGE_RECURSION: Severity.SEVERE,
    DefectKind.MULTIPLE_CONNECTED_COMPONENTS: Severity.SEVERE,
    DefectKind.BROKEN_JSON: Severity.UNACCEPTABLE,
    DefectKind.NON_DRAWABLE: Severity.UNACCEPTABLE,
}

_KIND_ORDER = {kind: i for i, kind in enumerate(CATALOG)}


@dataclass(frozen=True)
class Defect:
    kind: DefectKind
    severity: Severity
    subjects: list[str]
    message: str

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "severity": self.severity.label,
            "subjects": list(self.subjects),
            "message": self.message,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> Defect:
        return cls(
            kind=DefectKind(obj["kind"]),
            severity=Severity.parse(obj["severity"]),
            subjects=list(obj["subjects"]),
            message=obj["message"],
        )


def _make(kind: DefectKind, subjects: Iterable[str], message: str) -> Defect:
    return Defect(kind=kind, severity=CATALOG[kind], subjects=list(subjects), message=message)


@dataclass(frozen=True)
class DefectReport:
    graph_id: str
    node_count: int
    defects: list[Defect]

    @property
    def counts_by_severity(self) -> dict[Severity, int]:
        counts = Counter(d.severity for d in self.defects)
        return {severity: counts.get(severity, 0) for severity in Severity}

    def worst_severity(self) -> Severity | None:
        return max((d.severity for d in self.defects), default=None)

    def count_at_threshold(self, threshold: Severity) -> int:
        return sum(1 for d in self.defects if d.severity >= threshold)

    def kinds(self) -> set[DefectKind]:
        return {d.kind for d in self.defects}

    def to_dict(self) -> dict:
        return {
            "graph_id": self.graph_id,
            "node_count": self.node_count,
            "defects": [d.to_dict() for d in self.defects],
            "counts_by_severity": {
                severity.label: count for severity, count in self.counts_by_severity.items()
            },
        }

    @classmethod
    def from_dict(cls, obj: dict) -> DefectReport:
        return cls(
            graph_id=obj["graph_id"],
            node_count=int(obj["node_count"]),
            defects=[Defect.from_dict(d) for d in obj["defects"]],
        )


def _has_whitespace(value: str) -> bool:
    return any(c.isspace() for c in value)


def _is_invalid_identifier(value: str) -> bool:
    # empty, or containing non-printable/non-ASCII chars; whitespace is the
    # spaces_* kinds' business, not this one's
    if not value:
        return True
    return any(not ("\x20" <= c <= "\x7e") and not c.isspace() for c in value)


def _node_subject(index: int, node_id: str) -> str:
    return node_id if node_id else f"nodes[{index}]"


def _package_subject(index: int, package_id: str) -> str:
    return package_id if package_id else f"packages[{index}]"


def connected_components(graph: Graph) -> list[list[str]]:
    """Partition node ids by explicit edges plus implicit member-to-class links.

    Edge endpoints that are not node ids are ignored. Returns sorted id lists,
    ordered by their first element; an empty graph yields no components.
    """
    node_ids = {n.node_id for n in graph.nodes}
    adjacency: dict[str, set[str]] = {nid: set() for nid in node_ids}
    for edge in graph.edges:
        if edge.node_id_from in node_ids and edge.node_id_to in node_ids:
            adjacency[edge.node_id_from].add(edge.node_id_to)
            adjacency[edge.node_id_to].add(edge.node_id_from)
    for member_id, owner_id in _structure.member_owner_map(graph).items():
        if member_id in node_ids and owner_id in node_ids:
            adjacency[member_id].add(owner_id)
            adjacency[owner_id].add(member_id)
    components: list[list[str]] = []
    seen: set[str] = set()
    for start in sorted(node_ids):
        if start in seen:
            continue
        stack = [start]
        component = []
        seen.add(start)
        while stack:
            current = stack.pop()
            component.append(current)
            for neighbor in adjacency[current]:
                if neighbor not in seen:
                    seen.add(neighbor)
                    stack.append(neighbor)
        components.append(sorted(component))
    components.sort(key=lambda c: c[0])
    return components


def lint(graph: Graph, source_code: str | None = None, graph_id: str = "") -> DefectReport:
    """Run the full defect catalog over a graph.

    source_code gates name_not_found_in_code: without it the check is skipped.
    """
    defects: list[Defect] = []
    nodes = graph.nodes
    edges = graph.edges
    packages = graph.packages
    node_ids = {n.node_id for n in nodes}
    owners = _structure.member_owner_map(graph)
    node_by_id = _structure.node_index(graph)

    for i, node in enumerate(nodes):
        if _has_whitespace(node.name):
            defects.append(
                _make(
                    DefectKind.SPACES_IN_NODE_NAMES,
                    [_node_subject(i, node.node_id)],
                    f"node name {node.name!r} contains whitespace",
                )
            )
    for i, package in enumerate(packages):
        if _has_whitespace(package.package_id):
            defects.append(
                _make(
                    DefectKind.SPACES_IN_PACKAGE_IDS,
                    [_package_subject(i, package.package_id)],
                    f"package id {package.package_id!r} contains whitespace",
                )
            )

    if len(nodes) == 1:
        defects.append(
            _make(DefectKind.SINGLE_NODE, [nodes[0].node_id], "graph has a single node")
        )
    if nodes and not edges:
        defects.append(_make(DefectKind.NO_EDGES, [], "graph has no edges"))

    ordered_pairs: Counter[tuple[str, str]] = Counter()
    for i, edge in enumerate(edges):
        ordered_pairs[(edge.node_id_from, edge.node_id_to)] += 1
        if edge.node_id_from == edge.node_id_to:
            defects.append(
                _make(
                    DefectKind.EDGE_TO_ITSELF,
                    [f"edges[{i}]"],
                    f"edge from {edge.node_id_from!r} to itself",
                )
            )
    for (src, dst), count in sorted(ordered_pairs.items()):
        if count > 1:
            defects.append(
                _make(
                    DefectKind.REPEATED_EDGES,
                    [src, dst],
                    f"edge {src!r} -> {dst!r} appears {count} times",
                )
            )
    unordered: Counter[tuple[str, str]] = Counter()
    for src, dst in ordered_pairs:  # exact repeats already collapsed
        if src != dst:
            unordered[tuple(sorted((src, dst)))] += 1
    for (a, b), count in sorted(unordered.items()):
        if count > 1:
            defects.append(
                _make(
                    DefectKind.MULTI_EDGE_BETWEEN_PAIR,
                    [a, b],
                    f"{count} distinct edges between {a!r} and {b!r}",
                )
            )

    for i, edge in enumerate(edges):
        if (
            owners.get(edge.node_id_from) == edge.node_id_to
            or owners.get(edge.node_id_to) == edge.node_id_from
        ):
            defects.append(
                _make(
                    DefectKind.EDGE_TO_SOURCE_CLASS,
                    [f"edges[{i}]"],
                    f"explicit edge between member and its own class "
                    f"({edge.node_id_from!r} -> {edge.node_id_to!r})",
                )
            )

    incident: set[str] = set()
    for edge in edges:
        incident.add(edge.node_id_from)
        incident.add(edge.node_id_to)
    for owner_id in sorted(set(owners.values())):
        if owner_id in node_ids and owner_id not in incident:
            defects.append(
                _make(
                    DefectKind.NO_EDGE_FROM_SOURCE_CLASS,
                    [owner_id],
                    f"class {owner_id!r} has members but no edges",
                )
            )

    for i, node in enumerate(nodes):
        if _is_invalid_identifier(node.name):
            defects.append(
                _make(
                    DefectKind.INVALID_NODE_NAME,
                    [_node_subject(i, node.node_id)],
                    f"node name {node.name!r} is empty or not printable ASCII",
                )
            )
        if _is_invalid_identifier(node.node_id):
            defects.append(
                _make(
                    DefectKind.INVALID_NODE_ID,
                    [_node_subject(i, node.node_id)],
                    f"node id {node.node_id!r} is empty or not printable ASCII",
                )
            )
    for i, package in enumerate(packages):
        if _is_invalid_identifier(package.package_id):
            defects.append(
                _make(
                    DefectKind.INVALID_PACKAGE_ID,
                    [_package_subject(i, package.package_id)],
                    f"package id {package.package_id!r} is empty or not printable ASCII",
                )
            )

    if source_code is not None:
        for i, node in enumerate(nodes):
            if node.type is NodeKind.ENTITY:
                continue  # entities name external concepts, not code symbols
            if node.name not in source_code:
                defects.append(
                    _make(
                        DefectKind.NAME_NOT_FOUND_IN_CODE,
                        [_node_subject(i, node.node_id)],
                        f"node name {node.name!r} does not occur in the source",
                    )
                )

    transitive: dict[int, set[str]] = {
        i: _structure.transitive_node_ids(p, graph) for i, p in enumerate(packages)
    }
    for i, package in enumerate(packages):
        if len(transitive[i]) == 1:
            defects.append(
                _make(
                    DefectKind.SINGLE_NODE_PACKAGE,
                    [_package_subject(i, package.package_id)],
                    f"package {package.package_id!r} contains a single node",
                )
            )
        elif not transitive[i]:
            defects.append(
                _make(
                    DefectKind.PACKAGE_WITHOUT_NODES,
                    [_package_subject(i, package.package_id)],
                    f"package {package.package_id!r} contains no nodes",
                )
            )

    placement = _structure.immediate_package_of(graph)
    package_by_id = _structure.package_index(graph)
    for i, node in enumerate(nodes):
        if not node.is_member or node.source_class_id is None:
            continue
        class_package_id = placement.get(node.source_class_id)
        if class_package_id is None or class_package_id not in package_by_id:
            continue
        if placement.get(node.node_id) is None:
            continue  # member listed in no package at all: placement is implied
        class_package = package_by_id[class_package_id]
        allowed = _structure.transitive_node_ids(class_package, graph)
        if node.node_id not in allowed:
            defects.append(
                _make(
                    DefectKind.MEMBER_OUTSIDE_CLASS_PACKAGE,
                    [node.node_id],
                    f"member {node.node_id!r} is packaged outside its class's "
                    f"package {class_package_id!r}",
                )
            )

    package_id_counts = Counter(p.package_id for p in packages)
    for package_id, count in sorted(package_id_counts.items()):
        if count > 1:
            defects.append(
                _make(
                    DefectKind.NON_UNIQUE_PACKAGE_IDS,
                    [package_id],
                    f"package id {package_id!r} declared {count} times",
                )
            )
    node_id_counts = Counter(n.node_id for n in nodes)
    for node_id, count in sorted(node_id_counts.items()):
        if count > 1:
            defects.append(
                _make(
                    DefectKind.NON_UNIQUE_NODE_IDS,
                    [node_id],
                    f"node id {node_id!r} declared {count} times",
                )
            )

    for i, edge in enumerate(edges):
        for endpoint, direction in ((edge.node_id_from, "from"), (edge.node_id_to, "to")):
            if endpoint not in node_ids:
                defects.append(
                    _make(
                        DefectKind.EDGE_TO_INVALID_ID,
                        [f"edges[{i}]"],
                        f"edge {direction}-endpoint {endpoint!r} is not a node id",
                    )
                )

    for i, node in enumerate(nodes):
        if node.is_member and node.source_class_id is None:
            defects.append(
                _make(
                    DefectKind.EMPTY_SOURCE_CLASS_ID,
                    [_node_subject(i, node.node_id)],
                    f"{node.type.value} {node.node_id!r} has no source_class_id",
                )
            )

    child_packages: dict[str, list[str]] = defaultdict(list)
    for package in packages:
        for child in set(package.children):
            child_packages[child].append(package.package_id)
    for child, owners_of_child in sorted(child_packages.items()):
        distinct = sorted(set(owners_of_child))
        if len(owners_of_child) > 1 and len(distinct) > 1:
            defects.append(
                _make(
                    DefectKind.CHILD_IN_MULTIPLE_PACKAGES,
                    [child],
                    f"{child!r} is a child of packages {distinct}",
                )
            )

    if len(packages) > len(nodes):
        defects.append(
            _make(
                DefectKind.MORE_PACKAGES_THAN_NODES,
                [],
                f"{len(packages)} packages for {len(nodes)} nodes",
            )
        )

    for cycle in _structure.package_cycles(graph):
        defects.append(
            _make(
                DefectKind.PACKAGE_RECURSION,
                cycle,
                f"packages nest recursively: {cycle}",
            )
        )

    components = connected_components(graph)
    if len(components) > 1:
        defects.append(
            _make(
                DefectKind.MULTIPLE_CONNECTED_COMPONENTS,
                [c[0] for c in components],
                f"graph splits into {len(components)} connected components",
            )
        )

    try:
        render.preflight(graph)
    except render.NonDrawableError as exc:
        defects.append(_make(DefectKind.NON_DRAWABLE, list(exc.subjects), str(exc)))

    defects.sort(key=lambda d: (_KIND_ORDER[d.kind], d.subjects, d.message))
    return DefectReport(graph_id=graph_id, node_count=len(nodes), defects=defects)


def lint_text(text: str | bytes, source_code: str | None = None, graph_id: str = "") -> DefectReport:
    """Parse then lint; parse failures surface as a broken_json report."""
    try:
        graph = parse_graph(text)
    except BrokenJsonError as exc:
        defect = _make(DefectKind.BROKEN_JSON, [], f"unparseable graph: {exc}")
        return DefectReport(graph_id=graph_id, node_count=0, defects=[defect])
    except ParseError as exc:
        defect = _make(
            DefectKind.BROKEN_JSON, [], f"graph does not match the schema: {exc}"
        )
        return DefectReport(graph_id=graph_id, node_count=0, defects=[defect])
    return lint(graph, source_code=source_code, graph_id=graph_id)


class EmptyCorpusError(ValueError):
    """aggregate() needs at least one report."""


class ZeroNodeDiagramError(ValueError):
    """Per-node ratios are undefined for a report with zero nodes."""


@dataclass(frozen=True)
class AggregateValues:
    micro: float
    macro: float
    mean: float

    def to_dict(self) -> dict:
        return {"micro": self.micro, "macro": self.macro, "mean": self.mean}


def aggregate(reports: list[DefectReport], threshold: Severity) -> AggregateValues:
    """Corpus-level defect rates at one severity threshold.

    micro: total defects / total nodes. macro: mean per-report defects/nodes.
    mean: total defects / number of reports.
    """
    if not reports:
        raise EmptyCorpusError("no reports to aggregate")
    counts = [r.count_at_threshold(threshold) for r in reports]
    mean = sum(counts) / len(reports)
    zero = [r.graph_id for r in reports if r.node_count <= 0]
    if zero:
        raise ZeroNodeDiagramError(f"reports with zero nodes: {zero}")
    micro = sum(counts) / sum(r.node_count for r in reports)
    macro = fmean(c / r.node_count for c, r in zip(counts, reports))
    return AggregateValues(micro=micro, macro=macro, mean=mean)


# severity thresholds for the two published aggregation rows
THRESHOLD_LOW = Severity.MINOR
THRESHOLD_MED = Severity.SEVERE


@dataclass(frozen=True)
class DefectAggregate:
    low: AggregateValues
    med: AggregateValues

    @classmethod
    def from_reports(cls, reports: list[DefectReport]) -> DefectAggregate:
        return cls(
            low=aggregate(reports, THRESHOLD_LOW),
            med=aggregate(reports, THRESHOLD_MED),
        )

    def to_dict(self) -> dict:
        return {"low": self.low.to_dict(), "med": self.med.to_dict()}
