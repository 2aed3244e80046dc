"""PlantUML and Mermaid emitters over the graph IR, plus the drawability preflight."""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from . import _structure
from .ir import Graph, Node, NodeKind, Package, Visibility


class MarkupFormat(str, Enum):
    PLANTUML = "plantuml"
    MERMAID = "mermaid"


class NonDrawableError(ValueError):
    """The graph violates a structural precondition of both markup formats."""

    def __init__(self, reason: str, message: str, subjects: list[str] | None = None):
        super().__init__(message)
        self.reason = reason
        self.subjects = subjects or []


@dataclass(frozen=True)
class RenderOutput:
    format: MarkupFormat
    text: str
    warnings: list[str]

    def to_dict(self) -> dict:
        return {"format": self.format.value, "text": self.text, "warnings": list(self.warnings)}


def preflight(graph: Graph) -> None:
    """Raise NonDrawableError when no drawable layout exists for the graph.

    Checks, in order: package children resolve, no package nesting cycle,
    members reference class nodes, no edge endpoint is a pure package id.
    """
    node_ids = {n.node_id for n in graph.nodes}
    package_ids = {p.package_id for p in graph.packages}
    for package in graph.packages:
        for child in package.children:
            if child not in node_ids and child not in package_ids:
                raise NonDrawableError(
                    "unresolved_package_child",
                    f"package {package.package_id!r} references unknown id {child!r}",
                    [package.package_id, child],
                )
    cycles = _structure.package_cycles(graph)
    if cycles:
        raise NonDrawableError(
            "package_recursion",
            f"packages nest recursively: {cycles[0]}",
            cycles[0],
        )
    index = _structure.node_index(graph)
    for node in graph.nodes:
        if node.is_member and node.source_class_id is not None:
            owner = index.get(node.source_class_id)
            if owner is None or owner.type is not NodeKind.CLASS:
                raise NonDrawableError(
                    "member_of_non_class",
                    f"member {node.node_id!r} names source class {node.source_class_id!r} "
                    f"which is not a class node",
                    [node.node_id, node.source_class_id],
                )
    for i, edge in enumerate(graph.edges):
        for endpoint in (edge.node_id_from, edge.node_id_to):
            # an id that is both node and package draws as the node
            if endpoint in package_ids and endpoint not in node_ids:
                raise NonDrawableError(
                    "edge_targets_package",
                    f"edge endpoint {endpoint!r} is a package id",
                    [f"edges[{i}]", endpoint],
                )


_VISIBILITY_SYMBOL = {
    Visibility.PUBLIC: "+",
    Visibility.PRIVATE: "-",
    Visibility.PROTECTED: "#",
    Visibility.PACKAGE_PRIVATE: "~",
}

_SAFE_IDENTIFIER = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")

_NOTE_CAP = 120


class _IdentifierMap:
    """Deterministic id-to-markup-token mapping with collision dedup."""

    def __init__(self) -> None:
        self._mapping: dict[str, str] = {}
        self._taken: set[str] = set()
        self.warnings: list[str] = []

    def add(self, original: str) -> str:
        if original in self._mapping:
            return self._mapping[original]
        base = re.sub(r"[^A-Za-z0-9_]", "_", original) or "id"
        if base[0].isdigit():
            base = "n" + base
        candidate = base
        suffix = 2
        while candidate in self._taken:
            candidate = f"{base}_{suffix}"
            suffix += 1
        self._taken.add(candidate)
        self._mapping[original] = candidate
        if candidate != original:
            self.warnings.append(f"identifier {original!r} emitted as {candidate!r}")
        return candidate

    def __getitem__(self, original: str) -> str:
        return self._mapping[original]

    def __contains__(self, original: str) -> bool:
        return original in self._mapping


@dataclass
class _Layout:
    """Shared placement plan: who renders where, in what order."""

    identifiers: _IdentifierMap
    members_by_class: dict[str, list[Node]]
    placed_members: set[str]
    top_level_nodes: list[Node]
    top_level_packages: list[Package]
    node_by_id: dict[str, Node]
    package_by_id: dict[str, Package]
    warnings: list[str]


def _plan(graph: Graph) -> _Layout:
    node_by_id = _structure.node_index(graph)
    package_by_id = _structure.package_index(graph)
    warnings: list[str] = []

    members_by_class: dict[str, list[Node]] = {}
    placed_members: set[str] = set()
    for node in graph.nodes:
        if node.is_member and node.source_class_id is not None:
            owner = node_by_id.get(node.source_class_id)
            if owner is not None and owner.type is NodeKind.CLASS:
                members_by_class.setdefault(owner.node_id, []).append(node)
                placed_members.add(node.node_id)

    placement = _structure.immediate_package_of(graph)
    top_level_nodes = [
        n
        for n in graph.nodes
        if n.node_id not in placed_members and placement.get(n.node_id) is None
    ]
    nested_ids = {
        child
        for p in graph.packages
        for child in p.children
        if child in package_by_id
    }
    top_level_packages = [p for p in graph.packages if p.package_id not in nested_ids]

    identifiers = _IdentifierMap()
    for node in graph.nodes:
        identifiers.add(node.node_id)
    for package in graph.packages:
        identifiers.add(package.package_id)
    warnings.extend(identifiers.warnings)
    identifiers.warnings = warnings  # single warning sink from here on

    return _Layout(
        identifiers=identifiers,
        members_by_class=members_by_class,
        placed_members=placed_members,
        top_level_nodes=top_level_nodes,
        top_level_packages=top_level_packages,
        node_by_id=node_by_id,
        package_by_id=package_by_id,
        warnings=warnings,
    )


def _one_line(text: str) -> str:
    return " ".join(text.split())


def _capped(text: str, warnings: list[str], what: str) -> str:
    line = _one_line(text)
    if len(line) > _NOTE_CAP:
        warnings.append(f"{what} truncated to {_NOTE_CAP} characters")
        return line[: _NOTE_CAP - 3] + "..."
    return line


def _member_line(node: Node) -> str:
    symbol = _VISIBILITY_SYMBOL[node.visibility]
    if node.type is NodeKind.METHOD:
        line = f"{symbol}{node.name}({node.params or ''})"
    else:
        line = f"{symbol}{node.name}"
    if node.return_type:
        line += f" : {node.return_type}"
    return line


def _edge_endpoint(endpoint: str, layout: _Layout, dialect: MarkupFormat) -> str:
    """Markup reference for an edge endpoint.

    Endpoints rendered inside a class body cannot be referenced bare (both
    dialects would autocreate a phantom element). PlantUML anchors them with
    Owner::member when the member name allows it; otherwise the edge moves to
    the owning class with a warning.
    """
    node = layout.node_by_id.get(endpoint)
    if node is not None and endpoint in layout.placed_members:
        owner_alias = layout.identifiers[node.source_class_id]
        if dialect is MarkupFormat.PLANTUML and _SAFE_IDENTIFIER.match(node.name):
            return f"{owner_alias}::{node.name}"
        layout.warnings.append(
            f"edge endpoint {endpoint!r} is a member of {node.source_class_id!r}; "
            "linking the class instead"
        )
        return owner_alias
    if endpoint not in layout.identifiers:
        layout.warnings.append(f"edge endpoint {endpoint!r} is not a declared element")
    return layout.identifiers.add(endpoint)


def _quote_plantuml(name: str) -> str:
    return '"' + name.replace('"', "'") + '"'


def to_plantuml(graph: Graph) -> RenderOutput:
    """Emit PlantUML class-diagram markup; raises NonDrawableError on bad structure."""
    preflight(graph)
    layout = _plan(graph)
    ids = layout.identifiers
    lines: list[str] = ["@startuml"]

    def declare(node: Node, indent: str) -> None:
        alias = ids[node.node_id]
        if node.type is NodeKind.ENTITY:
            keyword = "entity"
        else:
            keyword = "class"
        if node.name == alias and _SAFE_IDENTIFIER.match(node.name):
            head = f"{keyword} {alias}"
        else:
            head = f"{keyword} {_quote_plantuml(node.name)} as {alias}"
        stereo = ""
        if node.type not in (NodeKind.CLASS, NodeKind.ENTITY):
            stereo = f" <<{node.type.value}>>"
        members = layout.members_by_class.get(node.node_id, [])
        if node.type is NodeKind.CLASS and members:
            lines.append(f"{indent}{head}{stereo} {{")
            for member in members:
                lines.append(f"{indent}  {_member_line(member)}")
            lines.append(f"{indent}}}")
        else:
            lines.append(f"{indent}{head}{stereo}")

    emitted: set[str] = set()

    def emit_package(package: Package, indent: str) -> None:
        lines.append(f"{indent}package {_quote_plantuml(package.package_id)} {{")
        for child in package.children:
            if child in layout.package_by_id and layout.package_by_id[child] is not None:
                child_package = layout.package_by_id[child]
                if child_package.package_id in emitted:
                    layout.warnings.append(
                        f"package {child!r} already placed; skipping duplicate nesting"
                    )
                    continue
                if child in layout.node_by_id:
                    pass  # id collision: the node declaration wins below
                else:
                    emitted.add(child_package.package_id)
                    emit_package(child_package, indent + "  ")
                    continue
            node = layout.node_by_id.get(child)
            if node is None:
                continue
            if node.node_id in layout.placed_members:
                continue  # members render inside their class body
            if node.node_id in emitted:
                layout.warnings.append(
                    f"node {child!r} already placed in another package; skipping duplicate"
                )
                continue
            emitted.add(node.node_id)
            declare(node, indent + "  ")
        lines.append(f"{indent}}}")

    for node in layout.top_level_nodes:
        if node.node_id in emitted:
            continue
        emitted.add(node.node_id)
        declare(node, "")
    for package in layout.top_level_packages:
        if package.package_id in emitted:
            continue
        emitted.add(package.package_id)
        emit_package(package, "")

    for node in graph.nodes:
        if node.node_id in layout.placed_members or not node.description:
            continue
        text = _capped(node.description, layout.warnings, f"note for {node.node_id!r}")
        lines.append(f"note right of {ids[node.node_id]} : {text}")

    for edge in graph.edges:
        src = _edge_endpoint(edge.node_id_from, layout, MarkupFormat.PLANTUML)
        dst = _edge_endpoint(edge.node_id_to, layout, MarkupFormat.PLANTUML)
        if edge.description:
            lines.append(f"{src} --> {dst} : {_one_line(edge.description)}")
        else:
            lines.append(f"{src} --> {dst}")

    lines.append("@enduml")
    return RenderOutput(
        format=MarkupFormat.PLANTUML, text="\n".join(lines) + "\n", warnings=layout.warnings
    )


def _mermaid_class_lines(node: Node, layout: _Layout, indent: str) -> list[str]:
    alias = layout.identifiers[node.node_id]
    head = f"class {alias}"
    if node.name != alias:
        label = node.name.replace('"', "'")
        head = f'class {alias}["{label}"]'
    body: list[str] = []
    if node.type is not NodeKind.CLASS:
        body.append(f"{indent}  <<{node.type.value}>>")
    for member in layout.members_by_class.get(node.node_id, []):
        body.append(f"{indent}  {_member_line(member)}")
    if body:
        return [f"{indent}{head} {{", *body, f"{indent}}}"]
    return [f"{indent}{head}"]


def _flatten_packages(
    layout: _Layout, graph: Graph
) -> list[tuple[str, list[Node]]]:
    """Depth-first namespace list: (dotted name, direct node children)."""
    out: list[tuple[str, list[Node]]] = []
    placed: set[str] = set()

    def segment(package_id: str) -> str:
        cleaned = re.sub(r"[^A-Za-z0-9_]", "_", package_id) or "pkg"
        if cleaned[0].isdigit():
            cleaned = "n" + cleaned
        return cleaned

    def walk(package: Package, prefix: str) -> None:
        name = segment(package.package_id) if not prefix else f"{prefix}.{segment(package.package_id)}"
        if prefix:
            layout.warnings.append(
                f"nested package {package.package_id!r} flattened to namespace {name!r}"
            )
        direct: list[Node] = []
        for child in package.children:
            node = layout.node_by_id.get(child)
            if node is not None:
                if child in layout.placed_members or child in placed:
                    continue
                placed.add(child)
                direct.append(node)
                continue
            child_package = layout.package_by_id.get(child)
            if child_package is not None and child_package.package_id not in placed:
                placed.add(child_package.package_id)
                walk(child_package, name)
        out.append((name, direct))

    for package in layout.top_level_packages:
        if package.package_id not in placed:
            placed.add(package.package_id)
            walk(package, "")
    return out


def to_mermaid(graph: Graph) -> RenderOutput:
    """Emit Mermaid classDiagram markup; nested packages flatten to dotted namespaces."""
    preflight(graph)
    layout = _plan(graph)
    lines: list[str] = ["classDiagram"]

    flattened = _flatten_packages(layout, graph)
    in_namespace = {n.node_id for _, direct in flattened for n in direct}

    for node in graph.nodes:
        if node.node_id in layout.placed_members or node.node_id in in_namespace:
            continue
        lines.extend(_mermaid_class_lines(node, layout, "  "))

    for name, direct in flattened:
        if not direct:
            layout.warnings.append(f"namespace {name!r} has no drawable classes; skipped")
            continue
        lines.append(f"  namespace {name} {{")
        for node in direct:
            lines.extend(_mermaid_class_lines(node, layout, "    "))
        lines.append("  }")

    for edge in graph.edges:
        src = _edge_endpoint(edge.node_id_from, layout, MarkupFormat.MERMAID)
        dst = _edge_endpoint(edge.node_id_to, layout, MarkupFormat.MERMAID)
        if edge.description:
            lines.append(f"  {src} --> {dst} : {_one_line(edge.description)}")
        else:
            lines.append(f"  {src} --> {dst}")

    return RenderOutput(
        format=MarkupFormat.MERMAID, text="\n".join(lines) + "\n", warnings=layout.warnings
    )


def render(graph: Graph, format: MarkupFormat) -> RenderOutput:
    if format is MarkupFormat.PLANTUML:
        return to_plantuml(graph)
    return to_mermaid(graph)
