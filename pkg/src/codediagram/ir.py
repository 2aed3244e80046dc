"""Graph intermediate representation: types, JSON parsing, canonical serialization."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

logger = logging.getLogger(__name__)


class ParseError(ValueError):
    """Base class for graph parsing failures."""


class BrokenJsonError(ParseError):
    """Input is not well-formed JSON (or is not decodable as UTF-8)."""


class SchemaError(ParseError):
    """Well-formed JSON whose shape or enum values do not match the graph schema."""


class NodeKind(str, Enum):
    CLASS = "class"
    VARIABLE = "variable"
    FUNCTION = "function"
    ENTITY = "entity"
    METHOD = "method"
    FIELD = "field"


# node kinds that belong to a class body
MEMBER_KINDS = frozenset({NodeKind.METHOD, NodeKind.FIELD})


class Visibility(str, Enum):
    PRIVATE = "private"
    PROTECTED = "protected"
    PACKAGE_PRIVATE = "package private"  # the space is part of the wire value
    PUBLIC = "public"


class DetailLevel(str, Enum):
    MINIMAL = "minimal"
    MEDIUM = "medium"
    FULL = "full"

    @classmethod
    def parse(cls, value: str) -> DetailLevel:
        """Parse a level name; 'moderate' is accepted as an input alias for medium."""
        if value == "moderate":
            return cls.MEDIUM
        try:
            return cls(value)
        except ValueError:
            raise ValueError(f"unknown detail level: {value!r}") from None


class MissingVersionError(SchemaError):
    """A diagram response lacks one of the three per-level graphs."""

    def __init__(self, level: DetailLevel):
        super().__init__(f"missing {level.value + '_version'!r} in diagram response")
        self.level = level


def _not_provided(value: str | None) -> str | None:
    # absent and empty string both mean "not provided"
    return value if value else None


@dataclass(frozen=True)
class Node:
    type: NodeKind
    name: str
    node_id: str
    description: str
    visibility: Visibility
    return_type: str | None = None
    params: str | None = None
    source_class_id: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "return_type", _not_provided(self.return_type))
        object.__setattr__(self, "params", _not_provided(self.params))
        object.__setattr__(self, "source_class_id", _not_provided(self.source_class_id))

    @property
    def is_member(self) -> bool:
        return self.type in MEMBER_KINDS


@dataclass(frozen=True)
class Edge:
    node_id_from: str
    node_id_to: str
    description: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "description", _not_provided(self.description))


@dataclass(frozen=True)
class Package:
    package_id: str
    children: list[str] = field(default_factory=list)
    description: str | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "description", _not_provided(self.description))


@dataclass(frozen=True)
class Graph:
    nodes: list[Node] = field(default_factory=list)
    edges: list[Edge] = field(default_factory=list)
    packages: list[Package] = field(default_factory=list)

    def node_ids(self) -> list[str]:
        return [n.node_id for n in self.nodes]


@dataclass(frozen=True)
class DiagramResponse:
    """One generation result: the same answer at three detail levels plus prose."""

    minimal_version: Graph
    medium_version: Graph
    full_version: Graph
    text_answer: str

    def graph_for(self, level: DetailLevel) -> Graph:
        return {
            DetailLevel.MINIMAL: self.minimal_version,
            DetailLevel.MEDIUM: self.medium_version,
            DetailLevel.FULL: self.full_version,
        }[level]


_NODE_KEYS = (
    "type",
    "name",
    "node_id",
    "description",
    "visibility",
    "return_type",
    "params",
    "source_class_id",
)
_EDGE_KEYS = ("node_id_from", "node_id_to", "description")
_PACKAGE_KEYS = ("package_id", "children", "description")
_GRAPH_KEYS = ("nodes", "edges", "packages")


def _require_dict(value: Any, where: str) -> dict:
    if not isinstance(value, dict):
        raise SchemaError(f"{where}: expected a JSON object, got {type(value).__name__}")
    return value


def _require_str(obj: dict, key: str, where: str) -> str:
    if key not in obj or obj[key] is None:
        raise SchemaError(f"{where}: missing required field {key!r}")
    value = obj[key]
    if not isinstance(value, str):
        raise SchemaError(f"{where}: field {key!r} must be a string, got {type(value).__name__}")
    if not value:
        raise SchemaError(f"{where}: field {key!r} must be non-empty")
    return value


def _optional_str(obj: dict, key: str, where: str) -> str | None:
    value = obj.get(key)
    if value is None:
        return None
    if not isinstance(value, str):
        raise SchemaError(f"{where}: field {key!r} must be a string, got {type(value).__name__}")
    return value or None


def _warn_extra_keys(obj: dict, known: tuple[str, ...], where: str) -> None:
    extra = sorted(set(obj) - set(known))
    if extra:
        logger.warning("%s: ignoring unknown fields %s", where, extra)


def node_from_dict(obj: Any, where: str = "node") -> Node:
    obj = _require_dict(obj, where)
    raw_kind = _require_str(obj, "type", where)
    try:
        kind = NodeKind(raw_kind)
    except ValueError:
        raise SchemaError(f"{where}: unknown node type {raw_kind!r}") from None
    raw_vis = _require_str(obj, "visibility", where)
    try:
        visibility = Visibility(raw_vis)
    except ValueError:
        raise SchemaError(f"{where}: unknown visibility {raw_vis!r}") from None
    _warn_extra_keys(obj, _NODE_KEYS, where)
    return Node(
        type=kind,
        name=_require_str(obj, "name", where),
        node_id=_require_str(obj, "node_id", where),
        description=_require_str(obj, "description", where),
        visibility=visibility,
        return_type=_optional_str(obj, "return_type", where),
        params=_optional_str(obj, "params", where),
        source_class_id=_optional_str(obj, "source_class_id", where),
    )


def edge_from_dict(obj: Any, where: str = "edge") -> Edge:
    obj = _require_dict(obj, where)
    _warn_extra_keys(obj, _EDGE_KEYS, where)
    return Edge(
        node_id_from=_require_str(obj, "node_id_from", where),
        node_id_to=_require_str(obj, "node_id_to", where),
        description=_optional_str(obj, "description", where),
    )


def package_from_dict(obj: Any, where: str = "package") -> Package:
    obj = _require_dict(obj, where)
    package_id = _require_str(obj, "package_id", where)
    if "children" not in obj or obj["children"] is None:
        raise SchemaError(f"{where}: missing required field 'children'")
    raw_children = obj["children"]
    if not isinstance(raw_children, list):
        raise SchemaError(f"{where}: field 'children' must be a list")
    children: list[str] = []
    for i, child in enumerate(raw_children):
        if not isinstance(child, str) or not child:
            raise SchemaError(f"{where}: children[{i}] must be a non-empty string")
        children.append(child)
    _warn_extra_keys(obj, _PACKAGE_KEYS, where)
    return Package(
        package_id=package_id,
        children=children,
        description=_optional_str(obj, "description", where),
    )


def graph_from_dict(obj: Any, where: str = "graph") -> Graph:
    obj = _require_dict(obj, where)
    for key in _GRAPH_KEYS:
        if key not in obj:
            raise SchemaError(f"{where}: missing required field {key!r}")
        if not isinstance(obj[key], list):
            raise SchemaError(f"{where}: field {key!r} must be a list")
    _warn_extra_keys(obj, _GRAPH_KEYS, where)
    nodes = [node_from_dict(n, f"{where}.nodes[{i}]") for i, n in enumerate(obj["nodes"])]
    edges = [edge_from_dict(e, f"{where}.edges[{i}]") for i, e in enumerate(obj["edges"])]
    packages = [
        package_from_dict(p, f"{where}.packages[{i}]") for i, p in enumerate(obj["packages"])
    ]
    return Graph(nodes=nodes, edges=edges, packages=packages)


def _decode(text: str | bytes) -> str:
    if isinstance(text, bytes):
        try:
            return text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise BrokenJsonError(f"input is not valid UTF-8: {exc}") from None
    return text


def parse_graph(text: str | bytes) -> Graph:
    """Parse a standalone graph document; the whole input must be one JSON object."""
    decoded = _decode(text)
    try:
        obj = json.loads(decoded)
    except json.JSONDecodeError as exc:
        raise BrokenJsonError(f"malformed JSON: {exc}") from None
    return graph_from_dict(obj)


def extract_json_object(text: str | bytes) -> dict:
    """Pull the largest balanced JSON object out of prose or fenced model output.

    Tries json.JSONDecoder.raw_decode at each candidate '{' and keeps the longest
    successful span, skipping past spans already decoded.
    """
    decoded = _decode(text)
    decoder = json.JSONDecoder()
    best: dict | None = None
    best_len = 0
    i = decoded.find("{")
    while i != -1:
        try:
            obj, end = decoder.raw_decode(decoded, i)
        except json.JSONDecodeError:
            i = decoded.find("{", i + 1)
        else:
            if isinstance(obj, dict) and end - i > best_len:
                best, best_len = obj, end - i
            i = decoded.find("{", end)
    if best is None:
        raise BrokenJsonError("no parseable JSON object found in the output")
    return best


def parse_graph_loose(text: str | bytes) -> Graph:
    """Parse a graph from model output that may carry prose or markdown fences."""
    return graph_from_dict(extract_json_object(text))


def parse_diagram_response(text: str | bytes) -> DiagramResponse:
    """Parse a three-level diagram response from model output."""
    obj = extract_json_object(text)
    graphs: dict[DetailLevel, Graph] = {}
    for level in DetailLevel:
        key = f"{level.value}_version"
        if key not in obj or obj[key] is None:
            raise MissingVersionError(level)
        graphs[level] = graph_from_dict(obj[key], where=key)
    if "text_answer" not in obj or obj["text_answer"] is None:
        raise SchemaError("diagram response: missing required field 'text_answer'")
    text_answer = obj["text_answer"]
    if not isinstance(text_answer, str):
        raise SchemaError("diagram response: field 'text_answer' must be a string")
    _warn_extra_keys(
        obj,
        ("minimal_version", "medium_version", "full_version", "text_answer"),
        "diagram response",
    )
    return DiagramResponse(
        minimal_version=graphs[DetailLevel.MINIMAL],
        medium_version=graphs[DetailLevel.MEDIUM],
        full_version=graphs[DetailLevel.FULL],
        text_answer=text_answer,
    )


def node_to_dict(node: Node) -> dict:
    out: dict[str, Any] = {
        "type": node.type.value,
        "name": node.name,
        "node_id": node.node_id,
        "description": node.description,
        "visibility": node.visibility.value,
    }
    if node.return_type is not None:
        out["return_type"] = node.return_type
    if node.params is not None:
        out["params"] = node.params
    if node.source_class_id is not None:
        out["source_class_id"] = node.source_class_id
    return out


def edge_to_dict(edge: Edge) -> dict:
    out: dict[str, Any] = {
        "node_id_from": edge.node_id_from,
        "node_id_to": edge.node_id_to,
    }
    if edge.description is not None:
        out["description"] = edge.description
    return out


def package_to_dict(package: Package) -> dict:
    out: dict[str, Any] = {
        "package_id": package.package_id,
        "children": list(package.children),
    }
    if package.description is not None:
        out["description"] = package.description
    return out


def graph_to_dict(graph: Graph) -> dict:
    return {
        "nodes": [node_to_dict(n) for n in graph.nodes],
        "edges": [edge_to_dict(e) for e in graph.edges],
        "packages": [package_to_dict(p) for p in graph.packages],
    }


def diagram_response_to_dict(response: DiagramResponse) -> dict:
    return {
        "minimal_version": graph_to_dict(response.minimal_version),
        "medium_version": graph_to_dict(response.medium_version),
        "full_version": graph_to_dict(response.full_version),
        "text_answer": response.text_answer,
    }


def serialize_graph(graph: Graph) -> str:
    """Canonical serialization: fixed key order, absent optionals omitted, 2-space indent."""
    return json.dumps(graph_to_dict(graph), indent=2, ensure_ascii=False)


def serialize_diagram_response(response: DiagramResponse) -> str:
    return json.dumps(diagram_response_to_dict(response), indent=2, ensure_ascii=False)
