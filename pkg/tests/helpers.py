"""Shared builders and random generators for the test suite."""

from __future__ import annotations

import random
import string

from codediagram.ir import (
    DetailLevel,
    Edge,
    Graph,
    Node,
    NodeKind,
    Package,
    Visibility,
)

KINDS = list(NodeKind)
VISIBILITIES = list(Visibility)


def node(
    node_id: str,
    kind: str = "class",
    name: str | None = None,
    description: str = "a node",
    visibility: str = "public",
    return_type: str | None = None,
    params: str | None = None,
    source_class_id: str | None = None,
) -> Node:
    return Node(
        type=NodeKind(kind),
        name=name if name is not None else node_id,
        node_id=node_id,
        description=description,
        visibility=Visibility(visibility),
        return_type=return_type,
        params=params,
        source_class_id=source_class_id,
    )


def edge(src: str, dst: str, description: str | None = None) -> Edge:
    return Edge(node_id_from=src, node_id_to=dst, description=description)


def package(package_id: str, children: list[str], description: str | None = None) -> Package:
    return Package(package_id=package_id, children=children, description=description)


def graph(nodes=(), edges=(), packages=()) -> Graph:
    return Graph(nodes=list(nodes), edges=list(edges), packages=list(packages))


def base_graph() -> Graph:
    """Two linked classes; lints clean."""
    return graph(
        nodes=[node("A"), node("B")],
        edges=[edge("A", "B")],
    )


_NAME_ALPHABET = string.ascii_letters + string.digits + "_"
_ODD_CHARS = " \té中{}\"'\\<>:#"


def random_identifier(rng: random.Random, odd: bool = False) -> str:
    length = rng.randint(1, 12)
    pool = _NAME_ALPHABET + (_ODD_CHARS if odd else "")
    return "".join(rng.choice(pool) for _ in range(length))


def random_graph(rng: random.Random) -> Graph:
    """Any schema-valid graph, including odd-but-legal strings; for round-trips."""
    node_count = rng.randint(0, 8)
    nodes = []
    for i in range(node_count):
        kind = rng.choice(KINDS)
        nodes.append(
            Node(
                type=kind,
                name=random_identifier(rng, odd=rng.random() < 0.3),
                node_id=f"n{i}_{random_identifier(rng)}",
                description=random_identifier(rng, odd=True),
                visibility=rng.choice(VISIBILITIES),
                return_type=rng.choice([None, "", "int", "List[str]"]),
                params=rng.choice([None, "", "a, b", "config: Dict"]),
                source_class_id=rng.choice([None, "", "n0_x"]) if rng.random() < 0.5 else None,
            )
        )
    ids = [n.node_id for n in nodes] or ["ghost"]
    edges = [
        Edge(
            node_id_from=rng.choice(ids),
            node_id_to=rng.choice(ids),
            description=rng.choice([None, "", "uses", "calls into"]),
        )
        for _ in range(rng.randint(0, 6))
    ]
    packages = [
        Package(
            package_id=f"p{i}_{random_identifier(rng, odd=rng.random() < 0.2)}",
            children=rng.sample(ids, k=rng.randint(0, min(3, len(ids)))),
            description=rng.choice([None, "", "group"]),
        )
        for i in range(rng.randint(0, 3))
    ]
    return Graph(nodes=nodes, edges=edges, packages=packages)


def random_drawable_graph(rng: random.Random) -> Graph:
    """A graph that always passes preflight; may still carry minor/severe defects."""
    node_count = rng.randint(1, 7)
    nodes = [node(f"N{i}", kind=rng.choice(["class", "function", "entity"])) for i in range(node_count)]
    ids = [n.node_id for n in nodes]
    edges = [
        edge(rng.choice(ids), rng.choice(ids), rng.choice([None, "link"]))
        for _ in range(rng.randint(0, node_count))
    ]
    packages = []
    if rng.random() < 0.5 and node_count >= 2:
        split = rng.randint(1, node_count - 1)
        packages.append(package("left", ids[:split]))
        if rng.random() < 0.5:
            packages.append(package("right", ids[split:]))
    return graph(nodes, edges, packages)


def sample_listener_graph() -> Graph:
    """Small service-worker listener answer: one class with a method, one concept."""
    return graph(
        nodes=[
            node(
                "CRServiceWorker",
                kind="class",
                description="service worker that wires browser events",
            ),
            node(
                "addListeners",
                kind="method",
                name="addListeners",
                description="registers every event listener",
                visibility="public",
                params="",
                return_type="void",
                source_class_id="CRServiceWorker",
            ),
            node(
                "BrowserEvents",
                kind="entity",
                description="browser event sources the worker subscribes to",
            ),
        ],
        edges=[
            edge("addListeners", "BrowserEvents", "subscribes to events"),
        ],
    )


LISTENER_SOURCE = """
class CRServiceWorker {
  constructor() {
    this.addListeners();
  }
  addListeners() {
    chrome.runtime.onMessage.addListener(this.onMessage);
    chrome.tabs.onUpdated.addListener(this.onTabUpdated);
  }
}
"""


def level_values() -> list[str]:
    return [level.value for level in DetailLevel]
