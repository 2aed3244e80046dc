"""Structural helpers shared by the linter and the render preflight."""

from __future__ import annotations

from .ir import Graph, Node, NodeKind, Package


def node_index(graph: Graph) -> dict[str, Node]:
    """Map node_id to node; on duplicate ids the first occurrence wins."""
    index: dict[str, Node] = {}
    for node in graph.nodes:
        index.setdefault(node.node_id, node)
    return index


def package_index(graph: Graph) -> dict[str, Package]:
    index: dict[str, Package] = {}
    for package in graph.packages:
        index.setdefault(package.package_id, package)
    return index


def member_owner_map(graph: Graph) -> dict[str, str]:
    """Map member node_id to its source_class_id (members without one are skipped)."""
    owners: dict[str, str] = {}
    for node in graph.nodes:
        if node.is_member and node.source_class_id is not None:
            owners.setdefault(node.node_id, node.source_class_id)
    return owners


def transitive_node_ids(package: Package, graph: Graph) -> set[str]:
    """Node ids reachable from a package through nested packages, cycle-safe."""
    packages = package_index(graph)
    node_ids = {n.node_id for n in graph.nodes}
    seen_packages: set[str] = set()
    found: set[str] = set()
    stack = [package]
    while stack:
        current = stack.pop()
        if current.package_id in seen_packages:
            continue
        seen_packages.add(current.package_id)
        for child in current.children:
            if child in node_ids:
                found.add(child)
            elif child in packages:
                stack.append(packages[child])
    return found


def package_cycles(graph: Graph) -> list[list[str]]:
    """Package ids involved in nesting cycles, one sorted id list per cycle."""
    packages = package_index(graph)
    node_ids = {n.node_id for n in graph.nodes}
    # a child id naming both a node and a package resolves to the node
    adjacency = {
        pid: [c for c in pkg.children if c in packages and c not in node_ids]
        for pid, pkg in packages.items()
    }
    # iterative Tarjan; SCCs of size > 1 or with a self-loop are cycles
    counter = [0]
    index: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    cycles: list[list[str]] = []

    def strongconnect(root: str) -> None:
        work = [(root, iter(adjacency[root]))]
        index[root] = low[root] = counter[0]
        counter[0] += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            vertex, children = work[-1]
            advanced = False
            for child in children:
                if child not in index:
                    index[child] = low[child] = counter[0]
                    counter[0] += 1
                    stack.append(child)
                    on_stack.add(child)
                    work.append((child, iter(adjacency[child])))
                    advanced = True
                    break
                if child in on_stack:
                    low[vertex] = min(low[vertex], index[child])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[vertex])
            if low[vertex] == index[vertex]:
                component: list[str] = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    component.append(w)
                    if w == vertex:
                        break
                if len(component) > 1 or vertex in adjacency[vertex]:
                    cycles.append(sorted(component))

    for pid in adjacency:
        if pid not in index:
            strongconnect(pid)
    cycles.sort()
    return cycles


def immediate_package_of(graph: Graph) -> dict[str, str]:
    """Map each id to the package_id of the first package listing it as a child."""
    placement: dict[str, str] = {}
    for package in graph.packages:
        for child in package.children:
            placement.setdefault(child, package.package_id)
    return placement
