"""d-separation over parent/child adjacency maps.

Works on any DAG-shaped structure exposing `parents` and `children` dicts
(both the abstract ground graphs and the ground graphs qualify).  Uses the
standard reachability formulation: walk edges in both directions, a collider
may only be crossed when it has a descendant in the conditioning set, a
non-collider only when it is outside of it.
"""

from __future__ import annotations

from collections import deque
from typing import Hashable, Iterable, Mapping, Set

Node = Hashable


def ancestors_of(parents: Mapping[Node, Set[Node]], nodes: Iterable[Node]) -> set[Node]:
    """The given nodes together with everything upstream of them."""
    out: set[Node] = set()
    stack = list(nodes)
    while stack:
        node = stack.pop()
        if node in out:
            continue
        out.add(node)
        stack.extend(parents.get(node, ()))
    return out


def d_connected(parents: Mapping[Node, Set[Node]],
                children: Mapping[Node, Set[Node]],
                xs: Iterable[Node], ys: Iterable[Node],
                zs: Iterable[Node]) -> bool:
    xs, ys, zs = set(xs), set(ys), set(zs)
    if xs & ys:
        return True
    anc_z = ancestors_of(parents, zs)

    # state: (node, arrived_through_arrowhead)
    queue: deque[tuple[Node, bool]] = deque()
    visited: set[tuple[Node, bool]] = set()
    for x in xs - zs:
        queue.append((x, False))
        queue.append((x, True))
    while queue:
        node, into = queue.popleft()
        if (node, into) in visited:
            continue
        visited.add((node, into))
        if node in ys:
            return True
        # leave through a child (tail at node): node acts as a non-collider
        # unless we arrived by an arrowhead and conditioning reopens nothing.
        if node not in zs:
            for child in children.get(node, ()):
                queue.append((child, True))
        # leave through a parent (arrowhead at node on the incoming edge):
        # crossing is collider-like only when we also arrived by an arrowhead.
        if into:
            if node in anc_z:
                for parent in parents.get(node, ()):
                    queue.append((parent, False))
        else:
            if node not in zs:
                for parent in parents.get(node, ()):
                    queue.append((parent, False))
    return False


def d_separated(parents: Mapping[Node, Set[Node]],
                children: Mapping[Node, Set[Node]],
                xs: Iterable[Node], ys: Iterable[Node],
                zs: Iterable[Node]) -> bool:
    return not d_connected(parents, children, xs, ys, zs)
