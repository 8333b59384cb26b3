"""Skeleton instantiation and ground graphs.

A skeleton holds concrete entity and relationship instances consistent with
the schema cardinalities.  Applying the model's dependencies to a skeleton
yields the ground graph over (instance, attribute) pairs; this is the object
the abstract ground graphs are meant to summarize, and the reference point
for the d-separation soundness checks.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .dsep import d_separated
from .schema import Cardinality, Lrcm, Path, RelationalVariable, Schema

Instance = tuple[str, int]  # (class name, index)
GroundNode = tuple[Instance, str]  # (instance, attribute name)


@dataclass
class Skeleton:
    schema: Schema
    instances: dict[str, list[Instance]] = field(default_factory=dict)
    # relationship instance -> slot-aligned participant instances
    links: dict[Instance, tuple[Instance, ...]] = field(default_factory=dict)
    # entity instance -> relationship instances it participates in
    memberships: dict[Instance, list[Instance]] = field(default_factory=dict)

    def neighbors(self, inst: Instance) -> list[Instance]:
        cls = inst[0]
        if self.schema.is_entity(cls):
            return self.memberships.get(inst, [])
        return list(self.links[inst])


def generate_skeleton(schema: Schema, rng: random.Random,
                      max_entities: int = 4, max_links: int = 5) -> Skeleton:
    """Random skeleton honoring ONE cardinalities.

    Every entity class gets at least two instances and every relationship
    class at least one, so no class is degenerate.
    """
    skel = Skeleton(schema)
    for name in schema.entities:
        count = rng.randint(2, max_entities)
        skel.instances[name] = [(name, i) for i in range(count)]
        for inst in skel.instances[name]:
            skel.memberships[inst] = []
    for name, rel in schema.relationships.items():
        skel.instances[name] = []
        used_by_slot: list[set[Instance]] = [set() for _ in rel.participants]
        target = rng.randint(1, max_links)
        attempts = 0
        while len(skel.instances[name]) < target and attempts < 20 * max_links:
            attempts += 1
            slots = []
            for slot_idx, (ent, card) in enumerate(rel.participants):
                pool = [e for e in skel.instances[ent]
                        if card is Cardinality.MANY or e not in used_by_slot[slot_idx]]
                if not pool:
                    slots = None
                    break
                slots.append(rng.choice(pool))
            if slots is None:
                break
            # A relationship instance is a tuple of entity instances, so two
            # links over the same tuple would collapse into one.
            if tuple(slots) in skel.links.values():
                continue
            inst = (name, len(skel.instances[name]))
            skel.instances[name].append(inst)
            skel.links[inst] = tuple(slots)
            for slot_idx, member in enumerate(slots):
                used_by_slot[slot_idx].add(member)
                skel.memberships[member].append(inst)
    return skel


def terminal_set(skel: Skeleton, start: Instance, path: Path) -> set[Instance]:
    """Instances reached by walking `path` with bridge burning.

    At every step the walk may not return to the instance it just left.
    """
    if start[0] != path[0]:
        raise ValueError(f"instance {start} does not start path {path}")
    frontier: set[tuple[Instance, Instance | None]] = {(start, None)}
    for cls in path[1:]:
        nxt: set[tuple[Instance, Instance | None]] = set()
        for inst, prev in frontier:
            for other in skel.neighbors(inst):
                if other[0] != cls or other == prev:
                    continue
                nxt.add((other, inst))
        frontier = nxt
    return {inst for inst, _ in frontier}


@dataclass
class GroundGraph:
    nodes: list[GroundNode] = field(default_factory=list)
    parents: dict[GroundNode, set[GroundNode]] = field(default_factory=dict)
    children: dict[GroundNode, set[GroundNode]] = field(default_factory=dict)

    def add_node(self, node: GroundNode) -> None:
        if node not in self.parents:
            self.nodes.append(node)
            self.parents[node] = set()
            self.children[node] = set()

    def add_edge(self, src: GroundNode, dst: GroundNode) -> None:
        self.parents[dst].add(src)
        self.children[src].add(dst)

    def is_acyclic(self) -> bool:
        color: dict[GroundNode, int] = {}
        for root in self.nodes:
            if root in color:
                continue
            stack = [(root, iter(self.children[root]))]
            color[root] = 1
            while stack:
                node, it = stack[-1]
                moved = False
                for child in it:
                    state = color.get(child)
                    if state == 1:
                        return False
                    if state is None:
                        color[child] = 1
                        stack.append((child, iter(self.children[child])))
                        moved = True
                        break
                if not moved:
                    color[node] = 2
                    stack.pop()
        return True

    def d_separated(self, xs, ys, zs) -> bool:
        return d_separated(self.parents, self.children, xs, ys, zs)


def build_ground_graph(model: Lrcm, skel: Skeleton) -> GroundGraph:
    """Instantiate every dependency over every effect-class instance."""
    graph = GroundGraph()
    for cls in model.schema.item_names():
        for attr in model.schema.attributes_of(cls):
            for inst in skel.instances[cls]:
                graph.add_node((inst, attr.name))
    for dep in model.dependencies:
        effect_cls = dep.effect.terminal
        for inst in skel.instances[effect_cls]:
            effect_node = (inst, dep.effect.attr)
            for src_inst in terminal_set(skel, inst, dep.cause.path):
                graph.add_edge((src_inst, dep.cause.attr), effect_node)
    return graph


def ground_terminal_nodes(skel: Skeleton, base: Instance,
                          var: RelationalVariable) -> set[GroundNode]:
    return {(inst, var.attr) for inst in terminal_set(skel, base, var.path)}
