"""Abstract ground graphs lifted from a relational model.

For a perspective B the graph has one node per relational variable reachable
within the node hop threshold, plus intersection nodes for pairs of
same-attribute variables whose instantiations can overlap.  Edges come from
extending each dependency's cause path along every path to the effect class
(the pivot construction); intersection nodes inherit the edges of both
members.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .schema import (
    Lrcm,
    Path,
    RelationalDependency,
    RelationalVariable,
    Schema,
    enumerate_variables,
    validate_path,
)


def pivots(p1: Path, p2: Path) -> list[int]:
    """Lengths i at which p1 and p2 share their first i items."""
    out = []
    for i in range(1, min(len(p1), len(p2)) + 1):
        if p1[:i] == p2[:i]:
            out.append(i)
    return out


def extend(schema: Schema, p_orig: Path, p_ext: Path) -> list[Path]:
    """All valid concatenations of p_orig with p_ext at each pivot.

    p_ext must start at the class where p_orig ends.  For pivot i the
    candidate is p_orig minus its last i-1 items followed by p_ext minus its
    first i items.
    """
    if p_orig[-1] != p_ext[0]:
        raise ValueError(f"extension path {p_ext} does not start where {p_orig} ends")
    n_o = len(p_orig)
    out = []
    for i in pivots(tuple(reversed(p_orig)), p_ext):
        cand = p_orig[: n_o - i + 1] + p_ext[i:]
        if validate_path(schema, cand) and cand not in out:
            out.append(cand)
    return out


@dataclass(frozen=True, order=True)
class IntersectionNode:
    """Overlap of two same-attribute relational variables."""
    a: RelationalVariable
    b: RelationalVariable

    def __str__(self) -> str:
        return f"{self.a} ^ {self.b}"

    @property
    def attr(self) -> str:
        return self.a.attr

    @property
    def members(self) -> tuple[RelationalVariable, RelationalVariable]:
        return (self.a, self.b)


AggNode = RelationalVariable | IntersectionNode


def dense_skeleton(schema: Schema, n_entities: int = 4):
    """Deterministic densely linked skeleton used for overlap tests.

    Every entity class gets `n_entities` instances.  MANY/MANY
    relationships take every instance pair; a ONE side limits its
    instances to a single link each, spread over the other side.
    """
    from .ground import Skeleton

    skel = Skeleton(schema)
    for name in schema.entities:
        skel.instances[name] = [(name, i) for i in range(n_entities)]
        for inst in skel.instances[name]:
            skel.memberships[inst] = []
    from .schema import Cardinality

    def add_link(name, combo):
        inst = (name, len(skel.instances[name]))
        skel.instances[name].append(inst)
        skel.links[inst] = tuple(combo)
        for member in combo:
            skel.memberships[member].append(inst)

    for name, rel in schema.relationships.items():
        skel.instances[name] = []
        sides = [skel.instances[ent] for ent, _ in rel.participants]
        cards = [card for _, card in rel.participants]
        if len(sides) == 2 and all(c is Cardinality.MANY for c in cards):
            for a in sides[0]:
                for b in sides[1]:
                    add_link(name, (a, b))
            continue
        if len(sides) == 2:
            # exactly one ONE side: give each of its instances one link,
            # doubling up on the other side so MANY stays exercised
            one_idx = 0 if cards[0] is Cardinality.ONE else 1
            many_idx = 1 - one_idx
            many_side = sides[many_idx]
            fan = max(1, len(many_side) // 2)
            for i, inst in enumerate(sides[one_idx]):
                combo = [None, None]
                combo[one_idx] = inst
                combo[many_idx] = many_side[i % fan]
                if cards[many_idx] is Cardinality.ONE and i >= len(many_side):
                    break
                if cards[many_idx] is Cardinality.ONE:
                    combo[many_idx] = many_side[i]
                add_link(name, tuple(combo))
            continue
        used: list[set] = [set() for _ in cards]
        from itertools import product
        for combo in product(*sides):
            if any(c is Cardinality.ONE and inst in u
                   for c, inst, u in zip(cards, combo, used)):
                continue
            add_link(name, combo)
            for inst, u in zip(combo, used):
                u.add(inst)
    return skel


def paths_may_intersect(schema: Schema, p1: Path, p2: Path,
                        _cache: dict = {}) -> bool:
    """Can the two paths reach a shared terminal instance from one base?

    Decided constructively on a deterministic dense skeleton: walk both
    paths (with bridge burning) from every base instance and look for an
    overlap of the reached sets.
    """
    from .ground import terminal_set

    key = (id(schema), p1, p2)
    if key in _cache:
        return _cache[key]
    skel_key = (id(schema),)
    if skel_key not in _cache:
        _cache[skel_key] = dense_skeleton(schema)
    skel = _cache[skel_key]
    out = False
    for base in skel.instances[p1[0]]:
        if terminal_set(skel, base, p1) & terminal_set(skel, base, p2):
            out = True
            break
    _cache[key] = out
    return out


def _is_prefix(p1: Path, p2: Path) -> bool:
    return len(p1) <= len(p2) and p2[: len(p1)] == p1


@dataclass
class Lagg:
    """Latent abstract ground graph for one perspective.

    Nodes cover observed and latent variables; each edge carries the set of
    dependency indices that produced it and an observed flag.
    """
    perspective: str
    nodes: list[AggNode] = field(default_factory=list)
    parents: dict[AggNode, set[AggNode]] = field(default_factory=dict)
    children: dict[AggNode, set[AggNode]] = field(default_factory=dict)
    edge_deps: dict[tuple[AggNode, AggNode], set[int]] = field(default_factory=dict)
    latent_nodes: set[AggNode] = field(default_factory=set)
    intersections: list[IntersectionNode] = field(default_factory=list)

    def add_node(self, node: AggNode, latent: bool) -> None:
        if node in self.parents:
            return
        self.nodes.append(node)
        self.parents[node] = set()
        self.children[node] = set()
        if latent:
            self.latent_nodes.add(node)

    def add_edge(self, src: AggNode, dst: AggNode, dep_idx: int) -> None:
        if src == dst:
            return
        self.parents[dst].add(src)
        self.children[src].add(dst)
        self.edge_deps.setdefault((src, dst), set()).add(dep_idx)

    def has_edge(self, src: AggNode, dst: AggNode) -> bool:
        return (src, dst) in self.edge_deps

    def base_nodes(self) -> list[RelationalVariable]:
        return [n for n in self.nodes if isinstance(n, RelationalVariable)]

    def observed_base_nodes(self) -> list[RelationalVariable]:
        return [n for n in self.base_nodes() if n not in self.latent_nodes]

    def n_edges(self) -> int:
        return len(self.edge_deps)

    def is_acyclic(self) -> bool:
        seen: dict[AggNode, int] = {}  # 1 = on stack, 2 = done

        for root in self.nodes:
            if root in seen:
                continue
            stack: list[tuple[AggNode, iter]] = [(root, iter(sorted(self.children[root], key=str)))]
            seen[root] = 1
            while stack:
                node, it = stack[-1]
                advanced = False
                for child in it:
                    state = seen.get(child)
                    if state == 1:
                        return False
                    if state is None:
                        seen[child] = 1
                        stack.append((child, iter(sorted(self.children[child], key=str))))
                        advanced = True
                        break
                if not advanced:
                    seen[node] = 2
                    stack.pop()
        return True

    def dump(self) -> list[str]:
        """One line per edge: 'SRC -> DST [dep=i,j observed=bool]'."""
        lines = []
        for (src, dst), deps in sorted(self.edge_deps.items(), key=lambda kv: (str(kv[0][0]), str(kv[0][1]))):
            observed = not (src in self.latent_nodes or dst in self.latent_nodes)
            dep_txt = ",".join(str(i) for i in sorted(deps))
            lines.append(f"{src} -> {dst} [dep={dep_txt} observed={str(observed).lower()}]")
        return lines


def dependency_edges(schema: Schema, dep: RelationalDependency,
                     variables: list[RelationalVariable],
                     ) -> list[tuple[RelationalVariable, RelationalVariable]]:
    """Edges a dependency contributes among `variables` of one perspective.

    For every node [B..I_j].X matching the effect, each extension of its path
    with the cause path that stays inside the node universe yields an edge
    from [B..I_k].Y.
    """
    universe = set(variables)
    out = []
    for target in variables:
        if target.terminal != dep.effect.terminal or target.attr != dep.effect.attr:
            continue
        for path in extend(schema, target.path, dep.cause.path):
            src = RelationalVariable(path, dep.cause.attr)
            if src in universe and src != target:
                out.append((src, target))
    return out


def close_ancestors(graph: Lagg, model: Lrcm, max_hops: int) -> None:
    """Complete every node's ancestry with variables beyond the hop bound.

    Nodes near the hop bound can miss parents whose paths are longer than
    the bound; treating them as exogenous distorts separation queries, so
    the missing ancestors are added here.  Only parent edges are created—
    no new intersection nodes—and intersection nodes inherit the new
    parents of their members.  Paths longer than `max_hops` are dropped,
    which bounds the walk even for badly formed cyclic models.
    """
    schema = model.schema
    members_of: dict[RelationalVariable, list[IntersectionNode]] = {}
    for node in graph.intersections:
        for member in node.members:
            members_of.setdefault(member, []).append(node)
    worklist = [n for n in graph.nodes if isinstance(n, RelationalVariable)]
    while worklist:
        target = worklist.pop()
        for idx, dep in enumerate(model.dependencies):
            if (target.terminal != dep.effect.terminal
                    or target.attr != dep.effect.attr):
                continue
            for path in extend(schema, target.path, dep.cause.path):
                if len(path) - 1 > max_hops:
                    continue
                src = RelationalVariable(path, dep.cause.attr)
                if src == target:
                    continue
                if src not in graph.parents:
                    graph.add_node(src, model.is_latent_attr(src.terminal, src.attr))
                    worklist.append(src)
                if not graph.has_edge(src, target):
                    graph.add_edge(src, target, idx)
                for node in members_of.get(target, ()):
                    graph.add_edge(src, node, idx)


def build_lagg(model: Lrcm, perspective: str, hop_threshold: int,
               with_intersections: bool = True,
               ancestral_closure: bool = False) -> Lagg:
    """Construct the latent abstract ground graph for one perspective."""
    schema = model.schema
    graph = Lagg(perspective)
    variables = enumerate_variables(schema, perspective, hop_threshold)
    for var in variables:
        graph.add_node(var, model.is_latent_attr(var.terminal, var.attr))

    for idx, dep in enumerate(model.dependencies):
        for src, dst in dependency_edges(schema, dep, variables):
            graph.add_edge(src, dst, idx)

    if ancestral_closure:
        n_attrs = sum(len(model.schema.attributes_of(name))
                      for name in model.schema.item_names())
        close_ancestors(graph, model, hop_threshold + model.hop_threshold * n_attrs)

    if with_intersections:
        base_edges = dict(graph.edge_deps)
        by_attr: dict[tuple[str, str], list[RelationalVariable]] = {}
        # Ancestor variables beyond the hop bound intersect too; a common
        # cause reachable along two long paths is invisible without them.
        for var in graph.nodes:
            if isinstance(var, RelationalVariable):
                by_attr.setdefault((var.terminal, var.attr), []).append(var)
        for group in by_attr.values():
            for i, a in enumerate(group):
                for b in group[i + 1:]:
                    if not paths_may_intersect(schema, a.path, b.path):
                        continue
                    node = IntersectionNode(*sorted((a, b)))
                    graph.add_node(node, a in graph.latent_nodes)
                    graph.intersections.append(node)
        # inherit the base edges of both members
        for node in graph.intersections:
            for (src, dst), deps in base_edges.items():
                for dep_idx in deps:
                    if dst in node.members:
                        graph.add_edge(src, node, dep_idx)
                    if src in node.members:
                        graph.add_edge(node, dst, dep_idx)
    return graph


def build_laggs(model: Lrcm, hop_threshold: int,
                with_intersections: bool = True,
                ancestral_closure: bool = False) -> dict[str, Lagg]:
    return {
        name: build_lagg(model, name, hop_threshold, with_intersections,
                         ancestral_closure)
        for name in model.schema.item_names()
    }
