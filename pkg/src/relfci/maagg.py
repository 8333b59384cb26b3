"""Ground-truth ancestral abstract graphs over the observed variables.

Starting from the latent-inclusive abstract ground graph of one perspective,
two observed nodes become adjacent exactly when an inducing walk connects
them: every intermediate non-collider is latent and every intermediate
collider is an ancestor of one of the endpoints.  End marks then follow
ancestry alone - a tail where the node is an ancestor of the other endpoint,
an arrowhead otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .agg import AggNode, IntersectionNode, Lagg, build_lagg
from .dsep import ancestors_of
from .schema import Lrcm, RelationalVariable
from .state import Mark, EndKey, _GLYPH

MarkPair = tuple[Mark, Mark]


def _has_inducing_walk(lagg: Lagg, x: AggNode, y: AggNode,
                       latents: set[AggNode]) -> bool:
    if x == y:
        return False
    if lagg.has_edge(x, y) or lagg.has_edge(y, x):
        return True
    anc = ancestors_of(lagg.parents, {x, y})
    # state: (node, arrived through an arrowhead)
    seen: set[tuple[AggNode, bool]] = set()
    stack: list[tuple[AggNode, bool]] = []
    for c in lagg.children.get(x, ()):
        stack.append((c, True))
    for p in lagg.parents.get(x, ()):
        stack.append((p, False))
    while stack:
        state = stack.pop()
        if state in seen:
            continue
        seen.add(state)
        v, arrived_head = state
        if v == y:
            return True
        if v == x:
            continue
        for c in lagg.children.get(v, ()):
            # leaving through a tail: v is a non-collider, must be latent
            if v in latents:
                stack.append((c, True))
        for p in lagg.parents.get(v, ()):
            # leaving through an arrowhead: collider iff we arrived through one
            if (arrived_head and v in anc) or (not arrived_head and v in latents):
                stack.append((p, False))
    return False


@dataclass
class Maagg:
    """Maximal ancestral abstract graph for one perspective."""
    perspective: str
    nodes: list[AggNode]
    # unordered adjacency; marks[(u, v)] = mark decorating u's end
    marks: dict[tuple[AggNode, AggNode], Mark] = field(default_factory=dict)
    adj: dict[AggNode, set[AggNode]] = field(default_factory=dict)

    def has_edge(self, u: AggNode, v: AggNode) -> bool:
        return v in self.adj.get(u, ())

    def mark_at(self, u: AggNode, v: AggNode, node: AggNode) -> Mark:
        other = v if node == u else u
        return self.marks[(node, other)]

    def edges(self) -> list[tuple[AggNode, AggNode]]:
        out = []
        for u, nbrs in self.adj.items():
            for v in nbrs:
                if str(u) < str(v):
                    out.append((u, v))
        return sorted(out, key=lambda e: (str(e[0]), str(e[1])))

    def dump(self) -> list[str]:
        lines = []
        for u, v in self.edges():
            mu, mv = self.marks[(u, v)], self.marks[(v, u)]
            if (mu, mv) in _GLYPH:
                lines.append(f"{u} {_GLYPH[(mu, mv)]} {v}")
            else:
                lines.append(f"{v} {_GLYPH[(mv, mu)]} {u}")
        return lines


def build_maagg(lagg: Lagg, horizon: int | None = None) -> Maagg:
    """Adjacency and marks among in-horizon observed nodes.

    Nodes past the horizon exist only as ancestor scaffolding: no
    conditioning set can name them, so inducing walks treat them exactly
    like latent attributes.  An intersection node stays conditionable as
    long as one of its members is, because conditioning a member also
    conditions the intersection.
    """
    def beyond(node: AggNode) -> bool:
        if horizon is None:
            return False
        if isinstance(node, IntersectionNode):
            return all(len(m.path) - 1 > horizon for m in node.members)
        return len(node.path) - 1 > horizon

    latents = {n for n in lagg.nodes if n in lagg.latent_nodes or beyond(n)}
    observed = [n for n in lagg.nodes if n not in latents]
    observed.sort(key=str)
    maagg = Maagg(lagg.perspective, observed)
    maagg.adj = {n: set() for n in observed}
    anc_cache = {n: ancestors_of(lagg.parents, {n}) for n in observed}
    for i, u in enumerate(observed):
        for v in observed[i + 1:]:
            if not _has_inducing_walk(lagg, u, v, latents):
                continue
            maagg.adj[u].add(v)
            maagg.adj[v].add(u)
            maagg.marks[(u, v)] = Mark.TAIL if u in anc_cache[v] else Mark.ARROW
            maagg.marks[(v, u)] = Mark.TAIL if v in anc_cache[u] else Mark.ARROW
    return maagg


def build_maaggs(model: Lrcm, hop_threshold: int) -> dict[str, Maagg]:
    return {
        name: build_maagg(
            build_lagg(model, name, hop_threshold, ancestral_closure=True),
            horizon=hop_threshold)
        for name in model.schema.item_names()
    }


def _end_of(node: AggNode) -> EndKey:
    if isinstance(node, IntersectionNode):
        return (node.a.terminal, node.attr)
    return (node.terminal, node.attr)


def truth_edges(model: Lrcm, hop_threshold: int,
                maaggs: dict[str, Maagg] | None = None,
                ) -> dict[tuple[EndKey, ...], set[MarkPair]]:
    """Class-level truth: adjacency and end marks keyed by attribute ends.

    Every base-node edge of every perspective projects onto the unordered
    pair of (item class, attribute) ends it connects.  Distinct abstract
    copies of the same attribute pair can legitimately carry different mark
    combinations (a near copy can be an ancestor where a far copy is merely
    confounded), so each key maps to the set of observed mark pairs, stored
    symmetrically when the two ends coincide.
    """
    if maaggs is None:
        maaggs = build_maaggs(model, hop_threshold)
    out: dict[tuple[EndKey, ...], set[MarkPair]] = {}
    for maagg in maaggs.values():
        for u, v in maagg.edges():
            if isinstance(u, IntersectionNode) or isinstance(v, IntersectionNode):
                continue
            eu, ev = _end_of(u), _end_of(v)
            mu, mv = maagg.marks[(u, v)], maagg.marks[(v, u)]
            if eu == ev:
                out.setdefault((eu,), set()).update({(mu, mv), (mv, mu)})
            else:
                key = tuple(sorted((eu, ev)))
                pair = (mu, mv) if key == (eu, ev) else (mv, mu)
                out.setdefault(key, set()).add(pair)
    return out
