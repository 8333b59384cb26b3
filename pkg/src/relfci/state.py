"""Discovery-time state: candidate dependency pairs, marks, partial AGGs.

Every candidate adjacency is an unordered pair of mirrored canonical
dependencies {d1, d2}.  Orientation marks live once per pair, keyed by the
(item class, attribute) end they decorate; the per-perspective graphs only
hold views onto those shared entries, which is what makes an orientation in
one perspective propagate everywhere else the dependency shows up.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .agg import dependency_edges
from .schema import (
    Lrcm,
    RelationalDependency,
    RelationalVariable,
    enumerate_paths,
    enumerate_variables,
)

EndKey = tuple[str, str]  # (item class, attribute)


class Mark(enum.Enum):
    CIRCLE = "o"
    TAIL = "-"
    ARROW = ">"


class ConflictError(RuntimeError):
    """A rule tried to overwrite a committed (non-circle) mark."""


def end_of(node: RelationalVariable) -> EndKey:
    return (node.terminal, node.attr)


@dataclass
class DependencyPair:
    """Mirrored candidate dependencies sharing one adjacency and its marks."""
    key: str
    d1: RelationalDependency
    d2: RelationalDependency
    ends: tuple[EndKey, ...]
    marks: dict[EndKey, Mark]
    removed: bool = False
    # (perspective, unordered node pair) of every edge view
    views: list[tuple[str, frozenset[RelationalVariable]]] = field(default_factory=list)

    @property
    def palindromic(self) -> bool:
        return len(self.ends) == 1

    def mark_at(self, end: EndKey) -> Mark:
        return self.marks[end]

    def dependency_into(self, end: EndKey) -> RelationalDependency:
        """The member dependency whose effect sits at `end`."""
        for dep in (self.d1, self.d2):
            if end_of(dep.effect) == end:
                return dep
        raise KeyError(f"{end} is not an end of {self.key}")


def mirror_dependency(dep: RelationalDependency) -> RelationalDependency:
    cause = RelationalVariable(tuple(reversed(dep.cause.path)), dep.effect.attr)
    effect = RelationalVariable((dep.cause.terminal,), dep.cause.attr)
    return RelationalDependency(cause, effect)


def make_pair(dep: RelationalDependency) -> DependencyPair:
    other = mirror_dependency(dep)
    d1, d2 = sorted((dep, other), key=str)
    key = f"{d1} | {d2}" if str(d1) != str(d2) else str(d1)
    ends = tuple(sorted({end_of(d1.effect), end_of(d2.effect)}))
    marks = {end: Mark.CIRCLE for end in ends}
    return DependencyPair(key, d1, d2, ends, marks)


def candidate_pairs(model: Lrcm, max_hops: int) -> list[DependencyPair]:
    """All canonical dependency pairs between observed attributes.

    One pair per unordered {d, mirror(d)} with cause hop <= max_hops; the
    mirror of a valid cause path is valid, so enumerating from every effect
    class and deduplicating by key covers both directions.
    """
    schema = model.schema
    pairs: dict[str, DependencyPair] = {}
    for cls in schema.item_names():
        effect_attrs = [a for a in schema.attributes_of(cls) if not a.latent]
        if not effect_attrs:
            continue
        for path in enumerate_paths(schema, cls, max_hops):
            for cause_attr in schema.attributes_of(path[-1]):
                if cause_attr.latent:
                    continue
                for effect_attr in effect_attrs:
                    if len(path) == 1 and cause_attr.name == effect_attr.name:
                        continue
                    dep = RelationalDependency(
                        RelationalVariable(path, cause_attr.name),
                        RelationalVariable((cls,), effect_attr.name))
                    pair = make_pair(dep)
                    pairs.setdefault(pair.key, pair)
    return [pairs[k] for k in sorted(pairs)]


class Paagg:
    """Partial ancestral AGG for one perspective (observed base nodes)."""

    def __init__(self, perspective: str, nodes: list[RelationalVariable]):
        self.perspective = perspective
        self.nodes = sorted(nodes)
        self.adj: dict[RelationalVariable, dict[RelationalVariable, set[str]]] = {
            n: {} for n in self.nodes}

    def add_view(self, u: RelationalVariable, v: RelationalVariable, key: str) -> None:
        self.adj[u].setdefault(v, set()).add(key)
        self.adj[v].setdefault(u, set()).add(key)

    def neighbors(self, node: RelationalVariable) -> list[RelationalVariable]:
        return sorted(self.adj[node])

    def has_edge(self, u: RelationalVariable, v: RelationalVariable) -> bool:
        return v in self.adj[u]

    def edges(self) -> list[tuple[RelationalVariable, RelationalVariable]]:
        out = []
        for u in self.nodes:
            for v in self.adj[u]:
                if u < v:
                    out.append((u, v))
        return out


@dataclass
class SepsetStore:
    """Separating sets per perspective and unordered node pair."""
    data: dict[tuple[str, frozenset[RelationalVariable]], frozenset[RelationalVariable] | None] = \
        field(default_factory=dict)

    def get(self, perspective, u, v):
        return self.data.get((perspective, frozenset((u, v))))

    def has(self, perspective, u, v) -> bool:
        return (perspective, frozenset((u, v))) in self.data

    def put(self, perspective, u, v, sepset) -> None:
        self.data[(perspective, frozenset((u, v)))] = sepset


class DiscoveryState:
    """PAAGGs for every perspective plus the shared mark store."""

    def __init__(self, model: Lrcm, h_prime: int, candidate_hops: int,
                 directed_only: bool = False):
        self.model = model
        self.h_prime = h_prime
        self.candidate_hops = candidate_hops
        self.directed_only = directed_only
        self.pairs: dict[str, DependencyPair] = {}
        self.paaggs: dict[str, Paagg] = {}
        self.sepsets = SepsetStore()

        schema = model.schema
        universes = {
            name: enumerate_variables(schema, name, h_prime, include_latent=False)
            for name in schema.item_names()
        }
        for name, variables in universes.items():
            self.paaggs[name] = Paagg(name, variables)
        for pair in candidate_pairs(model, candidate_hops):
            self.pairs[pair.key] = pair
            deps = [pair.d1] if str(pair.d1) == str(pair.d2) else [pair.d1, pair.d2]
            for name, variables in universes.items():
                for dep in deps:
                    for src, dst in dependency_edges(schema, dep, variables):
                        view = frozenset((src, dst))
                        if (name, view) not in pair.views:
                            pair.views.append((name, view))
                            self.paaggs[name].add_view(src, dst, pair.key)

    # -- adjacency bookkeeping -----------------------------------------

    def pairs_on_edge(self, perspective: str, u, v) -> list[DependencyPair]:
        return [self.pairs[k] for k in sorted(self.paaggs[perspective].adj[u][v])]

    def remove_pair(self, key: str) -> None:
        pair = self.pairs[key]
        if pair.removed:
            return
        pair.removed = True
        for perspective, view in pair.views:
            u, v = tuple(view)
            adj = self.paaggs[perspective].adj
            if v in adj[u]:
                adj[u][v].discard(key)
                adj[v][u].discard(key)
                if not adj[u][v]:
                    del adj[u][v]
                    del adj[v][u]

    def remove_adjacency(self, perspective: str, u, v,
                         sepset: frozenset[RelationalVariable]) -> None:
        """Drop every dependency behind an edge, everywhere it shows up."""
        for pair in self.pairs_on_edge(perspective, u, v):
            self.remove_pair(pair.key)
        self.sepsets.put(perspective, u, v, sepset)

    # -- marks ----------------------------------------------------------

    def mark_at(self, perspective: str, u, v, node) -> Mark:
        """The mark decorating `node`'s end of edge (u, v).

        Distinct dependencies sharing the edge may be oriented at
        different times; an undecided circle yields to the mark some
        co-resident dependency has already earned.  A tail and an arrow
        cannot both decorate one end, so that split is a conflict.
        """
        end = end_of(node)
        marks = {p.mark_at(end) for p in self.pairs_on_edge(perspective, u, v)}
        hard = marks - {Mark.CIRCLE}
        if len(hard) > 1:
            # One co-resident dependency is ancestral, another purely
            # confounding; no single decoration is right, so the edge
            # stays undecided and triggers no further rules.
            return Mark.CIRCLE
        return hard.pop() if hard else Mark.CIRCLE

    def set_mark(self, perspective: str, u, v, node, mark: Mark,
                 strict: bool = True) -> bool:
        """Refine the mark at `node`'s end of edge (u, v) on every pair.

        Returns True when at least one mark changed.  With strict=True a
        tail/arrow disagreement raises; otherwise the write is skipped.
        """
        end = end_of(node)
        seed = self.pairs_on_edge(perspective, u, v)
        # A pair whose two ends coincide keeps one symmetric slot; a tail
        # there would claim both directions at once, so it is never stored.
        if mark == Mark.TAIL and any(p.palindromic for p in seed):
            return False
        # Without bidirected marks a second arrowhead on a pair is
        # unrepresentable, so the write is refused rather than stored.
        if self.directed_only and mark == Mark.ARROW:
            for p in seed:
                other = next(e for e in p.ends if e != end) \
                    if p.ends[0] != p.ends[1] else end
                if p.palindromic or p.mark_at(other) == Mark.ARROW:
                    return False
        # The edge-level decoration flips only when every pair agrees the
        # other way; a rule whose premise held a moment ago writing the
        # opposite hard mark is a logic error worth surfacing.
        opposite = Mark.TAIL if mark == Mark.ARROW else Mark.ARROW
        current_marks = {p.mark_at(end) for p in seed if not p.removed}
        if strict and current_marks and current_marks == {opposite}:
            raise ConflictError(
                f"cannot set {mark.name} over {opposite.name} at {end} "
                f"on edge {u} - {v}")
        changed = False
        # The write lands on the dependencies behind this edge only; each
        # carries its mark to every other edge it appears on, in every
        # perspective, but co-resident dependencies on those edges keep
        # their own marks.  An orientation earned by one dependency says
        # nothing about a dependency that merely shares a view, so one
        # already decorated the other way is left alone.
        for pair in seed:
            if pair.removed:
                continue
            if pair.mark_at(end) != Mark.CIRCLE:
                continue
            if mark == Mark.TAIL and pair.palindromic:
                continue
            pair.marks[end] = mark
            changed = True
        return changed

    def unshielded_triples(self, perspective: str, anchored: bool = False):
        """All <a, b, c> with a-b, b-c adjacent, a-c not; listed once.

        Triples whose endpoints abstract the same attribute are excluded:
        they are the bivariate-orientation shape and are enumerated by
        `same_end_triples` instead.  With `anchored` only triples with an
        endpoint at the perspective's own item (singleton path) are kept,
        the shape whose separating sets collider detection inspects; the
        remaining triples are reachable as anchored triples of the
        endpoint's home perspective and receive their marks through the
        shared pair store.  Anchored triples list the base endpoint first.
        """
        return self._triples(perspective, same_end=False, anchored=anchored)

    def same_end_triples(self, perspective: str):
        """Unshielded <a, b, c> whose endpoints share one attribute end."""
        return self._triples(perspective, same_end=True, anchored=False)

    def _triples(self, perspective: str, same_end: bool, anchored: bool):
        paagg = self.paaggs[perspective]
        out = []
        for b in paagg.nodes:
            nbrs = paagg.neighbors(b)
            for i, a in enumerate(nbrs):
                for c in nbrs[i + 1:]:
                    if (end_of(a) == end_of(c)) is not same_end \
                            or paagg.has_edge(a, c):
                        continue
                    if anchored:
                        if len(c.path) == 1:
                            a, c = c, a
                        elif len(a.path) != 1:
                            continue
                    out.append((a, b, c))
        return out

    def dump_paagg(self, perspective: str) -> list[str]:
        """One line per edge using o->, <->, ---, o-o, --> glyphs."""
        lines = []
        for u, v in sorted(self.paaggs[perspective].edges()):
            mu = self.mark_at(perspective, u, v, u)
            mv = self.mark_at(perspective, u, v, v)
            if (mu, mv) in _GLYPH:
                lines.append(f"{u} {_GLYPH[(mu, mv)]} {v}")
            else:
                lines.append(f"{v} {_GLYPH[(mv, mu)]} {u}")
        return lines


_GLYPH = {
    (Mark.CIRCLE, Mark.CIRCLE): "o-o",
    (Mark.CIRCLE, Mark.ARROW): "o->",
    (Mark.TAIL, Mark.ARROW): "-->",
    (Mark.ARROW, Mark.ARROW): "<->",
    (Mark.TAIL, Mark.TAIL): "---",
    (Mark.TAIL, Mark.CIRCLE): None,  # rendered flipped
    (Mark.ARROW, Mark.CIRCLE): None,
    (Mark.ARROW, Mark.TAIL): None,
}
_GLYPH = {k: v for k, v in _GLYPH.items() if v}
_GLYPH[(Mark.CIRCLE, Mark.TAIL)] = "o--"


@dataclass
class ParmEdge:
    pair: DependencyPair
    status: str  # "required" | "possible" | "bidirected" | "undirected"
    directed: RelationalDependency | None = None


@dataclass
class Parm:
    """Partial ancestral relational model: the class-level output."""
    required: list[RelationalDependency]
    possible: list[RelationalDependency]
    bidirected: list[DependencyPair]
    edges: list[ParmEdge]


def extract_parm(state: DiscoveryState) -> Parm:
    """Read the surviving pairs back as required / possible / bidirected.

    An arrowhead at exactly one end commits the dependency pointing into it;
    arrowheads at both ends mean a latent confounder; anything still carrying
    a circle stays possible.  A palindromic pair never commits a direction.
    """
    required: list[RelationalDependency] = []
    possible: list[RelationalDependency] = []
    bidirected: list[DependencyPair] = []
    edges: list[ParmEdge] = []
    for key in sorted(state.pairs):
        pair = state.pairs[key]
        if pair.removed:
            continue
        marks = [pair.mark_at(end) for end in pair.ends]
        if pair.palindromic:
            marks = marks * 2
        n_arrows = marks.count(Mark.ARROW)
        if n_arrows == 2:
            bidirected.append(pair)
            edges.append(ParmEdge(pair, "bidirected"))
        elif n_arrows == 1 and not pair.palindromic:
            end = pair.ends[marks.index(Mark.ARROW)]
            dep = pair.dependency_into(end)
            required.append(dep)
            edges.append(ParmEdge(pair, "required", dep))
        elif marks.count(Mark.TAIL) == 2:
            edges.append(ParmEdge(pair, "undirected"))
        else:
            for end, mark in zip(pair.ends, marks):
                if mark == Mark.CIRCLE:
                    possible.append(pair.dependency_into(end))
            if pair.palindromic:
                possible.append(pair.d1)
            edges.append(ParmEdge(pair, "possible"))
    return Parm(required, possible, bidirected, edges)
