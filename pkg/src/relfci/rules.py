"""Orientation rules applied to one perspective's partial ancestral graph.

Each rule scans the current graph once, refines circle marks through the
shared pair store (so a firing is visible from every perspective), and
returns how many times it fired.  The driver re-runs the whole battery
until nothing changes.

Mark refinements only ever replace circles; `strict` controls whether a
tail/arrowhead disagreement aborts the run or skips the write.
"""

from __future__ import annotations

from itertools import combinations
from typing import Callable

from .schema import RelationalVariable
from .state import DiscoveryState, Mark, end_of

Node = RelationalVariable
SepsetFn = Callable[[str, Node, Node], "frozenset[Node] | None"]


def _marks(state: DiscoveryState, persp: str, u: Node, v: Node) -> tuple[Mark, Mark]:
    return (state.mark_at(persp, u, v, u), state.mark_at(persp, u, v, v))


def _is_directed(state, persp, u, v) -> bool:
    """u --> v with a tail at u and an arrowhead at v."""
    return _marks(state, persp, u, v) == (Mark.TAIL, Mark.ARROW)


def apply_rbo(state: DiscoveryState, persp: str, get_sepset: SepsetFn,
              strict: bool = True) -> int:
    """Bivariate orientation on same-attribute endpoints.

    Applies to unshielded <a, b, c> whose endpoints a and c abstract the
    same attribute - two copies of one variable class reached along a
    returning path, which only exists under a MANY cardinality.  If b lies
    in the set separating the copies it acts as their common influence, so
    both copy ends take arrowheads while b's end keeps its circle.  If b
    is outside the separating set the triple is a collider at b.
    """
    fired = 0
    for a, b, c in state.same_end_triples(persp):
        if end_of(a) == end_of(b):
            continue
        sep = get_sepset(persp, a, c)
        if sep is None:
            continue
        changed = False
        if b in sep:
            changed |= state.set_mark(persp, a, b, a, Mark.ARROW, strict)
            changed |= state.set_mark(persp, b, c, c, Mark.ARROW, strict)
        else:
            changed |= state.set_mark(persp, a, b, b, Mark.ARROW, strict)
            changed |= state.set_mark(persp, b, c, b, Mark.ARROW, strict)
        if changed:
            fired += 1
    return fired


def apply_knc(state: DiscoveryState, persp: str, get_sepset: SepsetFn,
              strict: bool = True, require_witness: bool = False) -> int:
    """Known non-collider: a *-> b o-* c unshielded orients b --> c.

    A middle that shares its attribute class with an endpoint is skipped:
    orienting such a triple would claim an attribute causes a copy of
    itself, which is the relational bivariate rule's decision to make.
    Candidates fire in lexicographic node-name order so runs are
    deterministic; each firing is re-checked against the evolving marks
    because an earlier firing may have consumed the circle it needs.

    With ``require_witness`` the middle must additionally belong to a
    separating set of the endpoints - the certified-non-collider form used
    by the directed-only baseline, which has no bidirected marks to absorb
    an undetected collider.
    """
    candidates: list[tuple] = []
    for a, b, c in state.unshielded_triples(persp):
        if end_of(b) in (end_of(a), end_of(c)):
            continue
        candidates.append((a, b, c))
        candidates.append((c, b, a))
    candidates.sort(key=lambda t: (str(t[0]), str(t[1]), str(t[2])))
    fired = 0
    for x, b, z in candidates:
        if require_witness:
            sep = get_sepset(persp, x, z)
            if sep is None or b not in sep:
                continue
        if (state.mark_at(persp, x, b, b) == Mark.ARROW
                and state.mark_at(persp, b, z, b) == Mark.CIRCLE):
            changed = state.set_mark(persp, b, z, b, Mark.TAIL, strict)
            changed |= state.set_mark(persp, b, z, z, Mark.ARROW, strict)
            if changed:
                fired += 1
    return fired


def apply_ca(state: DiscoveryState, persp: str, strict: bool = True) -> int:
    """Chained ancestry: a --> b *-> c or a *-> b --> c with a o-* c
    orients the circle at c into an arrowhead."""
    fired = 0
    paagg = state.paaggs[persp]
    for a in paagg.nodes:
        for c in paagg.neighbors(a):
            if state.mark_at(persp, a, c, c) != Mark.CIRCLE:
                continue
            for b in paagg.neighbors(a):
                if b == c or not paagg.has_edge(b, c):
                    continue
                first_directed = _is_directed(state, persp, a, b)
                second_directed = _is_directed(state, persp, b, c)
                into_b = state.mark_at(persp, a, b, b) == Mark.ARROW
                into_c = state.mark_at(persp, b, c, c) == Mark.ARROW
                if (first_directed and into_c) or (into_b and second_directed):
                    if state.set_mark(persp, a, c, c, Mark.ARROW, strict):
                        fired += 1
                    break
    return fired


def apply_mr3(state: DiscoveryState, persp: str, strict: bool = True) -> int:
    """Double collider support: a *-> b <-* c, a *-o d o-* c, a and c not
    adjacent, d *-o b orients d *-> b."""
    fired = 0
    paagg = state.paaggs[persp]
    for a, b, c in state.unshielded_triples(persp):
        if (state.mark_at(persp, a, b, b) != Mark.ARROW
                or state.mark_at(persp, b, c, b) != Mark.ARROW):
            continue
        for d in paagg.neighbors(b):
            if d in (a, c):
                continue
            if not (paagg.has_edge(a, d) and paagg.has_edge(d, c)):
                continue
            if (state.mark_at(persp, a, d, d) == Mark.CIRCLE
                    and state.mark_at(persp, d, c, d) == Mark.CIRCLE
                    and state.mark_at(persp, d, b, b) == Mark.CIRCLE):
                if state.set_mark(persp, d, b, b, Mark.ARROW, strict):
                    fired += 1
    return fired


# -- discriminating paths (used by the driver's retesting block) --------

def minimal_discriminating_path(state: DiscoveryState, persp: str,
                                b: Node, c: Node, a: Node) -> list[Node] | None:
    """Shortest <t, ..., a, b, c> discriminating for b, or None.

    Requires b o-* c, a *-> b pointing into a... specifically every node
    between t and b must be a collider on the path and a parent of c, and
    t must not be adjacent to c.  Searched breadth-first from a.
    """
    for path in discriminating_paths(state, persp, b, c, a):
        return path
    return None


def discriminating_paths(state: DiscoveryState, persp: str,
                         b: Node, c: Node, a: Node):
    """Yield discriminating paths <t, ..., a, b, c> shortest first."""
    paagg = state.paaggs[persp]
    frontier: list[list[Node]] = [[a]]
    seen = {a, b, c}
    while frontier:
        nxt: list[list[Node]] = []
        for partial in frontier:
            v = partial[-1]
            for u in paagg.neighbors(v):
                if u in seen or u in partial or u == b or u == c:
                    continue
                if state.mark_at(persp, u, v, v) != Mark.ARROW:
                    continue
                if not paagg.has_edge(u, c):
                    yield [u] + partial[::-1] + [b, c]
                    continue
                if (_is_directed(state, persp, u, c)
                        and state.mark_at(persp, u, v, u) == Mark.ARROW):
                    seen.add(u)
                    nxt.append(partial + [u])
        frontier = nxt


# -- circle and potentially-directed path rules ------------------------

def _uncovered(state, persp, path: list[Node]) -> bool:
    paagg = state.paaggs[persp]
    return all(not paagg.has_edge(path[i], path[i + 2])
               for i in range(len(path) - 2))


def _pd_edge(state, persp, u, v) -> bool:
    mu, mv = _marks(state, persp, u, v)
    return mu != Mark.ARROW and mv != Mark.TAIL


def _uncovered_pd_paths(state: DiscoveryState, persp: str, a: Node, b: Node,
                        forbid_direct: bool = True, limit: int = 2000):
    """Yield uncovered potentially-directed paths a ... b (depth first)."""
    paagg = state.paaggs[persp]
    budget = [limit]

    def walk(path: list[Node]):
        if budget[0] <= 0:
            return
        v = path[-1]
        for u in paagg.neighbors(v):
            if u in path:
                continue
            if not _pd_edge(state, persp, v, u):
                continue
            if len(path) >= 2 and paagg.has_edge(path[-2], u):
                continue
            if u == b:
                if len(path) == 1 and forbid_direct:
                    continue
                budget[0] -= 1
                yield path + [u]
                continue
            yield from walk(path + [u])

    yield from walk([a])


def apply_r5(state: DiscoveryState, persp: str, strict: bool = True) -> int:
    """Uncovered circle path a o-o ... o-o b alongside a o-o b: absent
    cycles this can only be undirected, so every edge involved gets tails."""
    fired = 0
    paagg = state.paaggs[persp]
    for a, b in paagg.edges():
        if _marks(state, persp, a, b) != (Mark.CIRCLE, Mark.CIRCLE):
            continue
        found = None
        for path in _uncovered_pd_paths(state, persp, a, b):
            if len(path) < 4:
                continue
            if any(_marks(state, persp, path[i], path[i + 1])
                   != (Mark.CIRCLE, Mark.CIRCLE) for i in range(len(path) - 1)):
                continue
            if paagg.has_edge(path[1], b) or paagg.has_edge(path[-2], a):
                continue
            found = path
            break
        if found is None:
            continue
        changed = False
        for u, v in zip(found, found[1:]):
            changed |= state.set_mark(persp, u, v, u, Mark.TAIL, strict)
            changed |= state.set_mark(persp, u, v, v, Mark.TAIL, strict)
        changed |= state.set_mark(persp, a, b, a, Mark.TAIL, strict)
        changed |= state.set_mark(persp, a, b, b, Mark.TAIL, strict)
        if changed:
            fired += 1
    return fired


def apply_r6(state: DiscoveryState, persp: str, strict: bool = True) -> int:
    """a --- b o-* c orients the circle at b into a tail."""
    fired = 0
    paagg = state.paaggs[persp]
    for b in paagg.nodes:
        nbrs = paagg.neighbors(b)
        if not any(_marks(state, persp, b, a) == (Mark.TAIL, Mark.TAIL)
                   for a in nbrs):
            continue
        for c in nbrs:
            if state.mark_at(persp, b, c, b) == Mark.CIRCLE:
                has_line = any(
                    a != c and _marks(state, persp, b, a) == (Mark.TAIL, Mark.TAIL)
                    for a in nbrs)
                if has_line and state.set_mark(persp, b, c, b, Mark.TAIL, strict):
                    fired += 1
    return fired


def apply_r7(state: DiscoveryState, persp: str, strict: bool = True) -> int:
    """a --o b o-* c with a, c non-adjacent orients b's circle on (b, c)."""
    fired = 0
    paagg = state.paaggs[persp]
    for a, b, c in state.unshielded_triples(persp):
        for x, z in ((a, c), (c, a)):
            if (_marks(state, persp, x, b) == (Mark.TAIL, Mark.CIRCLE)
                    and state.mark_at(persp, b, z, b) == Mark.CIRCLE):
                if state.set_mark(persp, b, z, b, Mark.TAIL, strict):
                    fired += 1
    return fired


def apply_r8(state: DiscoveryState, persp: str, strict: bool = True) -> int:
    """a o-> c with a --> b --> c or a --o b --> c turns a's circle into a
    tail (a is an ancestor of c)."""
    fired = 0
    paagg = state.paaggs[persp]
    for a in paagg.nodes:
        for c in paagg.neighbors(a):
            if _marks(state, persp, a, c) != (Mark.CIRCLE, Mark.ARROW):
                continue
            for b in paagg.neighbors(a):
                if b == c or not paagg.has_edge(b, c):
                    continue
                if not _is_directed(state, persp, b, c):
                    continue
                if (_is_directed(state, persp, a, b)
                        or _marks(state, persp, a, b) == (Mark.TAIL, Mark.CIRCLE)):
                    if state.set_mark(persp, a, c, a, Mark.TAIL, strict):
                        fired += 1
                    break
    return fired


def apply_r9(state: DiscoveryState, persp: str, strict: bool = True) -> int:
    """a o-> c plus an uncovered potentially-directed path a ... c whose
    second node is not adjacent to c: a cannot be a descendant of c."""
    fired = 0
    paagg = state.paaggs[persp]
    for a in paagg.nodes:
        for c in paagg.neighbors(a):
            if _marks(state, persp, a, c) != (Mark.CIRCLE, Mark.ARROW):
                continue
            for path in _uncovered_pd_paths(state, persp, a, c):
                if not paagg.has_edge(path[1], c):
                    if state.set_mark(persp, a, c, a, Mark.TAIL, strict):
                        fired += 1
                    break
    return fired


def apply_r10(state: DiscoveryState, persp: str, strict: bool = True) -> int:
    """a o-> c with b --> c <-- t reached by two uncovered potentially-
    directed paths from a that leave through non-adjacent first steps."""
    fired = 0
    paagg = state.paaggs[persp]
    for a in paagg.nodes:
        for c in paagg.neighbors(a):
            if _marks(state, persp, a, c) != (Mark.CIRCLE, Mark.ARROW):
                continue
            parents = [b for b in paagg.neighbors(c)
                       if b != a and _is_directed(state, persp, b, c)]
            done = False
            for b, t in combinations(parents, 2):
                firsts_b = {p[1] for p in _uncovered_pd_paths(
                    state, persp, a, b, forbid_direct=False)}
                firsts_t = {p[1] for p in _uncovered_pd_paths(
                    state, persp, a, t, forbid_direct=False)}
                for mu in sorted(firsts_b, key=str):
                    for om in sorted(firsts_t, key=str):
                        if mu != om and not paagg.has_edge(mu, om) and mu != c and om != c:
                            if state.set_mark(persp, a, c, a, Mark.TAIL, strict):
                                fired += 1
                            done = True
                            break
                    if done:
                        break
                if done:
                    break
    return fired
