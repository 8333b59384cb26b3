"""End-to-end constraint-based discovery over relational data.

Two drivers share the machinery.  `relfci` admits latent confounders: it
keeps circle/tail/arrowhead marks, runs the full rule battery including the
discriminating-path and potentially-directed-path rules, and treats any
tail/arrowhead disagreement as a hard error.  `rcd` is the causally-
sufficient baseline: candidates stay within the model's hop threshold, only
the collider/non-collider rules run, collider orientation refuses to create
a second arrowhead on a pair, and conflicting writes are skipped rather
than fatal.

Both work against a conditional-independence oracle and propagate every
mark and every edge removal across perspectives through the shared pair
store.
"""

from __future__ import annotations

import time
from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations

from . import rules
from .oracle import CiOracle
from .schema import Lrcm, RelationalVariable
from .state import ConflictError, DiscoveryState, Mark, Parm, extract_parm

Node = RelationalVariable

RULE_NAMES = ("CD", "RBO", "KNC", "CA", "MR3",
              "R4", "R5", "R6", "R7", "R8", "R9", "R10")


@dataclass
class RunConfig:
    algo: str = "relfci"  # "relfci" | "rcd"
    h_prime: int | None = None  # defaults to twice the model hop threshold
    max_cond_size: int | None = None
    seed: int | None = None
    perspectives: tuple[str, ...] | None = None  # None = every perspective

    def resolve(self, model: Lrcm) -> "RunConfig":
        h_prime = self.h_prime
        if h_prime is None:
            h_prime = 2 * model.hop_threshold
        return RunConfig(self.algo, h_prime, self.max_cond_size, self.seed,
                         self.perspectives)


@dataclass
class RunResult:
    algo: str
    parm: Parm
    state: DiscoveryState
    rule_counts: Counter
    ci_queries: int
    elapsed: float
    per_perspective_counts: dict[str, Counter] = field(default_factory=dict)
    collider_stats: dict[str, dict[str, int]] = field(default_factory=dict)


class _Runner:
    def __init__(self, model: Lrcm, config: RunConfig, oracle: CiOracle | None):
        self.model = model
        self.config = config.resolve(model)
        if self.config.algo not in ("relfci", "rcd"):
            raise ValueError(f"unknown algorithm {self.config.algo!r}")
        self.strict = self.config.algo == "relfci"
        candidate_hops = (self.config.h_prime if self.config.algo == "relfci"
                          else model.hop_threshold)
        oracle_hops = max(self.config.h_prime, 2 * model.hop_threshold)
        self.oracle = oracle or CiOracle(model, oracle_hops)
        self.state = DiscoveryState(model, self.config.h_prime, candidate_hops,
                                    directed_only=self.config.algo == "rcd")
        self.counts: Counter = Counter({name: 0 for name in RULE_NAMES})
        self.persp_counts: dict[str, Counter] = {
            p: Counter() for p in sorted(self.state.paaggs)}
        self.collider_stats: dict[str, dict[str, int]] = {}
        # One discriminating-path activation covers every triangle over the
        # same underlying dependency family, so repeats are not re-counted.
        self._r4_families: set[tuple[str, frozenset[str]]] = set()
        if self.config.perspectives is None:
            self.perspectives = sorted(self.state.paaggs)
        else:
            unknown = set(self.config.perspectives) - set(self.state.paaggs)
            if unknown:
                raise ValueError(f"unknown perspectives {sorted(unknown)}")
            self.perspectives = sorted(self.config.perspectives)

    # -- separating sets -----------------------------------------------

    def get_sepset(self, persp: str, u: Node, v: Node):
        if self.state.sepsets.has(persp, u, v):
            return self.state.sepsets.get(persp, u, v)
        paagg = self.state.paaggs[persp]
        pool = sorted((set(paagg.neighbors(u)) | set(paagg.neighbors(v)))
                      - {u, v})
        sep = self.oracle.minimal_sepset(u, v, pool)
        self.state.sepsets.put(persp, u, v, sep)
        return sep

    def _minimal_subset_sep(self, u: Node, v: Node, base):
        base = sorted(base)
        for size in range(len(base) + 1):
            for zs in combinations(base, size):
                if self.oracle.ci(u, v, frozenset(zs)):
                    return frozenset(zs)
        return None

    # -- phase 1: skeleton ---------------------------------------------

    def skeleton(self) -> None:
        for persp in self.perspectives:
            paagg = self.state.paaggs[persp]
            level = 0
            while True:
                if (self.config.max_cond_size is not None
                        and level > self.config.max_cond_size):
                    break
                max_pool = -1
                for u, v in paagg.edges():
                    if not paagg.has_edge(u, v):
                        continue
                    pool = sorted((set(paagg.neighbors(u))
                                   | set(paagg.neighbors(v))) - {u, v})
                    max_pool = max(max_pool, len(pool))
                    if len(pool) < level:
                        continue
                    for zs in combinations(pool, level):
                        if self.oracle.ci(u, v, frozenset(zs)):
                            self.state.remove_adjacency(
                                persp, u, v, frozenset(zs))
                            break
                if max_pool <= level:
                    break
                level += 1

    # -- phase 2: colliders --------------------------------------------

    def _remove_edge_collect_triples(self, persp: str, u: Node, v: Node,
                                     sepset) -> list[tuple[Node, Node, Node]]:
        """Drop the edge and return the unshielded triples it creates."""
        paagg = self.state.paaggs[persp]
        common = [w for w in paagg.neighbors(u) if paagg.has_edge(w, v)]
        self.state.remove_adjacency(persp, u, v, sepset)
        from .state import end_of
        fresh = []
        for w in common:
            if not (paagg.has_edge(u, w) and paagg.has_edge(w, v)):
                continue
            if end_of(u) == end_of(v):
                continue
            if len(v.path) == 1:
                fresh.append((v, w, u))
            elif len(u.path) == 1:
                fresh.append((u, w, v))
        return fresh

    def _orient_collider(self, persp: str, a: Node, b: Node, c: Node) -> bool:
        """Put arrowheads at b; True unless the orientation was refused."""
        if self.config.algo == "rcd":
            # refuse to put arrowheads at both ends of any supporting pair
            from .state import end_of
            for x in (a, c):
                for pair in self.state.pairs_on_edge(persp, x, b):
                    for end in pair.ends:
                        if end != end_of(b) and pair.mark_at(end) == Mark.ARROW:
                            return False
                    if pair.palindromic and pair.mark_at(pair.ends[0]) == Mark.ARROW:
                        return False
        self.state.set_mark(persp, a, b, b, Mark.ARROW, self.strict)
        self.state.set_mark(persp, b, c, b, Mark.ARROW, self.strict)
        return True

    def process_triples(self, persp: str,
                        triples: list[tuple[Node, Node, Node]]) -> None:
        """Collider search with sepset retesting on a work list of triples."""
        paagg = self.state.paaggs[persp]
        pending = list(triples)
        stats = self.collider_stats.setdefault(
            persp, {"found": 0, "dependent": 0})
        stats["found"] += len(pending)
        dependent: list[tuple[Node, Node, Node]] = []
        while pending:
            a, b, c = pending.pop()
            if not (paagg.has_edge(a, b) and paagg.has_edge(b, c)):
                continue
            if paagg.has_edge(a, c):
                continue
            sep = self.get_sepset(persp, a, c)
            if sep is None:
                continue
            z = frozenset(sep) - {b}
            ci_ab = self.oracle.ci(a, b, z)
            ci_bc = self.oracle.ci(b, c, z)
            if not ci_ab and not ci_bc:
                dependent.append((a, b, c))
                continue
            for x, separable in ((a, ci_ab), (c, ci_bc)):
                if not separable or not paagg.has_edge(x, b):
                    continue
                minimal = self._minimal_subset_sep(x, b, z)
                if minimal is None:
                    continue
                pending = [t for t in pending
                           if {t[0], t[1]} != {x, b} and {t[1], t[2]} != {x, b}]
                fresh = self._remove_edge_collect_triples(persp, x, b, minimal)
                stats["found"] += len(fresh)
                pending.extend(fresh)
        support = Counter(b for _, b, _ in dependent)
        stats["dependent"] += len(dependent)
        dependent.sort(key=lambda t: (-support[t[1]], str(t[1]), str(t[0]), str(t[2])))
        for a, b, c in dependent:
            if not (paagg.has_edge(a, b) and paagg.has_edge(b, c)):
                continue
            if paagg.has_edge(a, c):
                continue
            sep = self.get_sepset(persp, a, c)
            if sep is None or b in sep:
                continue
            if self._orient_collider(persp, a, b, c):
                self._count(persp, "CD")

    def orient_colliders(self) -> None:
        for persp in self.perspectives:
            self.process_triples(
                persp, self.state.unshielded_triples(persp, anchored=True))
            fired = rules.apply_rbo(self.state, persp, self.get_sepset,
                                    self.strict)
            self._count(persp, "RBO", fired)

    # -- phase 3: rule battery -----------------------------------------

    def _count(self, persp: str, rule: str, n: int = 1) -> None:
        if n:
            self.counts[rule] += n
            self.persp_counts[persp][rule] += n

    def apply_r4(self, persp: str) -> int:
        """Discriminating-path rule with sepset retesting along the path."""
        fired = 0
        state, paagg = self.state, self.state.paaggs[persp]
        for b in paagg.nodes:
            for c in paagg.neighbors(b):
                if state.mark_at(persp, b, c, b) != Mark.CIRCLE:
                    continue
                for a in paagg.neighbors(c):
                    if a in (b, c) or not paagg.has_edge(a, b):
                        continue
                    if not rules._is_directed(state, persp, a, c):
                        continue
                    if state.mark_at(persp, a, b, a) != Mark.ARROW:
                        continue
                    path = sep = None
                    for cand in rules.discriminating_paths(
                            state, persp, b, c, a):
                        cand_sep = self.get_sepset(persp, cand[0], c)
                        if cand_sep is not None:
                            path, sep = cand, cand_sep
                            break
                    if path is None:
                        continue
                    removed = False
                    for xr, xq in zip(path, path[1:]):
                        if not paagg.has_edge(xr, xq):
                            removed = True
                            continue
                        minimal = self._minimal_subset_sep(
                            xr, xq, frozenset(sep) - {xr, xq})
                        if minimal is not None:
                            fresh = self._remove_edge_collect_triples(
                                persp, xr, xq, minimal)
                            self.process_triples(persp, fresh)
                            removed = True
                    if removed:
                        continue
                    if b in sep:
                        changed = state.set_mark(persp, b, c, b, Mark.TAIL,
                                                 self.strict)
                        changed |= state.set_mark(persp, b, c, c, Mark.ARROW,
                                                  self.strict)
                    else:
                        changed = state.set_mark(persp, a, b, a, Mark.ARROW,
                                                 self.strict)
                        changed |= state.set_mark(persp, a, b, b, Mark.ARROW,
                                                  self.strict)
                        changed |= state.set_mark(persp, b, c, b, Mark.ARROW,
                                                  self.strict)
                        changed |= state.set_mark(persp, b, c, c, Mark.ARROW,
                                                  self.strict)
                    if changed:
                        family = (persp, frozenset(
                            p.key for p in state.pairs_on_edge(persp, a, c)))
                        if family not in self._r4_families:
                            self._r4_families.add(family)
                            fired += 1
        return fired

    def rule_loop(self) -> None:
        full = self.config.algo == "relfci"
        while True:
            before = sum(self.counts.values())
            for persp in self.perspectives:
                self._count(persp, "RBO", rules.apply_rbo(
                    self.state, persp, self.get_sepset, self.strict))
                self._count(persp, "KNC",
                            rules.apply_knc(self.state, persp,
                                            self.get_sepset, self.strict,
                                            require_witness=not full))
                self._count(persp, "CA",
                            rules.apply_ca(self.state, persp, self.strict))
                self._count(persp, "MR3",
                            rules.apply_mr3(self.state, persp, self.strict))
                if full:
                    self._count(persp, "R4", self.apply_r4(persp))
                    self._count(persp, "R5",
                                rules.apply_r5(self.state, persp, self.strict))
                    self._count(persp, "R6",
                                rules.apply_r6(self.state, persp, self.strict))
                    self._count(persp, "R7",
                                rules.apply_r7(self.state, persp, self.strict))
                    self._count(persp, "R8",
                                rules.apply_r8(self.state, persp, self.strict))
                    self._count(persp, "R9",
                                rules.apply_r9(self.state, persp, self.strict))
                    self._count(persp, "R10",
                                rules.apply_r10(self.state, persp, self.strict))
            if sum(self.counts.values()) == before:
                break

    def run(self) -> RunResult:
        start = time.perf_counter()
        self.skeleton()
        self.orient_colliders()
        self.rule_loop()
        parm = extract_parm(self.state)
        elapsed = time.perf_counter() - start
        return RunResult(self.config.algo, parm, self.state, self.counts,
                         self.oracle.n_queries, elapsed, self.persp_counts,
                         self.collider_stats)


def run_discovery(model: Lrcm, config: RunConfig | None = None,
                  oracle: CiOracle | None = None) -> RunResult:
    return _Runner(model, config or RunConfig(), oracle).run()


def run_relfci(model: Lrcm, h_prime: int | None = None,
               oracle: CiOracle | None = None, **kw) -> RunResult:
    return run_discovery(model, RunConfig("relfci", h_prime, **kw), oracle)


def run_rcd(model: Lrcm, h_prime: int | None = None,
            oracle: CiOracle | None = None, **kw) -> RunResult:
    return run_discovery(model, RunConfig("rcd", h_prime, **kw), oracle)
