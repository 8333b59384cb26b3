"""Conditional-independence oracle backed by the model's own graphs.

Queries are answered by d-separation on the latent abstract ground graph of
the first argument's perspective.  Latent nodes stay in the graph but are
never accepted inside a conditioning set.  All three argument sets are
augmented with the intersection nodes touching them before separation is
computed, mirroring how relational d-separation is defined.
"""

from __future__ import annotations

from itertools import combinations
from typing import Iterable, Sequence

from .agg import IntersectionNode, Lagg, build_laggs
from .dsep import d_separated
from .schema import Lrcm, RelationalVariable


class CiOracle:
    def __init__(self, model: Lrcm, hop_threshold: int | None = None):
        self.model = model
        self.hop_threshold = 2 * model.hop_threshold if hop_threshold is None else hop_threshold
        self.laggs: dict[str, Lagg] = build_laggs(model, self.hop_threshold,
                                                  ancestral_closure=True)
        self._by_member: dict[str, dict[RelationalVariable, list[IntersectionNode]]] = {}
        for name, lagg in self.laggs.items():
            index: dict[RelationalVariable, list[IntersectionNode]] = {}
            for node in lagg.intersections:
                for member in node.members:
                    index.setdefault(member, []).append(node)
            self._by_member[name] = index
        self._cache: dict[tuple, bool] = {}
        self.n_queries = 0

    def _augment(self, perspective: str, nodes: Iterable[RelationalVariable]) -> set:
        index = self._by_member[perspective]
        out = set()
        for node in nodes:
            out.add(node)
            out.update(index.get(node, ()))
        return out

    def ci(self, x: RelationalVariable, y: RelationalVariable,
           zs: Iterable[RelationalVariable]) -> bool:
        """True when x and y are independent given zs."""
        if x.perspective != y.perspective:
            raise ValueError(f"{x} and {y} live in different perspectives")
        perspective = x.perspective
        lagg = self.laggs[perspective]
        zs = frozenset(zs)
        for z in zs:
            if z in lagg.latent_nodes:
                raise ValueError(f"cannot condition on latent variable {z}")
        key = (perspective, x, y, zs) if x <= y else (perspective, y, x, zs)
        if key in self._cache:
            return self._cache[key]
        self.n_queries += 1
        za = self._augment(perspective, zs)
        xa = self._augment(perspective, [x]) - za
        ya = self._augment(perspective, [y]) - za
        result = d_separated(lagg.parents, lagg.children, xa, ya, za)
        self._cache[key] = result
        return result

    def minimal_sepset(self, x: RelationalVariable, y: RelationalVariable,
                       pool: Sequence[RelationalVariable],
                       max_size: int | None = None,
                       ) -> frozenset[RelationalVariable] | None:
        """Smallest separating subset of `pool`, or None."""
        pool = sorted(set(pool) - {x, y})
        limit = len(pool) if max_size is None else min(max_size, len(pool))
        for size in range(limit + 1):
            for zs in combinations(pool, size):
                if self.ci(x, y, zs):
                    return frozenset(zs)
        return None
