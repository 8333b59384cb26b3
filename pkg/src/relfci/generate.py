"""Random relational model generation for benchmarks.

Schemas are chains: n entity classes joined by n-1 binary relationship
classes, each participation MANY with probability one half (re-drawn until
at least one MANY exists).  Attribute counts per class are 1 + Poisson(1).
Dependencies are sampled without replacement from all canonical candidates
within the hop threshold, keeping the class-level attribute digraph acyclic
- which is enough to keep every abstract ground graph acyclic, since any
ground cycle projects onto a class-level attribute cycle.  Latent selection
is restricted to attributes that cause at least two dependencies, and
no dependency may join two latent attributes.
"""

from __future__ import annotations

import math
import random
import string

from .schema import (
    AttributeClass,
    Cardinality,
    EntityClass,
    Lrcm,
    RelationalDependency,
    RelationalVariable,
    RelationshipClass,
    Schema,
    enumerate_paths,
)


def _poisson(rng: random.Random, lam: float = 1.0) -> int:
    limit = math.exp(-lam)
    k, p = 0, 1.0
    while True:
        p *= rng.random()
        if p <= limit:
            return k
        k += 1


def _chain_schema(rng: random.Random, n_entities: int) -> Schema:
    names = list(string.ascii_uppercase[:n_entities])
    entities = []
    for name in names:
        n_attrs = 1 + _poisson(rng)
        attrs = tuple(AttributeClass(f"{name}{i + 1}") for i in range(n_attrs))
        entities.append(EntityClass(name, attrs))
    relationships = []
    while True:
        cards = [(rng.choice((Cardinality.ONE, Cardinality.MANY)),
                  rng.choice((Cardinality.ONE, Cardinality.MANY)))
                 for _ in range(n_entities - 1)]
        if any(c is Cardinality.MANY for pair in cards for c in pair):
            break
    for i, (left_card, right_card) in enumerate(cards):
        rel_name = f"{names[i]}{names[i + 1]}"
        n_attrs = 1 + _poisson(rng)
        attrs = tuple(AttributeClass(f"{rel_name}_{j + 1}")
                      for j in range(n_attrs))
        relationships.append(RelationshipClass(
            rel_name,
            ((names[i], left_card), (names[i + 1], right_card)),
            attrs))
    return Schema({e.name: e for e in entities},
                  {r.name: r for r in relationships})


def _candidate_dependencies(schema: Schema, hop_threshold: int):
    out = []
    for cls in schema.item_names():
        for path in enumerate_paths(schema, cls, hop_threshold):
            for cause in schema.attributes_of(path[-1]):
                for effect in schema.attributes_of(cls):
                    if cause.name == effect.name:
                        continue
                    out.append(RelationalDependency(
                        RelationalVariable(path, cause.name),
                        RelationalVariable((cls,), effect.name)))
    return out


def _attr_of(var: RelationalVariable) -> tuple[str, str]:
    return (var.terminal, var.attr)


def _stays_acyclic(edges: set[tuple], cause, effect) -> bool:
    """Would adding cause -> effect keep the class-attribute digraph acyclic?"""
    if cause == effect:
        return False
    adj: dict = {}
    for src, dst in edges | {(cause, effect)}:
        adj.setdefault(src, set()).add(dst)
    stack, seen = [effect], set()
    while stack:
        node = stack.pop()
        if node == cause:
            return False
        if node in seen:
            continue
        seen.add(node)
        stack.extend(adj.get(node, ()))
    return True


def generate_model(seed: int | None = None,
                   n_entities: int | None = None,
                   n_dependencies: int | None = None,
                   n_latents: int | None = None,
                   hop_threshold: int = 2,
                   rng: random.Random | None = None) -> Lrcm:
    """Draw one model; unset knobs are sampled from the benchmark grid."""
    rng = rng or random.Random(seed)
    if n_entities is None:
        n_entities = rng.randint(2, 4)
    if n_dependencies is None:
        n_dependencies = rng.choice((6, 8, 10, 12))
    if n_latents is None:
        n_latents = rng.choice((0, 1, 2))

    for _ in range(500):
        schema = _chain_schema(rng, n_entities)
        candidates = _candidate_dependencies(schema, hop_threshold)
        rng.shuffle(candidates)
        chosen: list[RelationalDependency] = []
        attr_edges: set[tuple] = set()
        for dep in candidates:
            if len(chosen) == n_dependencies:
                break
            cause, effect = _attr_of(dep.cause), _attr_of(dep.effect)
            if not _stays_acyclic(attr_edges, cause, effect):
                continue
            chosen.append(dep)
            attr_edges.add((cause, effect))
        if len(chosen) < n_dependencies:
            continue

        cause_counts: dict[tuple, int] = {}
        for dep in chosen:
            key = _attr_of(dep.cause)
            cause_counts[key] = cause_counts.get(key, 0) + 1
        eligible = sorted(k for k, n in cause_counts.items() if n >= 2)
        if len(eligible) < n_latents:
            continue
        latent_pick = None
        for _ in range(50):
            pick = set(rng.sample(eligible, n_latents)) if n_latents else set()
            links_latents = any(
                _attr_of(d.cause) in pick and _attr_of(d.effect) in pick
                for d in chosen)
            if not links_latents:
                latent_pick = pick
                break
        if latent_pick is None:
            continue

        schema = _mark_latent(schema, latent_pick)
        model = Lrcm(schema, tuple(sorted(chosen, key=str)), hop_threshold)
        model.validate()
        return model
    raise RuntimeError("could not sample a model satisfying all constraints")


def _mark_latent(schema: Schema, latent: set[tuple[str, str]]) -> Schema:
    def rebuild(attrs, cls):
        return tuple(
            AttributeClass(a.name, latent=(cls, a.name) in latent)
            for a in attrs)

    entities = {
        e.name: EntityClass(e.name, rebuild(e.attributes, e.name))
        for e in schema.entities.values()}
    relationships = {
        r.name: RelationshipClass(r.name, r.participants,
                                  rebuild(r.attributes, r.name))
        for r in schema.relationships.values()}
    return Schema(entities, relationships)
