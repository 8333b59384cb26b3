"""Relational schema, paths, variables and dependencies.

A schema is a set of entity classes and relationship classes, each carrying
attribute classes.  Relationship classes connect entity classes through
participations annotated with a ONE/MANY cardinality.  On top of the schema
live relational paths (alternating sequences of classes), relational
variables (a path plus a terminal attribute) and relational dependencies
(cause variable -> canonical effect variable).
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field


class Cardinality(enum.Enum):
    ONE = "ONE"
    MANY = "MANY"


@dataclass(frozen=True)
class AttributeClass:
    name: str
    latent: bool = False


@dataclass(frozen=True)
class EntityClass:
    name: str
    attributes: tuple[AttributeClass, ...] = ()


@dataclass(frozen=True)
class RelationshipClass:
    name: str
    # (entity name, cardinality) per participation slot; an entity appearing
    # in more than one slot participates more than once.
    participants: tuple[tuple[str, Cardinality], ...] = ()
    attributes: tuple[AttributeClass, ...] = ()


class SchemaError(ValueError):
    pass


@dataclass
class Schema:
    entities: dict[str, EntityClass] = field(default_factory=dict)
    relationships: dict[str, RelationshipClass] = field(default_factory=dict)

    def validate(self) -> None:
        names = list(self.entities) + list(self.relationships)
        if len(set(names)) != len(names):
            raise SchemaError("entity and relationship names must be unique")
        for rel in self.relationships.values():
            if len(rel.participants) < 2:
                raise SchemaError(f"relationship {rel.name} needs >= 2 participants")
            for ent, _ in rel.participants:
                if ent not in self.entities:
                    raise SchemaError(f"relationship {rel.name} references unknown entity {ent}")
        for cls in list(self.entities.values()) + list(self.relationships.values()):
            attr_names = [a.name for a in cls.attributes]
            if len(set(attr_names)) != len(attr_names):
                raise SchemaError(f"duplicate attribute name on {cls.name}")

    # -- class helpers -------------------------------------------------

    def is_entity(self, name: str) -> bool:
        return name in self.entities

    def is_relationship(self, name: str) -> bool:
        return name in self.relationships

    def item(self, name: str) -> EntityClass | RelationshipClass:
        if name in self.entities:
            return self.entities[name]
        if name in self.relationships:
            return self.relationships[name]
        raise SchemaError(f"unknown item class {name}")

    def attributes_of(self, name: str) -> tuple[AttributeClass, ...]:
        return self.item(name).attributes

    def attribute(self, cls: str, attr: str) -> AttributeClass:
        for a in self.attributes_of(cls):
            if a.name == attr:
                return a
        raise SchemaError(f"unknown attribute {cls}.{attr}")

    def participation_count(self, rel: str, ent: str) -> int:
        return sum(1 for e, _ in self.relationships[rel].participants if e == ent)

    def cardinality(self, rel: str, ent: str) -> Cardinality:
        cards = [c for e, c in self.relationships[rel].participants if e == ent]
        if not cards:
            raise SchemaError(f"{ent} does not participate in {rel}")
        return Cardinality.MANY if Cardinality.MANY in cards else Cardinality.ONE

    def relationships_of(self, ent: str) -> list[str]:
        return [r.name for r in self.relationships.values()
                if any(e == ent for e, _ in r.participants)]

    def item_names(self) -> list[str]:
        return sorted(self.entities) + sorted(self.relationships)


# -- relational paths ---------------------------------------------------

Path = tuple[str, ...]


def validate_path(schema: Schema, path: Path) -> bool:
    """True when `path` is a valid alternating walk through the schema.

    Consecutive items must be a participating entity/relationship pair.
    A triple <E, R, E> repeating the entity is only allowed when E
    participates in R more than once; a triple <R, E, R> repeating the
    relationship requires card(R, E) = MANY.
    """
    if not path:
        return False
    for name in path:
        if name not in schema.entities and name not in schema.relationships:
            return False
    for a, b in zip(path, path[1:]):
        ent, rel = (a, b) if schema.is_entity(a) else (b, a)
        if not (schema.is_entity(ent) and schema.is_relationship(rel)):
            return False
        if schema.participation_count(rel, ent) == 0:
            return False
    for i in range(len(path) - 2):
        first, mid, last = path[i], path[i + 1], path[i + 2]
        if first != last:
            continue
        if schema.is_relationship(mid):
            if schema.participation_count(mid, first) <= 1:
                return False
        else:
            if schema.cardinality(first, mid) != Cardinality.MANY:
                return False
    return True


def path_cardinality(schema: Schema, path: Path) -> Cardinality:
    """MANY when traversing the path can reach several instances per source."""
    for a, b in zip(path, path[1:]):
        if schema.is_entity(a):
            if schema.cardinality(b, a) == Cardinality.MANY:
                return Cardinality.MANY
        else:
            if schema.participation_count(a, b) > 1:
                return Cardinality.MANY
    return Cardinality.ONE


def enumerate_paths(schema: Schema, base: str, max_hops: int) -> list[Path]:
    """All valid paths from `base` with hop count (length - 1) <= max_hops."""
    if not validate_path(schema, (base,)):
        raise SchemaError(f"unknown perspective {base}")
    out: list[Path] = []
    frontier: list[Path] = [(base,)]
    while frontier:
        out.extend(frontier)
        nxt: list[Path] = []
        for p in frontier:
            if len(p) - 1 >= max_hops:
                continue
            last = p[-1]
            if schema.is_entity(last):
                steps = schema.relationships_of(last)
            else:
                steps = sorted({e for e, _ in schema.relationships[last].participants})
            for step in sorted(steps):
                cand = p + (step,)
                if validate_path(schema, cand):
                    nxt.append(cand)
        frontier = nxt
    return sorted(out)


# -- relational variables and dependencies ------------------------------

@dataclass(frozen=True, order=True)
class RelationalVariable:
    path: Path
    attr: str

    def __str__(self) -> str:
        return f"[{','.join(self.path)}].{self.attr}"

    @property
    def perspective(self) -> str:
        return self.path[0]

    @property
    def terminal(self) -> str:
        return self.path[-1]

    @property
    def hop(self) -> int:
        return len(self.path) - 1

    def is_canonical(self) -> bool:
        return len(self.path) == 1


@dataclass(frozen=True, order=True)
class RelationalDependency:
    """cause -> effect, with the effect in canonical (single item) form."""
    cause: RelationalVariable
    effect: RelationalVariable

    def __post_init__(self) -> None:
        if not self.effect.is_canonical():
            raise SchemaError(f"effect of {self} must be canonical")
        if self.cause.perspective != self.effect.perspective:
            raise SchemaError(f"cause path of {self} must start at the effect class")

    def __str__(self) -> str:
        return f"{self.cause} -> {self.effect}"

    @property
    def hop(self) -> int:
        return self.cause.hop


def parse_variable(text: str) -> RelationalVariable:
    text = text.strip()
    if not text.startswith("[") or "]." not in text:
        raise SchemaError(f"cannot parse relational variable {text!r}")
    inner, attr = text[1:].split("].", 1)
    path = tuple(part.strip() for part in inner.split(","))
    return RelationalVariable(path, attr.strip())


def parse_dependency(text: str) -> RelationalDependency:
    if "->" not in text:
        raise SchemaError(f"cannot parse dependency {text!r}")
    lhs, rhs = text.split("->", 1)
    return RelationalDependency(parse_variable(lhs), parse_variable(rhs))


def enumerate_variables(schema: Schema, base: str, max_hops: int,
                        include_latent: bool = True) -> list[RelationalVariable]:
    out = []
    for path in enumerate_paths(schema, base, max_hops):
        for a in schema.attributes_of(path[-1]):
            if a.latent and not include_latent:
                continue
            out.append(RelationalVariable(path, a.name))
    return sorted(out)


# -- the model ----------------------------------------------------------

@dataclass
class Lrcm:
    """A relational causal model: schema + dependencies + hop threshold."""
    schema: Schema
    dependencies: list[RelationalDependency]
    hop_threshold: int

    def validate(self) -> None:
        self.schema.validate()
        seen = set()
        for dep in self.dependencies:
            if str(dep) in seen:
                raise SchemaError(f"duplicate dependency {dep}")
            seen.add(str(dep))
            if not validate_path(self.schema, dep.cause.path):
                raise SchemaError(f"invalid cause path in {dep}")
            if dep.hop > self.hop_threshold:
                raise SchemaError(f"{dep} exceeds hop threshold {self.hop_threshold}")
            self.schema.attribute(dep.cause.terminal, dep.cause.attr)
            self.schema.attribute(dep.effect.terminal, dep.effect.attr)
            if self.is_latent_attr(dep.cause.terminal, dep.cause.attr) and \
                    self.is_latent_attr(dep.effect.terminal, dep.effect.attr):
                raise SchemaError(f"latent-latent dependency {dep} is not allowed")

    def is_latent_attr(self, cls: str, attr: str) -> bool:
        return self.schema.attribute(cls, attr).latent

    def is_latent_dep(self, dep: RelationalDependency) -> bool:
        return self.is_latent_attr(dep.cause.terminal, dep.cause.attr) or \
            self.is_latent_attr(dep.effect.terminal, dep.effect.attr)

    def partition_dependencies(self) -> tuple[list[RelationalDependency], list[RelationalDependency]]:
        """(observed, latent) split of the dependency set."""
        observed = [d for d in self.dependencies if not self.is_latent_dep(d)]
        latent = [d for d in self.dependencies if self.is_latent_dep(d)]
        return observed, latent


# -- JSON serialization -------------------------------------------------

def _attrs_to_json(attrs: tuple[AttributeClass, ...]) -> list[dict]:
    return [{"name": a.name, "latent": a.latent} for a in attrs]


def _attrs_from_json(items: list[dict]) -> tuple[AttributeClass, ...]:
    return tuple(AttributeClass(a["name"], bool(a.get("latent", False))) for a in items)


def model_to_json(model: Lrcm) -> dict:
    return {
        "entities": [
            {"name": e.name, "attributes": _attrs_to_json(e.attributes)}
            for e in model.schema.entities.values()
        ],
        "relationships": [
            {
                "name": r.name,
                "attributes": _attrs_to_json(r.attributes),
                "participants": [
                    {"entity": e, "cardinality": c.value} for e, c in r.participants
                ],
            }
            for r in model.schema.relationships.values()
        ],
        "dependencies": [str(d) for d in model.dependencies],
        "hop_threshold": model.hop_threshold,
    }


def model_from_json(data: dict) -> Lrcm:
    schema = Schema()
    for e in data.get("entities", []):
        schema.entities[e["name"]] = EntityClass(e["name"], _attrs_from_json(e.get("attributes", [])))
    for r in data.get("relationships", []):
        parts = tuple(
            (p["entity"], Cardinality(p["cardinality"])) for p in r.get("participants", [])
        )
        schema.relationships[r["name"]] = RelationshipClass(
            r["name"], parts, _attrs_from_json(r.get("attributes", [])))
    deps = [parse_dependency(t) for t in data.get("dependencies", [])]
    model = Lrcm(schema, deps, int(data.get("hop_threshold", 1)))
    model.validate()
    return model


def load_model(path: str) -> Lrcm:
    with open(path) as fh:
        return model_from_json(json.load(fh))


def save_model(model: Lrcm, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_json(model), fh, indent=2)
        fh.write("\n")
