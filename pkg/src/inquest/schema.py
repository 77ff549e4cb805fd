"""Specification space: attribute schemas, specifications, corpora and priors.

A schema fixes an ordered list of discrete attributes; a specification is
one complete assignment. The world model is the per-attribute empirical
prior estimated from a corpus of specifications, optionally Laplace
smoothed so that no domain value carries zero probability.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Mapping, Sequence

import numpy as np

from inquest.errors import SchemaError

ATTRIBUTE_GROUPS = ("layout", "color", "components", "connections", "other")

# Significant digits used when serializing probabilities.
PROB_DIGITS = 12


@dataclass(frozen=True)
class Attribute:
    """One facet of a specification and its finite value domain."""

    id: str
    label: str
    domain: tuple[str, ...]
    group: str = "other"

    def __post_init__(self):
        if not self.id:
            raise SchemaError("attribute id must be nonempty")
        if self.group not in ATTRIBUTE_GROUPS:
            raise SchemaError(
                f"attribute {self.id!r}: unknown group {self.group!r} "
                f"(expected one of {ATTRIBUTE_GROUPS})"
            )
        object.__setattr__(self, "domain", tuple(self.domain))
        if len(self.domain) < 2:
            raise SchemaError(
                f"attribute {self.id!r}: domain must have at least 2 values "
                f"(got {len(self.domain)})"
            )
        if len(set(self.domain)) != len(self.domain):
            raise SchemaError(f"attribute {self.id!r}: duplicate domain values")

    def value_index(self, value: str) -> int:
        try:
            return self.domain.index(value)
        except ValueError:
            raise SchemaError(
                f"attribute {self.id!r}: unknown value {value!r}"
            ) from None


@dataclass(frozen=True)
class Schema:
    """Ordered attribute list defining the specification space."""

    name: str
    version: str
    attributes: tuple[Attribute, ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "attributes", tuple(self.attributes))
        index = {}
        for attr in self.attributes:
            if attr.id in index:
                raise SchemaError(f"duplicate attribute id {attr.id!r}")
            index[attr.id] = attr
        object.__setattr__(self, "_index", index)

    @property
    def attribute_ids(self) -> tuple[str, ...]:
        return tuple(a.id for a in self.attributes)

    def attribute(self, attr_id: str) -> Attribute:
        try:
            return self._index[attr_id]
        except KeyError:
            raise SchemaError(f"unknown attribute id {attr_id!r}") from None

    def __contains__(self, attr_id: str) -> bool:
        return attr_id in self._index

    def validate_specification(self, spec: "Specification") -> None:
        """Raise SchemaError unless `spec` assigns a valid value to every attribute."""
        for attr in self.attributes:
            if attr.id not in spec.assignment:
                raise SchemaError(f"specification missing attribute {attr.id!r}")
            value = spec.assignment[attr.id]
            if value not in attr.domain:
                raise SchemaError(
                    f"attribute {attr.id!r}: value {value!r} not in domain"
                )
        for key in spec.assignment:
            if key not in self._index:
                raise SchemaError(f"specification has unknown attribute {key!r}")

    def to_json(self) -> str:
        payload = {
            "name": self.name,
            "version": self.version,
            "attributes": [
                {
                    "id": a.id,
                    "label": a.label,
                    "group": a.group,
                    "domain": list(a.domain),
                }
                for a in self.attributes
            ],
        }
        return json.dumps(payload, indent=2) + "\n"

    @classmethod
    def from_dict(cls, payload: Mapping) -> "Schema":
        try:
            attributes = tuple(
                Attribute(
                    id=item["id"],
                    label=item.get("label", item["id"]),
                    domain=tuple(item["domain"]),
                    group=item.get("group", "other"),
                )
                for item in payload["attributes"]
            )
            return cls(
                name=payload["name"],
                version=str(payload.get("version", "1")),
                attributes=attributes,
            )
        except KeyError as exc:
            raise SchemaError(f"schema JSON missing field {exc}") from None


@dataclass(frozen=True)
class Specification:
    """A complete point in the specification space: one value per attribute."""

    assignment: dict

    def to_dict(self) -> dict:
        return {"assignment": dict(self.assignment)}


@dataclass(frozen=True)
class WorldModel:
    """Per-attribute prior probability tables estimated from a corpus."""

    schema: Schema
    tables: dict  # attr_id -> {value: probability}
    smoothing_alpha: float
    corpus_size: int

    def __post_init__(self):
        for attr in self.schema.attributes:
            table = self.tables.get(attr.id)
            if table is None or set(table) != set(attr.domain):
                raise SchemaError(
                    f"world model table for {attr.id!r} does not match its domain"
                )
            total = sum(table.values())
            if abs(total - 1.0) > 1e-9:
                raise SchemaError(
                    f"world model table for {attr.id!r} sums to {total}, not 1"
                )
            if self.smoothing_alpha > 0 and min(table.values()) <= 0.0:
                raise SchemaError(
                    f"world model table for {attr.id!r} has a zero probability "
                    "despite positive smoothing"
                )

    def prior_vector(self, attr_id: str) -> list[float]:
        """Probabilities in the attribute's domain order."""
        attr = self.schema.attribute(attr_id)
        table = self.tables[attr_id]
        return [table[v] for v in attr.domain]

    def to_json(self) -> str:
        tables = {
            attr.id: {
                v: float(f"%.{PROB_DIGITS}g" % self.tables[attr.id][v])
                for v in attr.domain
            }
            for attr in self.schema.attributes
        }
        payload = {
            "schema_ref": self.schema.name,
            "alpha": self.smoothing_alpha,
            "corpus_size": self.corpus_size,
            "tables": tables,
        }
        return json.dumps(payload, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str, schema: Schema) -> "WorldModel":
        payload = json.loads(text)
        if payload.get("schema_ref") != schema.name:
            raise SchemaError(
                f"world model was built for schema {payload.get('schema_ref')!r}, "
                f"not {schema.name!r}"
            )
        return cls(
            schema=schema,
            tables={k: dict(v) for k, v in payload["tables"].items()},
            smoothing_alpha=float(payload["alpha"]),
            corpus_size=int(payload["corpus_size"]),
        )


def load_schema(path) -> Schema:
    """Load and validate a schema JSON file."""
    with open(path, "r", encoding="utf-8") as handle:
        try:
            payload = json.load(handle)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"cannot parse schema file {path}: {exc}") from None
    return Schema.from_dict(payload)


def save_schema(schema: Schema, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(schema.to_json())


def generate_corpus(
    schema: Schema,
    gen_config: Mapping[str, Sequence[float]],
    n: int,
    seed: int,
) -> list[Specification]:
    """Sample `n` complete specifications, independently per attribute.

    `gen_config` maps attribute ids to nonnegative sampling weights aligned
    with the attribute's domain order; attributes absent from the config are
    sampled uniformly. Deterministic for a fixed seed.
    """
    if n < 1:
        raise SchemaError(f"corpus size must be >= 1 (got {n})")
    rng = np.random.default_rng(seed)
    columns = {}
    for attr in schema.attributes:
        weights = gen_config.get(attr.id)
        if weights is None:
            probs = np.full(len(attr.domain), 1.0 / len(attr.domain))
        else:
            weights = np.asarray(weights, dtype=float)
            if len(weights) != len(attr.domain):
                raise SchemaError(
                    f"gen_config for {attr.id!r} has {len(weights)} weights, "
                    f"domain has {len(attr.domain)}"
                )
            if np.any(weights < 0):
                raise SchemaError(f"gen_config for {attr.id!r} has negative weights")
            total = weights.sum()
            if total <= 0:
                raise SchemaError(f"gen_config for {attr.id!r} is all zeros")
            probs = weights / total
        columns[attr.id] = rng.choice(len(attr.domain), size=n, p=probs)
    specs = []
    for row in range(n):
        assignment = {
            attr.id: attr.domain[int(columns[attr.id][row])]
            for attr in schema.attributes
        }
        specs.append(Specification(assignment=assignment))
    return specs


def estimate_prior(
    schema: Schema,
    corpus: Sequence[Specification],
    smoothing_alpha: float = 1.0,
) -> WorldModel:
    """Estimate the per-attribute prior from a corpus of specifications.

    P(value) = (count + alpha) / (len(corpus) + alpha * domain_size).
    With alpha = 0 this is the exact maximum-likelihood relative frequency.
    """
    if not corpus:
        raise SchemaError("cannot estimate a prior from an empty corpus")
    if smoothing_alpha < 0:
        raise SchemaError("smoothing alpha must be nonnegative")
    counts = {attr.id: {v: 0 for v in attr.domain} for attr in schema.attributes}
    for spec in corpus:
        schema.validate_specification(spec)
        for attr in schema.attributes:
            counts[attr.id][spec.assignment[attr.id]] += 1
    size = len(corpus)
    tables = {}
    for attr in schema.attributes:
        denom = size + smoothing_alpha * len(attr.domain)
        tables[attr.id] = {
            v: (counts[attr.id][v] + smoothing_alpha) / denom for v in attr.domain
        }
    return WorldModel(
        schema=schema,
        tables=tables,
        smoothing_alpha=smoothing_alpha,
        corpus_size=size,
    )


def save_corpus(corpus: Sequence[Specification], path) -> None:
    """Write a corpus as JSONL, one specification per line."""
    with open(path, "w", encoding="utf-8") as handle:
        for spec in corpus:
            handle.write(json.dumps(spec.to_dict()) + "\n")


def load_corpus(path, schema: Schema | None = None) -> list[Specification]:
    specs = []
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if not line:
                continue
            spec = Specification(assignment=json.loads(line)["assignment"])
            if schema is not None:
                schema.validate_specification(spec)
            specs.append(spec)
    return specs


def demo_schema() -> Schema:
    """The 12-attribute diagram schema shipped with the package."""
    text = resources.files("inquest").joinpath("data/demo_schema.json").read_text()
    return Schema.from_dict(json.loads(text))


def demo_gen_config(schema: Schema) -> dict[str, list[float]]:
    """Descending integer weights per attribute, e.g. [4, 3, 2, 1] on a 4-value domain.

    Gives each attribute a distinct nonuniform prior so entropies differ
    across attributes and ties in candidate scoring are rare.
    """
    return {
        attr.id: [float(len(attr.domain) - j) for j in range(len(attr.domain))]
        for attr in schema.attributes
    }
