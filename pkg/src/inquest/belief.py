"""Factorized belief states, evidence updates and information-gain rewards.

The belief over a specification space factorizes into one categorical
distribution per attribute, so its total entropy is the sum of marginal
entropies. Evidence imposes hard constraints: the posterior for a
constrained attribute is the prior restricted to the allowed subset and
renormalized (a point mass when the subset is a singleton). The per-turn
reward is the entropy reduction in bits, which under hard constraints
equals the sum of the prior entropies shed by the constrained attributes.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Protocol, Sequence

from inquest.errors import ContradictionError, EnumerationLimitError, InquestError, SchemaError
from inquest.kernels import entropy_bits, kl_bits, restrict_renorm
from inquest.schema import Schema, WorldModel

logger = logging.getLogger(__name__)

EVIDENCE_PROVENANCE = ("oracle", "human", "parser")

# Maximum (ground truth x answer) outcomes the enumeration oracle will visit.
DEFAULT_ENUMERATION_CAP = 10**6


@dataclass(frozen=True)
class Evidence:
    """Hard constraints extracted from one answer.

    Each constrained attribute maps to a nonempty subset of its domain;
    singleton subsets pin the attribute to one value.
    """

    constraints: dict  # attr_id -> tuple of allowed values
    provenance: str = "oracle"

    def __post_init__(self):
        if self.provenance not in EVIDENCE_PROVENANCE:
            raise SchemaError(f"unknown evidence provenance {self.provenance!r}")
        object.__setattr__(
            self,
            "constraints",
            {k: tuple(v) for k, v in self.constraints.items()},
        )
        for attr_id, subset in self.constraints.items():
            if not subset:
                raise SchemaError(f"empty constraint subset for {attr_id!r}")

    def validate(self, schema: Schema) -> None:
        for attr_id, subset in self.constraints.items():
            attr = schema.attribute(attr_id)
            for value in subset:
                if value not in attr.domain:
                    raise SchemaError(
                        f"attribute {attr_id!r}: unknown value {value!r}"
                    )

    @property
    def is_singleton_only(self) -> bool:
        return all(len(v) == 1 for v in self.constraints.values())


@dataclass(frozen=True)
class RewardRecord:
    """Per-turn information-gain accounting."""

    turn: int
    ig_bits: float
    resolved_attributes: tuple
    per_attribute_bits: dict  # attr_id -> entropy drop in bits

    def to_dict(self) -> dict:
        return {
            "turn": self.turn,
            "ig_bits": self.ig_bits,
            "resolved": list(self.resolved_attributes),
            "per_attribute": dict(self.per_attribute_bits),
        }


@dataclass(frozen=True)
class BeliefState:
    """Per-attribute distributions with cached entropies.

    Instances are immutable; `apply_evidence` returns a new state. Vectors
    follow each attribute's domain order.
    """

    schema: Schema
    distributions: dict  # attr_id -> tuple of probabilities
    entropies: dict = field(repr=False)  # attr_id -> bits
    resolved: frozenset = frozenset()
    t: int = 0

    @property
    def total_entropy_bits(self) -> float:
        return sum(self.entropies[a.id] for a in self.schema.attributes)

    def distribution(self, attr_id: str) -> tuple:
        return self.distributions[attr_id]

    def entropy_bits(self, attr_id: str) -> float:
        return self.entropies[attr_id]

    def is_resolved(self, attr_id: str) -> bool:
        return attr_id in self.resolved

    def unresolved_ids(self) -> list:
        return [a.id for a in self.schema.attributes if a.id not in self.resolved]

    def resolved_value(self, attr_id: str):
        """The pinned value of a resolved attribute."""
        attr = self.schema.attribute(attr_id)
        vec = self.distributions[attr_id]
        for j, p in enumerate(vec):
            if p > 0.0:
                return attr.domain[j]
        raise InquestError(f"attribute {attr_id!r} has an all-zero distribution")

    def best_guess(self, attr_id: str) -> tuple:
        """(value, probability) of the current mode; ties break in domain order."""
        attr = self.schema.attribute(attr_id)
        vec = self.distributions[attr_id]
        best = 0
        for j in range(1, len(vec)):
            if vec[j] > vec[best]:
                best = j
        return attr.domain[best], vec[best]

    def to_snapshot(self) -> dict:
        """JSON-ready snapshot: {"t", "distributions", "resolved"}."""
        return {
            "t": self.t,
            "distributions": {
                a.id: {v: self.distributions[a.id][j] for j, v in enumerate(a.domain)}
                for a in self.schema.attributes
            },
            "resolved": [a.id for a in self.schema.attributes if a.id in self.resolved],
        }

    @classmethod
    def from_snapshot(cls, schema: Schema, snapshot: Mapping) -> "BeliefState":
        dists = {}
        for attr in schema.attributes:
            table = snapshot["distributions"][attr.id]
            dists[attr.id] = tuple(table[v] for v in attr.domain)
        return _build_state(schema, dists, int(snapshot["t"]))


def _build_state(schema: Schema, dists: dict, t: int) -> BeliefState:
    entropies = {}
    resolved = set()
    for attr in schema.attributes:
        vec = dists[attr.id]
        entropies[attr.id] = entropy_bits(vec)
        if sum(1 for p in vec if p > 0.0) == 1:
            resolved.add(attr.id)
    return BeliefState(
        schema=schema,
        distributions=dists,
        entropies=entropies,
        resolved=frozenset(resolved),
        t=t,
    )


def init_belief(world_model: WorldModel) -> BeliefState:
    """Belief at turn 0: the world-model prior for every attribute."""
    dists = {
        attr.id: tuple(world_model.prior_vector(attr.id))
        for attr in world_model.schema.attributes
    }
    return _build_state(world_model.schema, dists, t=0)


def total_entropy(belief: BeliefState) -> float:
    """Total belief entropy in bits: the sum of the marginal entropies."""
    return belief.total_entropy_bits


def _constrained_updates(belief: BeliefState, evidence: Evidence, lenient: bool):
    """Compute posterior vectors and entropy drops for the constrained attributes.

    Yields (attr_id, new_vector, new_entropy, drop_bits, contradicted).
    """
    evidence.validate(belief.schema)
    for attr in belief.schema.attributes:
        if attr.id not in evidence.constraints:
            continue
        subset = evidence.constraints[attr.id]
        keep = sorted(attr.value_index(v) for v in set(subset))
        vec = belief.distributions[attr.id]
        new_vec, mass = restrict_renorm(vec, keep)
        if mass == 0.0:
            if not lenient:
                raise ContradictionError(
                    f"evidence on {attr.id!r} excludes every value the belief "
                    f"still allows (subset {tuple(subset)!r})"
                )
            # Lenient repair: adopt the evidence outright, but credit no
            # information gain for a contradicted attribute.
            logger.warning(
                "contradictory evidence on %r replaced the resolved value", attr.id
            )
            repaired = [0.0] * len(vec)
            share = 1.0 / len(keep)
            for j in keep:
                repaired[j] = share
            if len(keep) == 1:
                repaired[keep[0]] = 1.0
            new_vec = repaired
            new_entropy = entropy_bits(new_vec)
            yield attr.id, tuple(new_vec), new_entropy, 0.0, True
            continue
        new_entropy = entropy_bits(new_vec)
        drop = belief.entropies[attr.id] - new_entropy
        yield attr.id, tuple(new_vec), new_entropy, drop, False


def apply_evidence(
    belief: BeliefState,
    evidence: Evidence,
    lenient: bool = False,
) -> tuple[BeliefState, RewardRecord]:
    """Condition the belief on evidence and account the entropy reduction.

    The reward is computed per constrained attribute (prior entropy minus
    posterior entropy) and cross-checked against the total-entropy
    difference; the two routes must agree to 1e-9.

    Note: a non-singleton constraint can in principle raise an attribute's
    entropy when it excludes a dominant value; with singleton evidence the
    reward is always nonnegative.
    """
    new_dists = dict(belief.distributions)
    new_entropies = dict(belief.entropies)
    drops = {}
    newly_resolved = []
    for attr_id, new_vec, new_entropy, drop, _ in _constrained_updates(
        belief, evidence, lenient
    ):
        new_dists[attr_id] = new_vec
        new_entropies[attr_id] = new_entropy
        drops[attr_id] = drop
        support = sum(1 for p in new_vec if p > 0.0)
        if support == 1 and attr_id not in belief.resolved:
            newly_resolved.append(attr_id)

    reward = sum(drops.values())
    total_before = belief.total_entropy_bits
    total_after = sum(new_entropies[a.id] for a in belief.schema.attributes)
    if abs((total_before - total_after) - reward) > 1e-9:
        raise InquestError(
            "entropy accounting mismatch: total-difference "
            f"{total_before - total_after} vs per-attribute sum {reward}"
        )

    resolved = set(belief.resolved)
    resolved.update(newly_resolved)
    new_state = BeliefState(
        schema=belief.schema,
        distributions=new_dists,
        entropies=new_entropies,
        resolved=frozenset(resolved),
        t=belief.t + 1,
    )
    record = RewardRecord(
        turn=new_state.t,
        ig_bits=reward,
        resolved_attributes=tuple(newly_resolved),
        per_attribute_bits=drops,
    )
    return new_state, record


def reward_for_evidence(belief: BeliefState, evidence: Evidence) -> float:
    """Entropy reduction (bits) the evidence would cause, without advancing."""
    return sum(
        (drop for _, _, _, drop, _ in _constrained_updates(belief, evidence, False)),
        0.0,
    )


class AnswerModel(Protocol):
    """Enumerable distribution over answers, given a ground truth."""

    def outcomes(
        self, truth: Mapping[str, str], targets: Sequence[str]
    ) -> list[tuple[float, dict]]:
        """All (probability, constraints) pairs for a question on `targets`."""
        ...


class FullReveal:
    """Deterministic oracle: every targeted attribute is pinned to its true value."""

    def outcomes(self, truth, targets):
        return [(1.0, {a: (truth[a],) for a in targets})]


class SubsetReveal:
    """Partially informative oracle used for enumeration.

    Each targeted attribute is, independently, revealed as a uniformly
    chosen subset of `coarseness` values containing the truth (probability
    `reveal_fraction`) or omitted. Subset choice is symmetric in the
    non-true values, so restriction + renormalization is the exact
    Bayesian update and expected entropy reduction equals the mutual
    information.
    """

    def __init__(self, schema: Schema, reveal_fraction: float, coarseness: int):
        if not 0.0 <= reveal_fraction <= 1.0:
            raise SchemaError("reveal_fraction must be in [0, 1]")
        if coarseness < 1:
            raise SchemaError("coarseness must be >= 1")
        self.schema = schema
        self.reveal_fraction = reveal_fraction
        self.coarseness = coarseness

    def _attr_outcomes(self, attr_id: str, true_value: str):
        attr = self.schema.attribute(attr_id)
        size = max(1, min(self.coarseness, len(attr.domain) - 1))
        outcomes = []
        if self.reveal_fraction < 1.0:
            outcomes.append((1.0 - self.reveal_fraction, None))
        if self.reveal_fraction > 0.0:
            others = [v for v in attr.domain if v != true_value]
            combos = list(itertools.combinations(others, size - 1))
            share = self.reveal_fraction / len(combos)
            for combo in combos:
                subset = tuple(
                    v for v in attr.domain if v == true_value or v in combo
                )
                outcomes.append((share, subset))
        return outcomes

    def outcomes(self, truth, targets):
        per_attr = [
            [(p, attr_id, subset) for p, subset in self._attr_outcomes(attr_id, truth[attr_id])]
            for attr_id in targets
        ]
        results = []
        for combo in itertools.product(*per_attr):
            prob = 1.0
            constraints = {}
            for p, attr_id, subset in combo:
                prob *= p
                if subset is not None:
                    constraints[attr_id] = subset
            results.append((prob, constraints))
        return results


def expected_information_gain(
    belief: BeliefState,
    targeted_attrs: Iterable[str],
    answer_model: AnswerModel,
    enumeration_cap: int = DEFAULT_ENUMERATION_CAP,
) -> float:
    """Expected entropy reduction of a question, by exhaustive enumeration.

    Enumerates every ground truth the belief allows for the targeted
    attributes (weighted by the belief) and every answer the model can
    give, and averages the KL divergence from posterior to prior. This is
    a validation oracle, not part of the training loop.
    """
    schema = belief.schema
    targets = [a.id for a in schema.attributes if a.id in set(targeted_attrs)]
    for attr_id in targeted_attrs:
        schema.attribute(attr_id)  # raises on unknown ids
    if not targets:
        return 0.0

    supports = []
    for attr_id in targets:
        attr = schema.attribute(attr_id)
        vec = belief.distributions[attr_id]
        supports.append(
            [(attr.domain[j], vec[j]) for j in range(len(vec)) if vec[j] > 0.0]
        )

    visited = 0
    expected_kl = 0.0
    for combo in itertools.product(*supports):
        truth = {attr_id: value for attr_id, (value, _) in zip(targets, combo)}
        p_truth = 1.0
        for _, (_, p) in zip(targets, combo):
            p_truth *= p
        for p_answer, constraints in answer_model.outcomes(truth, targets):
            visited += 1
            if visited > enumeration_cap:
                raise EnumerationLimitError(
                    f"enumeration exceeds the cap of {enumeration_cap} outcomes"
                )
            if p_answer == 0.0 or not constraints:
                continue
            realized_kl = 0.0
            for attr_id, subset in constraints.items():
                attr = schema.attribute(attr_id)
                vec = belief.distributions[attr_id]
                keep = sorted(attr.value_index(v) for v in set(subset))
                post, mass = restrict_renorm(vec, keep)
                if mass == 0.0:
                    raise ContradictionError(
                        f"answer model produced impossible evidence on {attr_id!r}"
                    )
                realized_kl += kl_bits(post, vec)
            expected_kl += p_truth * p_answer * realized_kl
    return expected_kl
