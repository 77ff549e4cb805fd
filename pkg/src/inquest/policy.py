"""The toy question-selection policy: a softmax over candidate features.

The policy scores each candidate question in a group by a linear function
of its features and selects through a group softmax. This keeps every term
of the clipped-surrogate and KL objectives exactly computable while
preserving their algebra.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from inquest.belief import BeliefState
from inquest.errors import SchemaError
from inquest.features import FEATURE_DIM, FEATURE_VERSION, question_features
from inquest.kernels import log_softmax


@dataclass(frozen=True)
class PolicyParams:
    """Weights and temperature of the selection policy."""

    theta: tuple = (0.0,) * FEATURE_DIM
    temperature: float = 1.0
    feature_version: str = FEATURE_VERSION
    trained_with: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "theta", tuple(float(x) for x in self.theta))
        if len(self.theta) != FEATURE_DIM:
            raise SchemaError(
                f"theta must have dimension {FEATURE_DIM} (got {len(self.theta)})"
            )
        if not all(np.isfinite(self.theta)):
            raise SchemaError("theta must be finite")
        if not self.temperature > 0:
            raise SchemaError("temperature must be positive")

    def score(self, features) -> float:
        acc = 0.0
        for w, x in zip(self.theta, features):
            acc += w * x
        return acc / self.temperature

    def scores(self, feature_list) -> list:
        return [self.score(f) for f in feature_list]

    def to_json(self) -> str:
        payload = {
            "theta": list(self.theta),
            "temperature": self.temperature,
            "feature_version": self.feature_version,
            "trained_with": dict(self.trained_with),
        }
        return json.dumps(payload, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "PolicyParams":
        payload = json.loads(text)
        if payload.get("feature_version") != FEATURE_VERSION:
            raise SchemaError(
                f"policy was trained with feature version "
                f"{payload.get('feature_version')!r}, expected {FEATURE_VERSION!r}"
            )
        return cls(
            theta=tuple(payload["theta"]),
            temperature=float(payload.get("temperature", 1.0)),
            trained_with=payload.get("trained_with", {}),
        )


def load_policy(path) -> PolicyParams:
    with open(path, "r", encoding="utf-8") as handle:
        return PolicyParams.from_json(handle.read())


def save_policy(params: PolicyParams, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(params.to_json())


def group_log_probs(params: PolicyParams, feature_list) -> list:
    """Log-probabilities of each candidate under the group softmax."""
    if not feature_list:
        raise SchemaError("candidate group is empty")
    return log_softmax(params.scores(feature_list))


def policy_logprob(params: PolicyParams, feature_list, index: int) -> float:
    """Log-probability of one candidate within its group."""
    return group_log_probs(params, feature_list)[index]


def argmax_index(values) -> int:
    """Index of the maximum; ties break toward the lowest index."""
    best = 0
    for i in range(1, len(values)):
        if values[i] > values[best]:
            best = i
    return best


def select_question(
    params: PolicyParams,
    belief: BeliefState,
    candidate_generator,
    mode: str = "greedy",
    rng: Optional[np.random.Generator] = None,
):
    """Pick a question from a freshly generated candidate set.

    Greedy mode returns the argmax-score candidate (lowest index on ties);
    sample mode draws from the softmax. Returns (question, candidate_set).
    """
    candidate_set = candidate_generator.generate(belief, rng)
    if not candidate_set.candidates:
        raise SchemaError("candidate generator produced no candidates")
    feats = [question_features(belief, q.targets) for q in candidate_set.candidates]
    if mode == "greedy":
        index = argmax_index(params.scores(feats))
    elif mode == "sample":
        if rng is None:
            raise SchemaError("sample mode requires an rng")
        log_probs = group_log_probs(params, feats)
        probs = np.exp(log_probs)
        probs = probs / probs.sum()
        index = int(rng.choice(len(probs), p=probs))
    else:
        raise SchemaError(f"unknown selection mode {mode!r}")
    return candidate_set.candidates[index], candidate_set


class PolicySelector:
    """Adapter exposing the policy as a dialogue-time question selector."""

    def __init__(
        self,
        params: PolicyParams,
        candidate_generator,
        mode: str = "greedy",
        policy_id: str = "policy",
    ):
        if mode not in ("greedy", "sample"):
            raise SchemaError(f"unknown selection mode {mode!r}")
        self.params = params
        self.generator = candidate_generator
        self.mode = mode
        self.policy_id = policy_id

    def propose(self, belief: BeliefState, rng: np.random.Generator):
        if not belief.unresolved_ids():
            return None
        question, _ = select_question(
            self.params, belief, self.generator, self.mode, rng
        )
        return question
