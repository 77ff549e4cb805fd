"""Preference-group generation: candidate questions, rewards, advantages.

At each turn of a simulated dialogue, a mixed pool of candidate questions
is scored counterfactually against the oracle from the same pre-turn
belief, rewards are normalized into z-scored advantages within the group,
and the dialogue then advances using the rollout policy's own question.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from inquest.belief import BeliefState, apply_evidence, init_belief, reward_for_evidence
from inquest.dialogue import (
    INITIAL_REQUEST,
    OFF_TOPIC_QUESTIONS,
    OraclePersona,
    Question,
    multi_attribute_question,
    oracle_answer,
    parse_answer,
    single_attribute_question,
)
from inquest.errors import SchemaError
from inquest.features import FEATURE_VERSION, question_features
from inquest.kernels import zscore
from inquest.rng import derive_seed, spawn
from inquest.schema import Schema, Specification, WorldModel

STRATEGY_TAGS = ("per-attribute", "multi-attribute", "low-value", "off-topic", "gateway")

REWARD_MODES = ("entropy", "slot-count")

# Rewards are serialized in bits with this many decimal places.
REWARD_DECIMALS = 6


@dataclass(frozen=True)
class StrategyMix:
    """Relative weights of the candidate-generation strategies."""

    per_attribute: int = 3
    multi_attribute: int = 3
    low_value: int = 1
    off_topic: int = 1
    gateway: int = 0

    def weights(self) -> dict:
        return {
            "per-attribute": self.per_attribute,
            "multi-attribute": self.multi_attribute,
            "low-value": self.low_value,
            "off-topic": self.off_topic,
            "gateway": self.gateway,
        }

    def allocate(self, k: int) -> dict:
        """Split k candidate slots over the enabled strategies.

        Largest-remainder apportionment; every enabled strategy gets at
        least one slot when k allows.
        """
        weights = {tag: w for tag, w in self.weights().items() if w > 0}
        if not weights:
            raise SchemaError("no candidate strategy is enabled")
        if k < len(weights):
            counts = {}
            for tag in STRATEGY_TAGS:
                if tag in weights and len(counts) < k:
                    counts[tag] = 1
            return counts
        total = sum(weights.values())
        counts = {}
        remainders = []
        assigned = 0
        for tag in STRATEGY_TAGS:
            if tag not in weights:
                continue
            exact = k * weights[tag] / total
            base = max(1, int(exact))
            counts[tag] = base
            assigned += base
            remainders.append((exact - base, tag))
        remainders.sort(key=lambda item: (-item[0], STRATEGY_TAGS.index(item[1])))
        i = 0
        while assigned < k:
            counts[remainders[i % len(remainders)][1]] += 1
            assigned += 1
            i += 1
        while assigned > k:
            victim = max(counts, key=lambda tag: (counts[tag], STRATEGY_TAGS.index(tag)))
            if counts[victim] <= 1:
                break
            counts[victim] -= 1
            assigned -= 1
        return counts


@dataclass(frozen=True)
class CandidateSet:
    """One prompt with its candidate questions and their strategy tags."""

    prompt: str
    candidates: tuple
    tags: tuple

    def __post_init__(self):
        object.__setattr__(self, "candidates", tuple(self.candidates))
        object.__setattr__(self, "tags", tuple(self.tags))


class CandidateGenerator:
    """Deterministic-for-seed mixture of candidate question strategies."""

    def __init__(
        self,
        schema: Schema,
        mix: StrategyMix = StrategyMix(),
        k: int = 8,
        allow_duplicates: bool = False,
        gateway=None,
    ):
        if k < 2:
            raise SchemaError(f"candidate group size must be >= 2 (got {k})")
        self.schema = schema
        self.mix = mix
        self.k = k
        self.allow_duplicates = allow_duplicates
        self.gateway = gateway

    def _entropy_ranked(self, belief: BeliefState, descending: bool):
        pairs = [
            (belief.entropy_bits(a.id), i, a.id)
            for i, a in enumerate(self.schema.attributes)
        ]
        pairs.sort(key=lambda p: ((-p[0]) if descending else p[0], p[1]))
        return [attr_id for _, _, attr_id in pairs]

    def generate(
        self,
        belief: BeliefState,
        rng: Optional[np.random.Generator] = None,
        prompt: str = "User: " + INITIAL_REQUEST,
    ) -> CandidateSet:
        if rng is None:
            rng = np.random.default_rng(0)
        counts = self.mix.allocate(self.k)
        candidates = []
        tags = []
        seen = set()

        def push(question: Question, tag: str) -> bool:
            key = (question.targets, question.text)
            if key in seen and not self.allow_duplicates:
                return False
            seen.add(key)
            candidates.append(question)
            tags.append(tag)
            return True

        n_attrs = len(self.schema.attributes)
        for attr_id in self._entropy_ranked(belief, descending=True)[
            : counts.get("per-attribute", 0)
        ]:
            push(single_attribute_question(self.schema, attr_id), "per-attribute")

        for _ in range(counts.get("multi-attribute", 0)):
            placed = False
            for _attempt in range(50):
                size = 2 + int(rng.integers(0, 3))
                size = min(size, n_attrs)
                picked = rng.choice(n_attrs, size=size, replace=False)
                chosen = sorted(int(j) for j in picked)
                targets = tuple(self.schema.attributes[j].id for j in chosen)
                if push(multi_attribute_question(self.schema, targets), "multi-attribute"):
                    placed = True
                    break
            if not placed and not self.allow_duplicates:
                raise SchemaError(
                    "cannot generate enough distinct multi-attribute candidates"
                )

        low_ranked = self._entropy_ranked(belief, descending=False)
        taken = 0
        for attr_id in low_ranked:
            if taken >= counts.get("low-value", 0):
                break
            if push(single_attribute_question(self.schema, attr_id), "low-value"):
                taken += 1

        wanted = counts.get("off-topic", 0)
        if wanted > 0:
            order = rng.permutation(len(OFF_TOPIC_QUESTIONS))
            for j in order[:wanted]:
                push(
                    Question(
                        targets=(),
                        text=OFF_TOPIC_QUESTIONS[int(j)],
                        origin="template",
                    ),
                    "off-topic",
                )

        for _ in range(counts.get("gateway", 0)):
            if self.gateway is None:
                raise SchemaError("gateway strategy enabled without a gateway client")
            question = self.gateway.propose_question(prompt, self.schema)
            push(question, "gateway")

        if len(candidates) < self.k and not self.allow_duplicates:
            # Backfill with remaining single-attribute questions before
            # giving up; tiny schemas simply cannot host large groups.
            for attr_id in self._entropy_ranked(belief, descending=True):
                if len(candidates) >= self.k:
                    break
                push(single_attribute_question(self.schema, attr_id), "per-attribute")
        if len(candidates) < self.k:
            raise SchemaError(
                f"only {len(candidates)} distinct candidates available, need {self.k}"
            )
        return CandidateSet(prompt=prompt, candidates=candidates[: self.k], tags=tags[: self.k])


@dataclass(frozen=True)
class PreferenceGroup:
    """One prompt, its candidate responses, rewards and advantages."""

    prompt: str
    responses: tuple
    rewards: tuple  # bits, rounded to REWARD_DECIMALS
    advantages: tuple
    ground_truth_id: str
    features: tuple  # per-candidate feature vectors
    candidates: tuple  # per-candidate {"targets": [...], "tag": str}
    dialogue_id: str = ""
    turn: int = 0
    belief_ref: str = ""
    reward_mode: str = "entropy"

    def to_json_line(self) -> str:
        payload = {
            "prompt": self.prompt,
            "responses": list(self.responses),
            "reward": list(self.rewards),
            "advantage": list(self.advantages),
            "meta": {
                "dialogue_id": self.dialogue_id,
                "turn": self.turn,
                "ground_truth_id": self.ground_truth_id,
                "belief_ref": self.belief_ref,
                "reward_mode": self.reward_mode,
                "feature_version": FEATURE_VERSION,
                "candidates": [dict(c) for c in self.candidates],
                "features": [list(f) for f in self.features],
            },
        }
        return json.dumps(payload)

    @classmethod
    def from_json_line(cls, line: str) -> "PreferenceGroup":
        payload = json.loads(line)
        meta = payload.get("meta", {})
        return cls(
            prompt=payload["prompt"],
            responses=tuple(payload["responses"]),
            rewards=tuple(payload["reward"]),
            advantages=tuple(payload["advantage"]),
            ground_truth_id=meta.get("ground_truth_id", ""),
            features=tuple(tuple(f) for f in meta.get("features", [])),
            candidates=tuple(
                {"targets": list(c["targets"]), "tag": c["tag"]}
                for c in meta.get("candidates", [])
            ),
            dialogue_id=meta.get("dialogue_id", ""),
            turn=int(meta.get("turn", 0)),
            belief_ref=meta.get("belief_ref", ""),
            reward_mode=meta.get("reward_mode", "entropy"),
        )


def zscore_advantages(rewards: Sequence[float]) -> list:
    """Group-normalized advantages: mean 0, population std 1.

    Constant reward vectors normalize to the all-zero vector.
    """
    if len(rewards) < 2:
        raise SchemaError("advantage normalization needs at least 2 rewards")
    return zscore(list(rewards))


def candidate_reward(
    belief: BeliefState,
    schema: Schema,
    persona: OraclePersona,
    ground_truth: Specification,
    question: Question,
    rng: np.random.Generator,
    reward_mode: str = "entropy",
) -> float:
    """Counterfactual reward of one candidate from the current belief."""
    answer = oracle_answer(schema, persona, ground_truth, question, rng)
    evidence = parse_answer("structured", question, answer)
    if reward_mode == "entropy":
        return reward_for_evidence(belief, evidence)
    if reward_mode == "slot-count":
        return float(len(evidence.constraints))
    raise SchemaError(f"unknown reward mode {reward_mode!r}")


def score_group(
    candidate_set: CandidateSet,
    persona: OraclePersona,
    ground_truth: Specification,
    belief: BeliefState,
    reward_mode: str = "entropy",
    seed: int = 0,
    ground_truth_id: str = "",
    dialogue_id: str = "",
    turn: int = 0,
    belief_ref: str = "",
) -> PreferenceGroup:
    """Score every candidate counterfactually from the same belief.

    The belief is not advanced; each candidate is answered by the oracle in
    its own branch and rewarded by the entropy it would shed (or by the
    number of constrained attributes in slot-count mode).
    """
    schema = belief.schema
    rewards = []
    feats = []
    for index, question in enumerate(candidate_set.candidates):
        reward = candidate_reward(
            belief,
            schema,
            persona,
            ground_truth,
            question,
            spawn(seed, "candidate", index),
            reward_mode,
        )
        rewards.append(float(round(reward, REWARD_DECIMALS)))
        feats.append(question_features(belief, question.targets))
    advantages = zscore_advantages(rewards)
    return PreferenceGroup(
        prompt=candidate_set.prompt,
        responses=tuple(q.text for q in candidate_set.candidates),
        rewards=tuple(rewards),
        advantages=tuple(advantages),
        ground_truth_id=ground_truth_id,
        features=tuple(feats),
        candidates=tuple(
            {"targets": list(q.targets), "tag": tag}
            for q, tag in zip(candidate_set.candidates, candidate_set.tags)
        ),
        dialogue_id=dialogue_id,
        turn=turn,
        belief_ref=belief_ref,
        reward_mode=reward_mode,
    )


class EpsilonGreedyRollout:
    """Advances data-generation dialogues: mostly greedy-entropy, sometimes random."""

    def __init__(self, epsilon: float = 0.2):
        if not 0.0 <= epsilon <= 1.0:
            raise SchemaError("epsilon must be in [0, 1]")
        self.epsilon = epsilon
        self.policy_id = f"rollout-eps{epsilon:g}"

    def choose(
        self, belief: BeliefState, candidate_set: CandidateSet, rng: np.random.Generator
    ) -> Question:
        if self.epsilon > 0.0 and rng.random() < self.epsilon:
            return candidate_set.candidates[
                int(rng.integers(0, len(candidate_set.candidates)))
            ]
        best_id = None
        best_h = -1.0
        for attr in belief.schema.attributes:
            h = belief.entropy_bits(attr.id)
            if h > best_h:
                best_h = h
                best_id = attr.id
        return single_attribute_question(belief.schema, best_id)


class PolicyRollout:
    """Advances dialogues by sampling from the selection policy itself."""

    def __init__(self, params, mode: str = "sample"):
        self.params = params
        self.mode = mode
        self.policy_id = "rollout-policy"

    def choose(self, belief, candidate_set, rng):
        feats = [question_features(belief, q.targets) for q in candidate_set.candidates]
        scores = self.params.scores(feats)
        if self.mode == "greedy":
            best = 0
            for i in range(1, len(scores)):
                if scores[i] > scores[best]:
                    best = i
            return candidate_set.candidates[best]
        from inquest.kernels import log_softmax

        probs = np.exp(log_softmax(scores))
        probs = probs / probs.sum()
        return candidate_set.candidates[int(rng.choice(len(probs), p=probs))]


def _roll_dialogue_groups(
    world_model: WorldModel,
    ground_truth: Specification,
    persona: OraclePersona,
    generator: CandidateGenerator,
    rollout,
    reward_mode: str,
    entropy_threshold: float,
    max_turns: int,
    dialogue_seed: int,
    dialogue_id: str,
    ground_truth_id: str,
):
    schema = world_model.schema
    belief = init_belief(world_model)
    history = "User: " + INITIAL_REQUEST
    groups = []
    snapshots = {}
    t = 0
    while belief.total_entropy_bits > entropy_threshold and t < max_turns:
        t += 1
        candidate_set = generator.generate(
            belief, spawn(dialogue_seed, "candidates", t), prompt=history
        )
        belief_ref = f"{dialogue_id}:{t}"
        snapshots[belief_ref] = belief.to_snapshot()
        groups.append(
            score_group(
                candidate_set,
                persona,
                ground_truth,
                belief,
                reward_mode=reward_mode,
                seed=derive_seed(dialogue_seed, "score", t),
                ground_truth_id=ground_truth_id,
                dialogue_id=dialogue_id,
                turn=t,
                belief_ref=belief_ref,
            )
        )
        question = rollout.choose(belief, candidate_set, spawn(dialogue_seed, "rollout", t))
        answer = oracle_answer(
            schema, persona, ground_truth, question, spawn(dialogue_seed, "oracle", t)
        )
        evidence = parse_answer("structured", question, answer)
        belief, _ = apply_evidence(belief, evidence)
        history += f"\nAssistant: {question.text}\nUser: {answer.text}"
    return groups, snapshots


@dataclass
class DatasetStats:
    """Summary of one generated preference dataset."""

    n_dialogues: int
    n_groups: int
    reward_mode: str
    group_size: int
    mean_best_reward: float
    reward_histogram: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(
            {
                "n_dialogues": self.n_dialogues,
                "n_groups": self.n_groups,
                "reward_mode": self.reward_mode,
                "group_size": self.group_size,
                "mean_best_reward": self.mean_best_reward,
                "reward_histogram": self.reward_histogram,
            },
            indent=2,
        ) + "\n"


def beliefs_sidecar_path(out_path) -> str:
    text = str(out_path)
    if text.endswith(".jsonl"):
        return text[: -len(".jsonl")] + ".beliefs.jsonl"
    return text + ".beliefs.jsonl"


def build_dataset(
    world_model: WorldModel,
    ground_truths: Sequence[Specification],
    persona: OraclePersona,
    out_path,
    rollout=None,
    generator: Optional[CandidateGenerator] = None,
    groups_per_dialogue: Optional[int] = None,
    reward_mode: str = "entropy",
    seed: int = 0,
    entropy_threshold: float = 0.01,
    max_turns: int = 30,
) -> DatasetStats:
    """Generate and serialize a preference dataset with belief sidecar.

    One dialogue is rolled per ground truth; each visited turn contributes
    one preference group scored from the pre-turn belief. Reproducible:
    identical seeds give byte-identical files.
    """
    if not ground_truths:
        raise SchemaError("training split is empty")
    if reward_mode not in REWARD_MODES:
        raise SchemaError(f"unknown reward mode {reward_mode!r}")
    if rollout is None:
        rollout = EpsilonGreedyRollout()
    if generator is None:
        generator = CandidateGenerator(world_model.schema)

    all_groups = []
    all_snapshots = {}
    for d_idx, truth in enumerate(ground_truths):
        dialogue_id = f"dlg-{d_idx:05d}"
        dialogue_seed = derive_seed(seed, "dialogue", d_idx)
        groups, snapshots = _roll_dialogue_groups(
            world_model,
            truth,
            persona,
            generator,
            rollout,
            reward_mode,
            entropy_threshold,
            max_turns,
            dialogue_seed,
            dialogue_id,
            ground_truth_id=f"gt-{d_idx:05d}",
        )
        if groups_per_dialogue is not None and groups_per_dialogue < len(groups):
            pick_rng = spawn(dialogue_seed, "pick")
            indices = sorted(
                int(i)
                for i in pick_rng.choice(
                    len(groups), size=groups_per_dialogue, replace=False
                )
            )
            groups = [groups[i] for i in indices]
        kept_refs = {g.belief_ref for g in groups}
        all_groups.extend(groups)
        for ref, snapshot in snapshots.items():
            if ref in kept_refs:
                all_snapshots[ref] = snapshot

    with open(out_path, "w", encoding="utf-8") as handle:
        for group in all_groups:
            handle.write(group.to_json_line() + "\n")
    with open(beliefs_sidecar_path(out_path), "w", encoding="utf-8") as handle:
        for group in all_groups:
            handle.write(
                json.dumps(
                    {"ref": group.belief_ref, "belief": all_snapshots[group.belief_ref]}
                )
                + "\n"
            )

    histogram = {}
    best_sum = 0.0
    for group in all_groups:
        best = max(group.rewards)
        best_sum += best
        for reward in group.rewards:
            bin_key = str(int(reward))
            histogram[bin_key] = histogram.get(bin_key, 0) + 1
    histogram = {k: histogram[k] for k in sorted(histogram, key=int)}
    return DatasetStats(
        n_dialogues=len(ground_truths),
        n_groups=len(all_groups),
        reward_mode=reward_mode,
        group_size=generator.k,
        mean_best_reward=(best_sum / len(all_groups)) if all_groups else 0.0,
        reward_histogram=histogram,
    )


def load_dataset(path) -> list:
    groups = []
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                groups.append(PreferenceGroup.from_json_line(line))
    return groups


def load_belief_snapshots(path) -> dict:
    snapshots = {}
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                record = json.loads(line)
                snapshots[record["ref"]] = record["belief"]
    return snapshots


class GroupSimulator:
    """On-demand group sampler for online training."""

    def __init__(
        self,
        world_model: WorldModel,
        ground_truths: Sequence[Specification],
        persona: OraclePersona,
        generator: Optional[CandidateGenerator] = None,
        reward_mode: str = "entropy",
        entropy_threshold: float = 0.01,
        max_turns: int = 30,
        seed: int = 0,
    ):
        if not ground_truths:
            raise SchemaError("simulator needs at least one ground truth")
        self.world_model = world_model
        self.ground_truths = list(ground_truths)
        self.persona = persona
        self.generator = generator or CandidateGenerator(world_model.schema)
        self.reward_mode = reward_mode
        self.entropy_threshold = entropy_threshold
        self.max_turns = max_turns
        self.seed = seed

    def sample(self, params, round_label) -> list:
        """Roll every ground truth with the given policy and collect groups."""
        rollout = PolicyRollout(params, mode="sample")
        groups = []
        for d_idx, truth in enumerate(self.ground_truths):
            dialogue_seed = derive_seed(self.seed, "round", round_label, "dialogue", d_idx)
            rolled, _ = _roll_dialogue_groups(
                self.world_model,
                truth,
                self.persona,
                self.generator,
                rollout,
                self.reward_mode,
                self.entropy_threshold,
                self.max_turns,
                dialogue_seed,
                dialogue_id=f"r{round_label}-d{d_idx:05d}",
                ground_truth_id=f"gt-{d_idx:05d}",
            )
            groups.extend(rolled)
        return groups
