"""Question-answer loops between a policy and a simulated oracle.

The oracle holds a ground-truth specification and answers under a persona:
an expert pins every targeted attribute to its exact value, a novice
reveals coarse subsets (or nothing), and a noisy oracle behaves like the
expert while interjecting irrelevant spans that carry no evidence.
Questions carry machine-readable targets, so the structured parser is
exact; a gateway-backed parser handles free text.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Protocol

import numpy as np

from inquest.belief import (
    BeliefState,
    Evidence,
    RewardRecord,
    apply_evidence,
    init_belief,
)
from inquest.errors import GatewayError, SchemaError
from inquest.rng import spawn
from inquest.schema import Schema, Specification, WorldModel

INITIAL_REQUEST = "I want to create a scientific diagram."

QUESTION_ORIGINS = ("template", "policy", "llm")
PERSONA_KINDS = ("expert", "novice", "noisy")
STOP_REASONS = ("entropy-threshold", "turn-budget", "policy-stop")

NOISE_SPANS = (
    "By the way, I had a great coffee this morning.",
    "Unrelatedly, the weather has been lovely lately.",
    "Oh, and my favorite color used to be teal, not that it matters here.",
    "Also, did you know octopuses have three hearts?",
    "Sorry, I keep getting distracted by my inbox.",
)

OFF_TOPIC_QUESTIONS = (
    "What is your favorite movie?",
    "How was your weekend?",
    "Do you prefer tea or coffee?",
    "What music do you listen to while working?",
)


@dataclass(frozen=True)
class Question:
    """A question with machine-readable targets.

    Off-topic questions carry an empty target set and yield no evidence.
    """

    targets: tuple
    text: str
    origin: str = "template"

    def __post_init__(self):
        if self.origin not in QUESTION_ORIGINS:
            raise SchemaError(f"unknown question origin {self.origin!r}")
        if not self.text:
            raise SchemaError("question text must be nonempty")
        object.__setattr__(self, "targets", tuple(self.targets))

    def validate(self, schema: Schema) -> None:
        for attr_id in self.targets:
            schema.attribute(attr_id)


@dataclass(frozen=True)
class Answer:
    """Oracle output: surface text plus the machine-readable reveal map."""

    text: str
    revealed: dict  # attr_id -> tuple of values (singleton for expert reveals)
    noise_spans: tuple = ()

    def __post_init__(self):
        object.__setattr__(
            self, "revealed", {k: tuple(v) for k, v in self.revealed.items()}
        )
        object.__setattr__(self, "noise_spans", tuple(self.noise_spans))


@dataclass(frozen=True)
class OraclePersona:
    """Answering style of the simulated user."""

    kind: str = "expert"
    reveal_fraction: float = 0.7
    subset_coarseness: int = 2
    noise_rate: float = 0.5

    def __post_init__(self):
        if self.kind not in PERSONA_KINDS:
            raise SchemaError(f"unknown persona kind {self.kind!r}")
        if not 0.0 <= self.reveal_fraction <= 1.0:
            raise SchemaError("reveal_fraction must be in [0, 1]")
        if self.subset_coarseness < 1:
            raise SchemaError("subset_coarseness must be >= 1")
        if not 0.0 <= self.noise_rate <= 1.0:
            raise SchemaError("noise_rate must be in [0, 1]")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "reveal_fraction": self.reveal_fraction,
            "subset_coarseness": self.subset_coarseness,
            "noise_rate": self.noise_rate,
        }


def _expert_reveals(schema: Schema, truth: Specification, question: Question):
    reveals = {}
    lines = []
    for attr_id in question.targets:
        attr = schema.attribute(attr_id)
        value = truth.assignment[attr_id]
        reveals[attr_id] = (value,)
        lines.append(f"The {attr.label} is {value}.")
    return reveals, lines


def oracle_answer(
    schema: Schema,
    persona: OraclePersona,
    ground_truth: Specification,
    question: Question,
    rng: np.random.Generator,
) -> Answer:
    """Answer one question from the ground truth under the persona.

    Deterministic given the rng state. The noisy persona draws only its
    noise from the rng, so its reveals match the expert's for paired seeds.
    """
    question.validate(schema)
    if persona.kind in ("expert", "noisy"):
        reveals, lines = _expert_reveals(schema, ground_truth, question)
        noise = []
        if persona.kind == "noisy" and persona.noise_rate > 0.0:
            if rng.random() < persona.noise_rate:
                count = 1 + int(rng.integers(0, 2))
                for _ in range(count):
                    noise.append(NOISE_SPANS[int(rng.integers(0, len(NOISE_SPANS)))])
        if not lines:
            lines = ["That does not really matter for the diagram."]
        text = " ".join(lines + noise)
        return Answer(text=text, revealed=reveals, noise_spans=tuple(noise))

    # Novice: each targeted attribute is independently revealed as a coarse
    # subset containing the truth, or omitted. Subsets never span the whole
    # domain, so repeated questions eventually resolve the attribute.
    reveals = {}
    lines = []
    for attr_id in question.targets:
        attr = schema.attribute(attr_id)
        value = ground_truth.assignment[attr_id]
        if rng.random() >= persona.reveal_fraction:
            lines.append(f"I am really not sure about the {attr.label}.")
            continue
        size = max(1, min(persona.subset_coarseness, len(attr.domain) - 1))
        if size == 1:
            reveals[attr_id] = (value,)
            lines.append(f"I think the {attr.label} is {value}.")
            continue
        others = [v for v in attr.domain if v != value]
        picked = rng.choice(len(others), size=size - 1, replace=False)
        chosen = {others[int(j)] for j in picked}
        chosen.add(value)
        subset = tuple(v for v in attr.domain if v in chosen)
        reveals[attr_id] = subset
        lines.append(
            f"Something like {subset[0]}, maybe {', or '.join(subset[1:])}, "
            f"for the {attr.label}."
        )
    if not lines:
        lines = ["That does not really matter for the diagram."]
    return Answer(text=" ".join(lines), revealed=reveals, noise_spans=())


def parse_answer(
    parser_mode: str,
    question: Question,
    answer: Answer,
    schema: Optional[Schema] = None,
    gateway=None,
) -> Evidence:
    """Map an answer to evidence constraints.

    Structured mode passes through the machine-readable reveal map; noise
    spans contribute nothing. Gateway mode extracts constraints from the
    surface text via the configured text-generation client and validates
    them against the schema, dropping invalid pairs.
    """
    if parser_mode == "structured":
        return Evidence(constraints=dict(answer.revealed), provenance="oracle")
    if parser_mode == "gateway":
        if gateway is None or schema is None:
            raise GatewayError("gateway parsing requires a client and a schema")
        return gateway.parse_freetext_answer(question, answer.text, schema)
    raise SchemaError(f"unknown parser mode {parser_mode!r}")


class QuestionSelector(Protocol):
    """Dialogue-time policy surface: proposes the next question."""

    policy_id: str

    def propose(
        self, belief: BeliefState, rng: np.random.Generator
    ) -> Optional[Question]:
        ...


def single_attribute_question(schema: Schema, attr_id: str) -> Question:
    attr = schema.attribute(attr_id)
    return Question(
        targets=(attr_id,),
        text=f"Which {attr.label} should the diagram use?",
        origin="template",
    )


def multi_attribute_question(schema: Schema, attr_ids) -> Question:
    labels = [schema.attribute(a).label for a in attr_ids]
    return Question(
        targets=tuple(attr_ids),
        text="Could you tell me the " + ", and the ".join(labels) + "?",
        origin="template",
    )


class GreedyEntropySelector:
    """Asks about the highest-entropy unresolved attribute, one per turn."""

    def __init__(self, schema: Schema):
        self.schema = schema
        self.policy_id = "greedy-entropy"

    def propose(self, belief: BeliefState, rng: np.random.Generator):
        best_id = None
        best_h = 0.0
        for attr in self.schema.attributes:
            h = belief.entropy_bits(attr.id)
            if h > best_h:
                best_h = h
                best_id = attr.id
        if best_id is None:
            return None
        return single_attribute_question(self.schema, best_id)


@dataclass(frozen=True)
class DialogueTurn:
    question: Question
    answer: Answer
    evidence: Evidence
    reward: RewardRecord
    belief_snapshot: dict

    def to_dict(self) -> dict:
        return {
            "type": "turn",
            "t": self.reward.turn,
            "question": {
                "text": self.question.text,
                "targets": list(self.question.targets),
                "origin": self.question.origin,
            },
            "answer": {
                "text": self.answer.text,
                "revealed": {k: list(v) for k, v in self.answer.revealed.items()},
                "noise_spans": list(self.answer.noise_spans),
            },
            "evidence": {
                "constraints": {k: list(v) for k, v in self.evidence.constraints.items()},
                "provenance": self.evidence.provenance,
            },
            "reward": self.reward.to_dict(),
            "belief": self.belief_snapshot,
        }


@dataclass
class Transcript:
    """Full record of one dialogue."""

    dialogue_id: str
    schema: Schema
    persona: OraclePersona
    policy_id: str
    seed: int
    initial_request: str
    initial_entropy_bits: float
    turns: list = field(default_factory=list)
    final_entropy_bits: float = 0.0
    stop_reason: str = "entropy-threshold"
    final_assignment: dict = field(default_factory=dict)
    unresolved: dict = field(default_factory=dict)  # attr_id -> {best_guess, p}

    @property
    def total_ig_bits(self) -> float:
        return sum(turn.reward.ig_bits for turn in self.turns)

    @property
    def n_turns(self) -> int:
        return len(self.turns)

    @property
    def subset_evidence_turns(self) -> int:
        return sum(
            1
            for turn in self.turns
            if any(len(v) > 1 for v in turn.evidence.constraints.values())
        )

    def reward_sequence(self) -> list:
        return [turn.reward.ig_bits for turn in self.turns]

    def header_dict(self) -> dict:
        return {
            "type": "header",
            "dialogue_id": self.dialogue_id,
            "schema": self.schema.name,
            "initial_request": self.initial_request,
            "persona": self.persona.to_dict(),
            "policy_id": self.policy_id,
            "seed": self.seed,
            "initial_entropy_bits": self.initial_entropy_bits,
        }

    def footer_dict(self) -> dict:
        return {
            "type": "footer",
            "dialogue_id": self.dialogue_id,
            "turns": self.n_turns,
            "stop_reason": self.stop_reason,
            "total_ig_bits": self.total_ig_bits,
            "final_entropy_bits": self.final_entropy_bits,
            "final_specification": dict(self.final_assignment),
            "unresolved": {k: dict(v) for k, v in self.unresolved.items()},
            "subset_evidence_turns": self.subset_evidence_turns,
        }


@dataclass(frozen=True)
class DialogueConfig:
    """Stopping rule and reproducibility knobs for one dialogue."""

    entropy_threshold_bits: float = 0.01
    max_turns: Optional[int] = 30
    seed: int = 0
    parser_mode: str = "structured"
    lenient: bool = False
    dialogue_id: str = ""
    gateway: object = None


def run_dialogue(
    policy: QuestionSelector,
    persona: OraclePersona,
    world_model: WorldModel,
    ground_truth: Specification,
    config: DialogueConfig = DialogueConfig(),
) -> Transcript:
    """Run one question-answer loop until the entropy threshold or turn budget.

    Zero-information turns never abort the dialogue; the loop only stops on
    the entropy threshold, the turn budget, or the policy declining to ask.
    """
    schema = world_model.schema
    schema.validate_specification(ground_truth)
    if config.max_turns is not None and config.max_turns < 1:
        raise SchemaError("turn budget must be >= 1")

    belief = init_belief(world_model)
    transcript = Transcript(
        dialogue_id=config.dialogue_id or f"d-{config.seed}",
        schema=schema,
        persona=persona,
        policy_id=getattr(policy, "policy_id", "unknown"),
        seed=config.seed,
        initial_request=INITIAL_REQUEST,
        initial_entropy_bits=belief.total_entropy_bits,
    )

    stop_reason = "entropy-threshold"
    t = 0
    while belief.total_entropy_bits > config.entropy_threshold_bits:
        if config.max_turns is not None and t >= config.max_turns:
            stop_reason = "turn-budget"
            break
        t += 1
        question = policy.propose(belief, spawn(config.seed, "question", t))
        if question is None:
            stop_reason = "policy-stop"
            break
        answer = oracle_answer(
            schema, persona, ground_truth, question, spawn(config.seed, "answer", t)
        )
        evidence = parse_answer(
            config.parser_mode, question, answer, schema, config.gateway
        )
        belief, record = apply_evidence(belief, evidence, lenient=config.lenient)
        transcript.turns.append(
            DialogueTurn(
                question=question,
                answer=answer,
                evidence=evidence,
                reward=record,
                belief_snapshot=belief.to_snapshot(),
            )
        )

    transcript.stop_reason = stop_reason
    transcript.final_entropy_bits = belief.total_entropy_bits
    final_assignment = {}
    unresolved = {}
    for attr in schema.attributes:
        if belief.is_resolved(attr.id):
            final_assignment[attr.id] = belief.resolved_value(attr.id)
        else:
            guess, p = belief.best_guess(attr.id)
            final_assignment[attr.id] = guess
            unresolved[attr.id] = {"best_guess": guess, "p": p}
    transcript.final_assignment = final_assignment
    transcript.unresolved = unresolved
    return transcript


def consolidate_description(
    transcript: Transcript, mode: str = "structured", gateway=None
) -> str:
    """Render the final consolidated description of the elicited specification.

    Structured mode is a deterministic template; gateway mode asks the text
    generator for prose and appends the structured block verbatim, falling
    back to the structured block alone if the gateway fails.
    """
    schema = transcript.schema
    lines = ["Diagram specification:"]
    for attr in schema.attributes:
        value = transcript.final_assignment.get(attr.id)
        if attr.id in transcript.unresolved:
            info = transcript.unresolved[attr.id]
            lines.append(
                f"- {attr.label}: unspecified (best guess: {info['best_guess']}, "
                f"p={info['p']:.3f})"
            )
        else:
            lines.append(f"- {attr.label}: {value}")
    structured = "\n".join(lines)
    if mode == "structured":
        return structured
    if mode == "gateway":
        if gateway is None:
            raise GatewayError("gateway consolidation requires a client")
        try:
            prose = gateway.consolidate(structured)
            return prose + "\n\n" + structured
        except GatewayError:
            return structured
    raise SchemaError(f"unknown consolidation mode {mode!r}")


def save_transcripts(transcripts, path) -> None:
    """Write transcripts as JSONL: header, one line per turn, footer."""
    with open(path, "w", encoding="utf-8") as handle:
        for transcript in transcripts:
            handle.write(json.dumps(transcript.header_dict()) + "\n")
            for turn in transcript.turns:
                handle.write(json.dumps(turn.to_dict()) + "\n")
            handle.write(json.dumps(transcript.footer_dict()) + "\n")


def load_transcript_records(path) -> list:
    """Read back the raw JSONL records (dicts) of a transcript file."""
    records = []
    with open(path, "r", encoding="utf-8") as handle:
        for line in handle:
            line = line.strip()
            if line:
                records.append(json.loads(line))
    return records
