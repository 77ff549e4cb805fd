"""Process and outcome metrics: turn counts, IG dynamics, win rates.

Run summaries aggregate transcripts into mean turns, mean total
information gain (bits) and cumulative-IG checkpoints; win rates implement
the three tie-handling protocols over externally produced pairwise
judgments.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

from inquest.dialogue import DialogueConfig, Transcript, run_dialogue
from inquest.errors import SchemaError
from inquest.rng import derive_seed

DEFAULT_CHECKPOINTS = (1, 5, 10, 15, 20)

OUTCOMES = ("win", "tie", "loss")
PROTOCOLS = ("win", "wt_half", "wt_full")


@dataclass
class RunSummary:
    """Aggregate metrics for one (policy, persona) evaluation cell."""

    policy_id: str
    persona: str
    n_dialogues: int
    mean_turns: float
    mean_total_ig: float
    mean_initial_entropy: float
    ig_at_turn: dict  # checkpoint -> mean cumulative bits
    stop_reasons: dict = field(default_factory=dict)
    subset_evidence_turns: int = 0

    def to_dict(self) -> dict:
        return {
            "policy_id": self.policy_id,
            "persona": self.persona,
            "n_dialogues": self.n_dialogues,
            "mean_turns": self.mean_turns,
            "mean_total_ig_bits": self.mean_total_ig,
            "mean_initial_entropy_bits": self.mean_initial_entropy,
            "ig_at_turn": {str(k): v for k, v in self.ig_at_turn.items()},
            "stop_reasons": dict(self.stop_reasons),
            "subset_evidence_turns": self.subset_evidence_turns,
        }


def cumulative_ig_at(transcript: Transcript, checkpoint: int) -> float:
    """Cumulative IG after `checkpoint` turns, carried flat past dialogue end."""
    total = 0.0
    for turn in transcript.turns[:checkpoint]:
        total += turn.reward.ig_bits
    return total


def summarize_runs(
    transcripts: Sequence[Transcript],
    checkpoints: Sequence[int] = DEFAULT_CHECKPOINTS,
) -> RunSummary:
    """Aggregate transcripts from a single (policy, persona) cell."""
    if not transcripts:
        raise SchemaError("no transcripts to summarize")
    n = len(transcripts)
    mean_turns = sum(t.n_turns for t in transcripts) / n
    mean_total = sum(t.total_ig_bits for t in transcripts) / n
    mean_initial = sum(t.initial_entropy_bits for t in transcripts) / n
    ig_at_turn = {
        c: sum(cumulative_ig_at(t, c) for t in transcripts) / n for c in checkpoints
    }
    stop_reasons = {}
    for t in transcripts:
        stop_reasons[t.stop_reason] = stop_reasons.get(t.stop_reason, 0) + 1
    return RunSummary(
        policy_id=transcripts[0].policy_id,
        persona=transcripts[0].persona.kind,
        n_dialogues=n,
        mean_turns=mean_turns,
        mean_total_ig=mean_total,
        mean_initial_entropy=mean_initial,
        ig_at_turn=ig_at_turn,
        stop_reasons={k: stop_reasons[k] for k in sorted(stop_reasons)},
        subset_evidence_turns=sum(t.subset_evidence_turns for t in transcripts),
    )


def render_summary_table(summaries: Sequence[RunSummary]) -> str:
    """Aligned text table: turns, total IG and the IG-at-turn checkpoints."""
    checkpoints = sorted({c for s in summaries for c in s.ig_at_turn})
    headers = ["Policy", "Persona", "Turns", "Total IG (bits)"] + [
        f"Turn {c}" for c in checkpoints
    ]
    rows = []
    for s in summaries:
        rows.append(
            [
                s.policy_id,
                s.persona,
                f"{s.mean_turns:.1f}",
                f"{s.mean_total_ig:.2f}",
            ]
            + [f"{s.ig_at_turn[c]:.2f}" for c in checkpoints]
        )
    widths = [
        max(len(headers[j]), *(len(row[j]) for row in rows)) for j in range(len(headers))
    ]
    lines = [
        "  ".join(h.ljust(widths[j]) for j, h in enumerate(headers)),
        "  ".join("-" * widths[j] for j in range(len(headers))),
    ]
    for row in rows:
        lines.append("  ".join(cell.ljust(widths[j]) for j, cell in enumerate(row)))
    return "\n".join(lines)


def write_ig_curves(summaries: Sequence[RunSummary], path) -> None:
    """Plot-ready CSV of mean cumulative IG against the turn checkpoints."""
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("policy,persona,turn,mean_cumulative_ig_bits\n")
        for s in summaries:
            for c in sorted(s.ig_at_turn):
                handle.write(f"{s.policy_id},{s.persona},{c},{s.ig_at_turn[c]!r}\n")


@dataclass(frozen=True)
class Judgment:
    item_id: str
    judge_id: str
    renderer_id: str
    outcome: str

    def __post_init__(self):
        if self.outcome not in OUTCOMES:
            raise SchemaError(f"unknown judgment outcome {self.outcome!r}")


@dataclass(frozen=True)
class JudgmentSet:
    records: tuple

    def __post_init__(self):
        object.__setattr__(self, "records", tuple(self.records))

    def counts(self) -> tuple[int, int, int]:
        wins = sum(1 for r in self.records if r.outcome == "win")
        ties = sum(1 for r in self.records if r.outcome == "tie")
        losses = sum(1 for r in self.records if r.outcome == "loss")
        return wins, ties, losses


def win_rate(judgments: JudgmentSet, protocol: str) -> float:
    """Win rate under one of the three tie-handling protocols.

    win: ties contribute nothing; wt_half: ties contribute 0.5; wt_full:
    ties contribute 1. The denominator always counts every judgment.
    wt_half is computed as the exact midpoint of the other two, which
    equals (wins + ties/2) / n.
    """
    wins, ties, losses = judgments.counts()
    n = wins + ties + losses
    if n == 0:
        raise SchemaError("empty judgment set")
    if protocol == "win":
        return wins / n
    if protocol == "wt_full":
        return (wins + ties) / n
    if protocol == "wt_half":
        return ((wins / n) + ((wins + ties) / n)) / 2.0
    raise SchemaError(f"unknown protocol {protocol!r} (expected {PROTOCOLS})")


def load_judgments(path) -> JudgmentSet:
    """Read a judgments CSV: item_id,judge_id,renderer_id,outcome."""
    records = []
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        required = {"item_id", "judge_id", "renderer_id", "outcome"}
        if reader.fieldnames is None or not required.issubset(reader.fieldnames):
            raise SchemaError(
                f"judgments CSV must have columns {sorted(required)}"
            )
        for row in reader:
            records.append(
                Judgment(
                    item_id=row["item_id"],
                    judge_id=row["judge_id"],
                    renderer_id=row["renderer_id"],
                    outcome=row["outcome"],
                )
            )
    return JudgmentSet(records=tuple(records))


def run_evaluation(
    policy,
    persona,
    world_model,
    ground_truths,
    seed: int = 0,
    entropy_threshold: float = 0.01,
    max_turns: Optional[int] = 30,
    checkpoints: Sequence[int] = DEFAULT_CHECKPOINTS,
    lenient: bool = False,
) -> tuple[RunSummary, list]:
    """Run one dialogue per ground truth and summarize the cell."""
    transcripts = []
    for idx, truth in enumerate(ground_truths):
        config = DialogueConfig(
            entropy_threshold_bits=entropy_threshold,
            max_turns=max_turns,
            seed=derive_seed(seed, "eval", idx),
            dialogue_id=f"eval-{idx:05d}",
            lenient=lenient,
        )
        transcripts.append(run_dialogue(policy, persona, world_model, truth, config))
    return summarize_runs(transcripts, checkpoints), transcripts


@dataclass
class PersonaComparison:
    """Per-persona summaries over shared ground truths and seeds."""

    summaries: dict  # persona kind -> RunSummary
    baseline: str
    total_ig_deltas: dict  # persona kind -> mean total IG - baseline's
    mean_turn_deltas: dict
    max_total_ig_spread: float

    def to_dict(self) -> dict:
        return {
            "baseline": self.baseline,
            "summaries": {k: s.to_dict() for k, s in self.summaries.items()},
            "total_ig_deltas": dict(self.total_ig_deltas),
            "mean_turn_deltas": dict(self.mean_turn_deltas),
            "max_total_ig_spread": self.max_total_ig_spread,
        }


def compare_personas(
    policy,
    personas,
    world_model,
    ground_truths,
    seed: int = 0,
    entropy_threshold: float = 0.0,
    max_turns: Optional[int] = None,
    checkpoints: Sequence[int] = DEFAULT_CHECKPOINTS,
) -> PersonaComparison:
    """Evaluate one policy against several personas on paired seeds.

    With an unbounded budget and a zero entropy threshold every persona
    fully resolves the same ground truths, so mean total IG must agree
    across personas; the spread is reported for that parity check.
    """
    if not personas:
        raise SchemaError("no personas to compare")
    summaries = {}
    for persona in personas:
        summary, _ = run_evaluation(
            policy,
            persona,
            world_model,
            ground_truths,
            seed=seed,
            entropy_threshold=entropy_threshold,
            max_turns=max_turns,
            checkpoints=checkpoints,
        )
        summaries[persona.kind] = summary
    baseline = personas[0].kind
    base_ig = summaries[baseline].mean_total_ig
    base_turns = summaries[baseline].mean_turns
    igs = [s.mean_total_ig for s in summaries.values()]
    return PersonaComparison(
        summaries=summaries,
        baseline=baseline,
        total_ig_deltas={k: s.mean_total_ig - base_ig for k, s in summaries.items()},
        mean_turn_deltas={k: s.mean_turns - base_turns for k, s in summaries.items()},
        max_total_ig_spread=max(igs) - min(igs),
    )


def write_report(summaries: Sequence[RunSummary], path_json, path_text=None) -> None:
    payload = {"summaries": [s.to_dict() for s in summaries]}
    with open(path_json, "w", encoding="utf-8") as handle:
        handle.write(json.dumps(payload, indent=2) + "\n")
    if path_text is not None:
        with open(path_text, "w", encoding="utf-8") as handle:
            handle.write(render_summary_table(summaries) + "\n")
