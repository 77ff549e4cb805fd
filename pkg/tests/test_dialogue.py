import json

import numpy as np
import pytest

from inquest.dialogue import (
    DialogueConfig,
    GreedyEntropySelector,
    OraclePersona,
    Question,
    consolidate_description,
    load_transcript_records,
    oracle_answer,
    parse_answer,
    run_dialogue,
    save_transcripts,
    single_attribute_question,
)
from inquest.errors import GatewayError, SchemaError
from inquest.rng import spawn
from inquest.schema import Specification

from conftest import make_schema, make_world_model, uniform_world_model


def truth_of(world_model, values):
    assignment = {
        attr.id: values[i] for i, attr in enumerate(world_model.schema.attributes)
    }
    return Specification(assignment=assignment)


# -------------------------------------------------------------------- oracles


def test_expert_reveals_exact_values():
    schema = make_schema([3, 4])
    persona = OraclePersona(kind="expert")
    truth = Specification(assignment={"a0": "v2", "a1": "v1"})
    question = Question(targets=("a0",), text="Which layout?")
    answer = oracle_answer(schema, persona, truth, question, spawn(0, "x"))
    assert answer.revealed == {"a0": ("v2",)}
    assert "v2" in answer.text
    assert answer.noise_spans == ()


def test_novice_full_reveal_fraction_gives_subsets():
    schema = make_schema([4])
    persona = OraclePersona(kind="novice", reveal_fraction=1.0, subset_coarseness=2)
    truth = Specification(assignment={"a0": "v3"})
    question = single_attribute_question(schema, "a0")
    for seed in range(20):
        answer = oracle_answer(schema, persona, truth, question, spawn(seed, "n"))
        subset = answer.revealed["a0"]
        assert len(subset) == 2
        assert "v3" in subset


def test_novice_binary_domain_degrades_to_singletons():
    schema = make_schema([2])
    persona = OraclePersona(kind="novice", reveal_fraction=1.0, subset_coarseness=2)
    truth = Specification(assignment={"a0": "v1"})
    question = single_attribute_question(schema, "a0")
    answer = oracle_answer(schema, persona, truth, question, spawn(1, "n"))
    assert answer.revealed == {"a0": ("v1",)}


def test_noisy_answers_parse_like_expert_answers():
    schema = make_schema([3, 4])
    truth = Specification(assignment={"a0": "v0", "a1": "v2"})
    question = Question(targets=("a0", "a1"), text="Tell me both?")
    noisy = oracle_answer(
        schema,
        OraclePersona(kind="noisy", noise_rate=1.0),
        truth,
        question,
        spawn(7, "n"),
    )
    expert = oracle_answer(
        schema, OraclePersona(kind="expert"), truth, question, spawn(7, "n")
    )
    assert len(noisy.noise_spans) >= 1
    assert parse_answer("structured", question, noisy).constraints == (
        parse_answer("structured", question, expert).constraints
    )


def test_unknown_target_attribute_rejected():
    schema = make_schema([2])
    question = Question(targets=("missing",), text="?")
    with pytest.raises(SchemaError, match="unknown attribute"):
        oracle_answer(
            schema,
            OraclePersona(kind="expert"),
            Specification(assignment={"a0": "v0"}),
            question,
            spawn(0, "x"),
        )


def test_persona_validation():
    with pytest.raises(SchemaError):
        OraclePersona(kind="wizard")
    with pytest.raises(SchemaError):
        OraclePersona(kind="novice", reveal_fraction=1.5)


# -------------------------------------------------------------------- parsing


def test_parse_structured_passthrough():
    question = Question(targets=("color_scheme",), text="?")
    from inquest.dialogue import Answer

    answer = Answer(text="Blue.", revealed={"color_scheme": ("blue",)})
    evidence = parse_answer("structured", question, answer)
    assert evidence.constraints == {"color_scheme": ("blue",)}
    assert evidence.provenance == "oracle"


def test_parse_noise_only_answer_is_empty():
    question = Question(targets=(), text="How was your weekend?")
    from inquest.dialogue import Answer

    answer = Answer(text="Lovely, thanks!", revealed={}, noise_spans=("Lovely, thanks!",))
    evidence = parse_answer("structured", question, answer)
    assert evidence.constraints == {}


def test_parse_subset_reveal_passthrough():
    question = Question(targets=("a0",), text="?")
    from inquest.dialogue import Answer

    answer = Answer(text="grid or radial", revealed={"a0": ("grid", "radial")})
    assert parse_answer("structured", question, answer).constraints == {
        "a0": ("grid", "radial")
    }


# --------------------------------------------------------------- run_dialogue


def five_binary_world():
    return uniform_world_model([2, 2, 2, 2, 2])


def test_greedy_expert_resolves_one_bit_per_turn():
    wm = five_binary_world()
    truth = truth_of(wm, ["v0", "v1", "v0", "v1", "v0"])
    transcript = run_dialogue(
        GreedyEntropySelector(wm.schema),
        OraclePersona(kind="expert"),
        wm,
        truth,
        DialogueConfig(entropy_threshold_bits=0.0, seed=5),
    )
    assert transcript.n_turns == 5
    assert transcript.total_ig_bits == pytest.approx(5.0, abs=1e-9)
    assert transcript.stop_reason == "entropy-threshold"
    assert transcript.final_assignment == truth.assignment
    assert transcript.unresolved == {}


def test_turn_budget_truncates():
    wm = five_binary_world()
    truth = truth_of(wm, ["v0", "v1", "v0", "v1", "v0"])
    transcript = run_dialogue(
        GreedyEntropySelector(wm.schema),
        OraclePersona(kind="expert"),
        wm,
        truth,
        DialogueConfig(entropy_threshold_bits=0.0, max_turns=3, seed=5),
    )
    assert transcript.stop_reason == "turn-budget"
    assert transcript.n_turns == 3
    assert transcript.total_ig_bits == pytest.approx(3.0, abs=1e-9)
    assert len(transcript.unresolved) == 2


def test_novice_turns_match_geometric_expectation():
    # With singleton reveals at probability f per question, questions per
    # attribute are Geometric(f): expected turns = 5 / f = 10.
    wm = five_binary_world()
    truth = truth_of(wm, ["v1", "v0", "v0", "v1", "v1"])
    persona = OraclePersona(kind="novice", reveal_fraction=0.5)
    selector = GreedyEntropySelector(wm.schema)
    turns = []
    for seed in range(1000):
        transcript = run_dialogue(
            selector,
            persona,
            wm,
            truth,
            DialogueConfig(entropy_threshold_bits=0.0, max_turns=None, seed=seed),
        )
        assert transcript.total_ig_bits == pytest.approx(5.0, abs=1e-6)
        turns.append(transcript.n_turns)
    mean_turns = sum(turns) / len(turns)
    assert mean_turns > 5
    assert abs(mean_turns - 10.0) < 0.4


def test_transcript_conservation_and_determinism(demo):
    schema, corpus, wm = demo
    persona = OraclePersona(kind="novice", reveal_fraction=0.7)
    selector = GreedyEntropySelector(schema)
    config = DialogueConfig(seed=77, max_turns=40)
    a = run_dialogue(selector, persona, wm, corpus[3], config)
    b = run_dialogue(selector, persona, wm, corpus[3], config)
    assert json.dumps([t.to_dict() for t in a.turns]) == json.dumps(
        [t.to_dict() for t in b.turns]
    )
    assert a.total_ig_bits == pytest.approx(
        a.initial_entropy_bits - a.final_entropy_bits, abs=1e-6
    )


def test_noise_immunity_paired_seeds(demo):
    schema, corpus, wm = demo
    selector = GreedyEntropySelector(schema)
    config = DialogueConfig(seed=13)
    expert = run_dialogue(
        selector, OraclePersona(kind="expert"), wm, corpus[1], config
    )
    noisy = run_dialogue(
        selector, OraclePersona(kind="noisy", noise_rate=1.0), wm, corpus[1], config
    )
    assert expert.reward_sequence() == noisy.reward_sequence()
    assert [t.evidence.constraints for t in expert.turns] == [
        t.evidence.constraints for t in noisy.turns
    ]
    assert any(t.answer.noise_spans for t in noisy.turns)
    # stripping the noise spans leaves the parsed evidence untouched
    for turn in noisy.turns:
        stripped = parse_answer("structured", turn.question, turn.answer)
        assert stripped.constraints == turn.evidence.constraints


def test_novice_completeness_matches_expert_total(demo):
    schema, corpus, wm = demo
    selector = GreedyEntropySelector(schema)
    expert = run_dialogue(
        selector,
        OraclePersona(kind="expert"),
        wm,
        corpus[2],
        DialogueConfig(entropy_threshold_bits=0.0, max_turns=None, seed=21),
    )
    novice = run_dialogue(
        selector,
        OraclePersona(kind="novice", reveal_fraction=0.7),
        wm,
        corpus[2],
        DialogueConfig(entropy_threshold_bits=0.0, max_turns=None, seed=21),
    )
    assert novice.n_turns > expert.n_turns
    assert novice.total_ig_bits == pytest.approx(expert.total_ig_bits, abs=1e-6)
    assert novice.subset_evidence_turns > 0
    assert expert.subset_evidence_turns == 0


def test_zero_ig_turns_do_not_abort():
    wm = five_binary_world()
    truth = truth_of(wm, ["v0", "v0", "v0", "v0", "v0"])
    persona = OraclePersona(kind="novice", reveal_fraction=0.3)
    transcript = run_dialogue(
        GreedyEntropySelector(wm.schema),
        persona,
        wm,
        truth,
        DialogueConfig(entropy_threshold_bits=0.0, max_turns=None, seed=3),
    )
    assert any(t.reward.ig_bits == 0.0 for t in transcript.turns)
    assert transcript.final_entropy_bits == 0.0


def test_policy_stop_reason():
    wm = five_binary_world()

    class Mute:
        policy_id = "mute"

        def propose(self, belief, rng):
            return None

    transcript = run_dialogue(
        Mute(),
        OraclePersona(kind="expert"),
        wm,
        truth_of(wm, ["v0"] * 5),
        DialogueConfig(seed=1),
    )
    assert transcript.stop_reason == "policy-stop"
    assert transcript.n_turns == 0
    assert len(transcript.unresolved) == 5


# -------------------------------------------------------------- consolidation


def test_consolidation_lists_every_resolved_value():
    wm = five_binary_world()
    truth = truth_of(wm, ["v0", "v1", "v0", "v1", "v0"])
    transcript = run_dialogue(
        GreedyEntropySelector(wm.schema),
        OraclePersona(kind="expert"),
        wm,
        truth,
        DialogueConfig(entropy_threshold_bits=0.0, seed=5),
    )
    text = consolidate_description(transcript)
    for attr in wm.schema.attributes:
        assert f"{attr.label}: {truth.assignment[attr.id]}" in text
    assert "unspecified" not in text


def test_consolidation_flags_unresolved():
    wm = five_binary_world()
    truth = truth_of(wm, ["v0", "v1", "v0", "v1", "v0"])
    transcript = run_dialogue(
        GreedyEntropySelector(wm.schema),
        OraclePersona(kind="expert"),
        wm,
        truth,
        DialogueConfig(entropy_threshold_bits=0.0, max_turns=4, seed=5),
    )
    text = consolidate_description(transcript)
    assert text.count("unspecified (best guess: ") == 1
    assert "p=0.500" in text


def test_consolidation_of_empty_transcript_flags_everything():
    wm = five_binary_world()

    class Mute:
        policy_id = "mute"

        def propose(self, belief, rng):
            return None

    transcript = run_dialogue(
        Mute(), OraclePersona(kind="expert"), wm, truth_of(wm, ["v0"] * 5),
        DialogueConfig(seed=2),
    )
    text = consolidate_description(transcript)
    assert text.count("unspecified (best guess: ") == 5


def test_consolidation_gateway_mode_appends_structured_block():
    wm = five_binary_world()
    truth = truth_of(wm, ["v0", "v1", "v0", "v1", "v0"])
    transcript = run_dialogue(
        GreedyEntropySelector(wm.schema),
        OraclePersona(kind="expert"),
        wm,
        truth,
        DialogueConfig(entropy_threshold_bits=0.0, seed=5),
    )

    class CannedGateway:
        def consolidate(self, structured_block):
            return "A crisp five-part diagram."

    text = consolidate_description(transcript, mode="gateway", gateway=CannedGateway())
    assert text.startswith("A crisp five-part diagram.")
    assert "Diagram specification:" in text

    class FailingGateway:
        def consolidate(self, structured_block):
            raise GatewayError("down")

    fallback = consolidate_description(
        transcript, mode="gateway", gateway=FailingGateway()
    )
    assert fallback.startswith("Diagram specification:")


# ----------------------------------------------------------------- transcripts


def test_transcript_jsonl_roundtrip(tmp_path, demo):
    schema, corpus, wm = demo
    selector = GreedyEntropySelector(schema)
    transcripts = [
        run_dialogue(
            selector,
            OraclePersona(kind="expert"),
            wm,
            corpus[i],
            DialogueConfig(seed=i, dialogue_id=f"d{i}"),
        )
        for i in range(3)
    ]
    path = tmp_path / "transcripts.jsonl"
    save_transcripts(transcripts, path)
    records = load_transcript_records(path)
    headers = [r for r in records if r["type"] == "header"]
    footers = [r for r in records if r["type"] == "footer"]
    turns = [r for r in records if r["type"] == "turn"]
    assert len(headers) == len(footers) == 3
    assert len(turns) == sum(t.n_turns for t in transcripts)
    assert headers[0]["initial_request"] == "I want to create a scientific diagram."
    for footer, transcript in zip(footers, transcripts):
        assert footer["total_ig_bits"] == pytest.approx(
            transcript.total_ig_bits, abs=1e-9
        )
