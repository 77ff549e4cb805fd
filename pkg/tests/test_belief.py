import itertools
import logging
import math
from functools import reduce

import numpy as np
import pytest

from inquest.belief import (
    BeliefState,
    Evidence,
    FullReveal,
    SubsetReveal,
    apply_evidence,
    expected_information_gain,
    init_belief,
    reward_for_evidence,
    total_entropy,
)
from inquest.errors import ContradictionError, EnumerationLimitError, SchemaError
from inquest.dialogue import OraclePersona, oracle_answer, parse_answer, single_attribute_question
from inquest.rng import spawn
from inquest.schema import Specification

from conftest import (
    make_schema,
    make_world_model,
    oracle_style_evidence,
    random_belief_vectors,
    random_descending_world_model,
    sample_truth,
    uniform_world_model,
)


def np_entropy(vec):
    """Independent entropy oracle (numpy, bits)."""
    p = np.asarray(vec, dtype=float)
    p = p[p > 1e-12]
    return float(-(p * np.log2(p)).sum())


def joint_entropy_oracle(belief):
    """Entropy of the explicit joint distribution, built by outer products."""
    arrays = [
        np.asarray(belief.distributions[a.id], dtype=float)
        for a in belief.schema.attributes
    ]
    joint = reduce(np.multiply.outer, arrays).ravel()
    return np_entropy(joint)


# ---------------------------------------------------------------- init/entropy


def test_init_belief_uniform_binary_total():
    belief = init_belief(uniform_world_model([2, 2, 2]))
    assert total_entropy(belief) == pytest.approx(3.0, abs=1e-12)
    assert belief.t == 0
    assert not belief.resolved


def test_init_belief_skewed_marginal():
    schema = make_schema([2])
    wm = make_world_model(schema, {"a0": [0.75, 0.25]})
    belief = init_belief(wm)
    assert belief.entropy_bits("a0") == pytest.approx(0.8112781244591328, abs=1e-9)


def test_init_belief_degenerate_prior_is_resolved():
    schema = make_schema([2])
    wm = make_world_model(schema, {"a0": [1.0, 0.0]})
    belief = init_belief(wm)
    assert belief.is_resolved("a0")
    assert total_entropy(belief) == 0.0
    assert belief.resolved_value("a0") == "v0"


def test_total_entropy_examples():
    belief = init_belief(uniform_world_model([4, 4]))
    assert total_entropy(belief) == pytest.approx(4.0, abs=1e-12)
    schema = make_schema([3])
    wm = make_world_model(schema, {"a0": [0.5, 0.25, 0.25]})
    assert total_entropy(init_belief(wm)) == pytest.approx(1.5, abs=1e-12)


def test_total_entropy_all_resolved_is_zero():
    schema = make_schema([2, 3])
    wm = make_world_model(schema, {"a0": [1.0, 0.0], "a1": [0.0, 1.0, 0.0]})
    assert total_entropy(init_belief(wm)) == 0.0


def test_entropy_decomposition_against_explicit_joint():
    rng = np.random.default_rng(5)
    for _ in range(30):
        sizes = [int(rng.integers(2, 4)) for _ in range(int(rng.integers(2, 4)))]
        schema = make_schema(sizes)
        vectors = random_belief_vectors(rng, schema)
        belief = init_belief(make_world_model(schema, vectors))
        assert total_entropy(belief) == pytest.approx(
            joint_entropy_oracle(belief), abs=1e-9
        )


# ------------------------------------------------------------- apply_evidence


def test_singleton_on_uniform_binary_yields_one_bit():
    belief = init_belief(uniform_world_model([2]))
    new, record = apply_evidence(belief, Evidence(constraints={"a0": ("v1",)}))
    assert record.ig_bits == pytest.approx(1.0, abs=1e-12)
    assert record.turn == 1
    assert new.t == 1
    assert new.is_resolved("a0")
    assert record.resolved_attributes == ("a0",)
    assert new.distribution("a0") == (0.0, 1.0)


def test_reasserting_resolved_value_is_zero_gain():
    belief = init_belief(uniform_world_model([2]))
    belief, _ = apply_evidence(belief, Evidence(constraints={"a0": ("v1",)}))
    belief, record = apply_evidence(belief, Evidence(constraints={"a0": ("v1",)}))
    assert record.ig_bits == 0.0
    assert record.resolved_attributes == ()


def test_subset_on_uniform_four_value():
    belief = init_belief(uniform_world_model([4]))
    new, record = apply_evidence(
        belief, Evidence(constraints={"a0": ("v0", "v2")})
    )
    assert record.ig_bits == pytest.approx(1.0, abs=1e-12)
    assert new.distribution("a0") == pytest.approx((0.5, 0.0, 0.5, 0.0))
    assert not new.is_resolved("a0")


def test_two_attributes_in_one_turn_add_up():
    belief = init_belief(uniform_world_model([4, 4]))
    new, record = apply_evidence(
        belief, Evidence(constraints={"a0": ("v1",), "a1": ("v3",)})
    )
    assert record.ig_bits == pytest.approx(4.0, abs=1e-12)
    assert set(record.resolved_attributes) == {"a0", "a1"}
    assert record.per_attribute_bits["a0"] == pytest.approx(2.0, abs=1e-12)


def test_unknown_attribute_and_value_rejected():
    belief = init_belief(uniform_world_model([2]))
    with pytest.raises(SchemaError, match="unknown attribute"):
        apply_evidence(belief, Evidence(constraints={"zzz": ("v0",)}))
    with pytest.raises(SchemaError, match="unknown value"):
        apply_evidence(belief, Evidence(constraints={"a0": ("nope",)}))


def test_strict_contradiction_raises():
    belief = init_belief(uniform_world_model([3]))
    belief, _ = apply_evidence(belief, Evidence(constraints={"a0": ("v0",)}))
    with pytest.raises(ContradictionError):
        apply_evidence(belief, Evidence(constraints={"a0": ("v1", "v2")}))


def test_lenient_contradiction_replaces_with_zero_gain(caplog):
    belief = init_belief(uniform_world_model([3]))
    belief, _ = apply_evidence(belief, Evidence(constraints={"a0": ("v0",)}))
    with caplog.at_level(logging.WARNING):
        new, record = apply_evidence(
            belief, Evidence(constraints={"a0": ("v2",)}), lenient=True
        )
    assert "contradictory evidence" in caplog.text
    assert record.ig_bits == 0.0
    assert new.resolved_value("a0") == "v2"


def test_empty_evidence_is_zero_gain_turn():
    belief = init_belief(uniform_world_model([2, 2]))
    new, record = apply_evidence(belief, Evidence(constraints={}))
    assert record.ig_bits == 0.0
    assert new.t == 1
    assert new.distributions == belief.distributions


def test_evidence_validation():
    with pytest.raises(SchemaError, match="empty constraint"):
        Evidence(constraints={"a0": ()})
    with pytest.raises(SchemaError, match="provenance"):
        Evidence(constraints={}, provenance="alien")


# ------------------------------------------------- reward equivalence property


def test_reward_equivalence_and_nonnegativity_on_chains():
    rng = np.random.default_rng(99)
    applications = 0
    while applications < 300:
        wm = random_descending_world_model(rng)
        belief = init_belief(wm)
        truth = sample_truth(rng, belief)
        for _ in range(3):
            evidence = oracle_style_evidence(rng, wm.schema, belief, truth)
            before = {
                a.id: np_entropy(belief.distributions[a.id])
                for a in wm.schema.attributes
            }
            new, record = apply_evidence(belief, evidence)
            after = {
                a.id: np_entropy(new.distributions[a.id])
                for a in wm.schema.attributes
            }
            route_total = sum(before.values()) - sum(after.values())
            route_constrained = sum(
                before[a] - after[a] for a in evidence.constraints
            )
            assert abs(route_total - route_constrained) < 1e-9
            assert record.ig_bits == pytest.approx(route_constrained, abs=1e-9)
            assert record.ig_bits >= 0.0
            applications += 1
            belief = new


def test_zero_information_constraints_give_exact_zero():
    belief = init_belief(uniform_world_model([2, 4]))
    belief, _ = apply_evidence(belief, Evidence(constraints={"a0": ("v0",)}))
    assert reward_for_evidence(belief, Evidence(constraints={"a0": ("v0",)})) == 0.0
    assert reward_for_evidence(belief, Evidence(constraints={})) == 0.0
    # full-domain subset carries no information either
    assert reward_for_evidence(
        belief, Evidence(constraints={"a1": ("v0", "v1", "v2", "v3")})
    ) == pytest.approx(0.0, abs=1e-12)


# --------------------------------------------------- expected information gain


def test_expected_ig_full_reveal_equals_marginal_entropy():
    belief = init_belief(uniform_world_model([2]))
    assert expected_information_gain(belief, ["a0"], FullReveal()) == pytest.approx(
        1.0, abs=1e-12
    )
    schema = make_schema([2])
    wm = make_world_model(schema, {"a0": [0.75, 0.25]})
    assert expected_information_gain(
        init_belief(wm), ["a0"], FullReveal()
    ) == pytest.approx(0.8112781244591328, abs=1e-9)


def test_expected_ig_unknown_target_rejected():
    belief = init_belief(uniform_world_model([2]))
    with pytest.raises(SchemaError):
        expected_information_gain(belief, ["nope"], FullReveal())


def test_enumeration_cap_guard():
    belief = init_belief(uniform_world_model([4, 4, 4]))
    model = FullReveal()
    with pytest.raises(EnumerationLimitError):
        expected_information_gain(belief, ["a0", "a1", "a2"], model, enumeration_cap=10)


def simulate_expected_ig(belief, targets, model):
    """Independent oracle: expectation of realized entropy drops over all
    (ground truth, answer) pairs, using numpy entropies."""
    schema = belief.schema
    supports = []
    for attr_id in targets:
        attr = schema.attribute(attr_id)
        vec = belief.distributions[attr_id]
        supports.append([(v, p) for v, p in zip(attr.domain, vec) if p > 0])
    total = 0.0
    for combo in itertools.product(*supports):
        truth = {t: v for t, (v, _) in zip(targets, combo)}
        p_truth = 1.0
        for _, (_, p) in zip(targets, combo):
            p_truth *= p
        for p_answer, constraints in model.outcomes(truth, targets):
            if not constraints or p_answer == 0:
                continue
            new, _ = apply_evidence(belief, Evidence(constraints=constraints))
            drop = sum(
                np_entropy(belief.distributions[a.id])
                - np_entropy(new.distributions[a.id])
                for a in schema.attributes
            )
            total += p_truth * p_answer * drop
    return total


def mutual_information_oracle(belief, targets, model):
    """Independent oracle: I(answer; truth) from the explicit joint table."""
    schema = belief.schema
    supports = []
    for attr_id in targets:
        attr = schema.attribute(attr_id)
        vec = belief.distributions[attr_id]
        supports.append([(v, p) for v, p in zip(attr.domain, vec) if p > 0])
    joint = {}  # (answer key, truth key) -> prob
    answer_marginal = {}
    truth_marginal = {}
    for combo in itertools.product(*supports):
        truth = {t: v for t, (v, _) in zip(targets, combo)}
        truth_key = tuple(truth[t] for t in targets)
        p_truth = 1.0
        for _, (_, p) in zip(targets, combo):
            p_truth *= p
        truth_marginal[truth_key] = truth_marginal.get(truth_key, 0.0) + p_truth
        for p_answer, constraints in model.outcomes(truth, targets):
            if p_answer == 0:
                continue
            answer_key = tuple(sorted((a, tuple(s)) for a, s in constraints.items()))
            w = p_truth * p_answer
            joint[(answer_key, truth_key)] = joint.get((answer_key, truth_key), 0.0) + w
            answer_marginal[answer_key] = answer_marginal.get(answer_key, 0.0) + w
    mi = 0.0
    for (answer_key, truth_key), w in joint.items():
        if w > 0:
            mi += w * math.log2(
                w / (answer_marginal[answer_key] * truth_marginal[truth_key])
            )
    return mi


def test_novice_expected_ig_matches_brute_force():
    schema = make_schema([4])
    wm = make_world_model(schema, {"a0": [0.25, 0.25, 0.25, 0.25]})
    belief = init_belief(wm)
    model = SubsetReveal(schema, reveal_fraction=1.0, coarseness=2)
    value = expected_information_gain(belief, ["a0"], model)
    assert value == pytest.approx(simulate_expected_ig(belief, ["a0"], model), abs=1e-9)
    assert value == pytest.approx(
        mutual_information_oracle(belief, ["a0"], model), abs=1e-9
    )


def test_mutual_information_identity_on_random_small_schemas():
    rng = np.random.default_rng(1234)
    for _ in range(8):
        sizes = [int(rng.integers(2, 5)) for _ in range(int(rng.integers(2, 5)))]
        schema = make_schema(sizes)
        vectors = random_belief_vectors(rng, schema)
        belief = init_belief(make_world_model(schema, vectors))
        n_targets = int(rng.integers(1, len(sizes) + 1))
        targets = [f"a{i}" for i in sorted(
            int(j) for j in rng.choice(len(sizes), size=n_targets, replace=False)
        )]
        model = (
            FullReveal()
            if rng.random() < 0.5
            else SubsetReveal(schema, reveal_fraction=0.7, coarseness=2)
        )
        implementation = expected_information_gain(belief, targets, model)
        simulated = simulate_expected_ig(belief, targets, model)
        mi = mutual_information_oracle(belief, targets, model)
        assert implementation == pytest.approx(simulated, abs=1e-9)
        assert implementation == pytest.approx(mi, abs=1e-9)


def test_realized_kl_closed_form_for_singletons():
    schema = make_schema([4])
    wm = make_world_model(schema, {"a0": [0.4, 0.3, 0.2, 0.1]})
    belief = init_belief(wm)
    # for a singleton constraint to value v the realized KL is -log2 P(v)
    from inquest.kernels import kl_bits

    for j, value in enumerate(schema.attribute("a0").domain):
        new, _ = apply_evidence(belief, Evidence(constraints={"a0": (value,)}))
        realized = kl_bits(new.distribution("a0"), belief.distribution("a0"))
        assert realized == pytest.approx(
            -math.log2(belief.distribution("a0")[j]), abs=1e-9
        )
    # and expectation of realized drops equals expectation of realized KLs
    model = FullReveal()
    e_delta_h = simulate_expected_ig(belief, ["a0"], model)
    e_kl = expected_information_gain(belief, ["a0"], model)
    assert e_delta_h == pytest.approx(e_kl, abs=1e-9)


# ------------------------------------------------------------------ snapshots


def test_snapshot_roundtrip(demo):
    _, _, wm = demo
    belief = init_belief(wm)
    belief, _ = apply_evidence(belief, Evidence(constraints={"layout": ("grid",)}))
    snapshot = belief.to_snapshot()
    restored = BeliefState.from_snapshot(wm.schema, snapshot)
    assert restored.t == belief.t
    assert restored.distributions == belief.distributions
    assert restored.resolved == belief.resolved
    assert snapshot["resolved"] == ["layout"]


def test_entropy_monotone_under_persona_dialogue(demo):
    schema, corpus, wm = demo
    persona = OraclePersona(kind="novice", reveal_fraction=0.8)
    belief = init_belief(wm)
    truth = corpus[0]
    last = total_entropy(belief)
    for t in range(1, 20):
        target = max(
            (a.id for a in schema.attributes),
            key=lambda a: (belief.entropy_bits(a), a),
        )
        question = single_attribute_question(schema, target)
        answer = oracle_answer(schema, persona, truth, question, spawn(3, "t", t))
        evidence = parse_answer("structured", question, answer)
        belief, record = apply_evidence(belief, evidence)
        assert record.ig_bits >= 0.0
        assert total_entropy(belief) <= last + 1e-12
        last = total_entropy(belief)
