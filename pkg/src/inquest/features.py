"""Candidate-question features for the softmax selection policy."""

from __future__ import annotations

from inquest.belief import BeliefState

FEATURE_NAMES = (
    "sum_target_entropy",
    "max_target_entropy",
    "target_count",
    "resolved_target_count",
    "off_topic",
    "bias",
)
FEATURE_DIM = len(FEATURE_NAMES)
FEATURE_VERSION = "1"


def question_features(belief: BeliefState, targets) -> tuple:
    """Feature vector of a candidate question in the current belief state."""
    total = 0.0
    peak = 0.0
    resolved = 0
    for attr_id in targets:
        h = belief.entropy_bits(attr_id)
        total += h
        if h > peak:
            peak = h
        if belief.is_resolved(attr_id):
            resolved += 1
    return (
        total,
        peak,
        float(len(targets)),
        float(resolved),
        0.0 if targets else 1.0,
        1.0,
    )
