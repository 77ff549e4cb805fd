"""Offline and online trainers for the selection policy.

Four methods share one full-batch gradient-descent loop: offline GRPO
(clipped probability-ratio surrogate with an exact group KL penalty
against a frozen reference), SFT (likelihood of the highest-reward
candidate), DPO (best-vs-worst logistic preference), and online GRPO
(SFT warm-up, then rounds of sampling fresh groups from the current
policy). All gradients are analytic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from inquest.errors import SchemaError, TrainingDivergedError
from inquest.features import FEATURE_DIM
from inquest.kernels import log_softmax
from inquest.policy import PolicyParams, argmax_index

TRAIN_METHODS = ("sft", "dpo", "grpo-offline", "grpo-online")


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for one training run."""

    method: str = "grpo-offline"
    epochs: int = 5
    learning_rate: float = 0.05
    clip_epsilon: float = 0.2
    kl_beta: float = 0.01
    dpo_beta: float = 0.1
    seed: int = 0
    reward_mode: str = "entropy"
    warmup_epochs: int = 1
    temperature: float = 1.0

    def __post_init__(self):
        if self.method not in TRAIN_METHODS:
            raise SchemaError(f"unknown training method {self.method!r}")
        if not 0.0 < self.clip_epsilon < 1.0:
            raise SchemaError("clip epsilon must be in (0, 1)")
        if self.kl_beta < 0:
            raise SchemaError("KL beta must be nonnegative")
        if self.epochs < 1:
            raise SchemaError("epochs must be >= 1")


def _softmax_stats(params: PolicyParams, features):
    """Log-probs, probs and the probability-weighted mean feature vector."""
    log_probs = log_softmax(params.scores(features))
    probs = [math.exp(lp) for lp in log_probs]
    dim = len(features[0])
    phi_bar = [0.0] * dim
    for p, feat in zip(probs, features):
        for j in range(dim):
            phi_bar[j] += p * feat[j]
    return log_probs, probs, phi_bar


def _centered_feature(features, phi_bar, i, temperature):
    """Gradient of log pi(i): (phi_i - phi_bar) / temperature."""
    return [
        (features[i][j] - phi_bar[j]) / temperature for j in range(len(phi_bar))
    ]


def grpo_offline_loss(
    params: PolicyParams,
    ref_params: PolicyParams,
    features,
    advantages,
    clip_epsilon: float = 0.2,
    kl_beta: float = 0.01,
):
    """Clipped-surrogate loss with exact KL penalty over one group.

    Returns (loss, gradient, kl). The loss is the negated objective
    mean_i min(rho_i A_i, clip(rho_i) A_i) - beta * KL(pi || pi_ref),
    with rho_i the per-candidate probability ratio against the frozen
    reference. At params == ref_params the ratios are exactly 1, the KL is
    exactly 0, and the gradient equals the unclipped surrogate gradient.
    """
    if len(features) != len(advantages) or not features:
        raise SchemaError("group features and advantages are missing or mismatched")
    k = len(features)
    log_p, probs, phi_bar = _softmax_stats(params, features)
    log_q, _, _ = _softmax_stats(ref_params, features)
    temperature = params.temperature

    surrogate_terms = []
    grad_surr = [0.0] * len(phi_bar)
    kl_terms = []
    grad_kl = [0.0] * len(phi_bar)
    low, high = 1.0 - clip_epsilon, 1.0 + clip_epsilon
    for i in range(k):
        advantage = advantages[i]
        rho = math.exp(log_p[i] - log_q[i])
        clipped_rho = min(max(rho, low), high)
        unclipped = rho * advantage
        clipped = clipped_rho * advantage
        if unclipped <= clipped:
            surrogate_terms.append(unclipped)
            dlogp = _centered_feature(features, phi_bar, i, temperature)
            coeff = advantage * rho
            for j in range(len(grad_surr)):
                grad_surr[j] += coeff * dlogp[j]
        else:
            surrogate_terms.append(clipped)
        if probs[i] > 0.0:
            ell = log_p[i] - log_q[i]
            kl_terms.append(probs[i] * ell)
            coeff = probs[i] * ell / temperature
            for j in range(len(grad_kl)):
                grad_kl[j] += coeff * (features[i][j] - phi_bar[j])

    surrogate = math.fsum(surrogate_terms) / k
    kl = math.fsum(kl_terms)
    loss = -(surrogate - kl_beta * kl)
    gradient = [
        -(grad_surr[j] / k - kl_beta * grad_kl[j]) for j in range(len(grad_surr))
    ]
    return loss, gradient, kl


def sft_loss(params: PolicyParams, features, rewards):
    """Negative log-likelihood of the highest-reward candidate (ties: lowest index)."""
    if not features:
        raise SchemaError("empty group")
    best = argmax_index(rewards)
    log_p, _, phi_bar = _softmax_stats(params, features)
    loss = -log_p[best]
    dlogp = _centered_feature(features, phi_bar, best, params.temperature)
    gradient = [-g for g in dlogp]
    return loss, gradient


def _argmin_index(values) -> int:
    worst = 0
    for i in range(1, len(values)):
        if values[i] < values[worst]:
            worst = i
    return worst


def _softplus(x: float) -> float:
    if x > 0:
        return x + math.log1p(math.exp(-x))
    return math.log1p(math.exp(x))


def dpo_loss(
    params: PolicyParams,
    ref_params: PolicyParams,
    features,
    rewards,
    dpo_beta: float = 0.1,
):
    """Logistic best-vs-worst preference loss with reference correction."""
    if not features:
        raise SchemaError("empty group")
    best = argmax_index(rewards)
    worst = _argmin_index(rewards)
    if rewards[best] == rewards[worst]:
        raise SchemaError("all rewards equal; group carries no preference")
    log_p, _, phi_bar = _softmax_stats(params, features)
    log_q, _, _ = _softmax_stats(ref_params, features)
    margin = dpo_beta * (
        (log_p[best] - log_q[best]) - (log_p[worst] - log_q[worst])
    )
    loss = _softplus(-margin)
    # d/d margin of -log sigmoid(margin) is -sigmoid(-margin)
    if margin >= 0:
        e = math.exp(-margin)
        sig_neg = e / (1.0 + e)
    else:
        sig_neg = 1.0 / (1.0 + math.exp(margin))
    d_best = _centered_feature(features, phi_bar, best, params.temperature)
    d_worst = _centered_feature(features, phi_bar, worst, params.temperature)
    gradient = [
        -sig_neg * dpo_beta * (d_best[j] - d_worst[j]) for j in range(len(d_best))
    ]
    return loss, gradient


def top1_agreement(params: PolicyParams, groups) -> float:
    """Fraction of groups whose policy argmax matches the reward argmax."""
    if not groups:
        raise SchemaError("no groups to evaluate")
    hits = 0
    for group in groups:
        scores = params.scores(group.features)
        if argmax_index(scores) == argmax_index(group.rewards):
            hits += 1
    return hits / len(groups)


@dataclass
class TrainingLog:
    """Per-epoch training curve; epoch 0 is the untrained starting point."""

    method: str
    rows: list = field(default_factory=list)  # (epoch, loss, kl_term, top1)
    skipped_groups: int = 0

    def add(self, epoch, loss, kl_term, top1):
        self.rows.append((epoch, loss, kl_term, top1))

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            handle.write("epoch,loss,kl_term,top1_agreement\n")
            for epoch, loss, kl_term, top1 in self.rows:
                handle.write(f"{epoch},{loss!r},{kl_term!r},{top1!r}\n")

    @property
    def final_agreement(self) -> float:
        return self.rows[-1][3]

    @property
    def initial_agreement(self) -> float:
        return self.rows[0][3]


def _check_groups(groups):
    if not groups:
        raise SchemaError("dataset is empty")
    for group in groups:
        if not group.features or len(group.features) != len(group.rewards):
            raise SchemaError(
                "groups are missing per-candidate features; regenerate the dataset"
            )
        if len(group.features[0]) != FEATURE_DIM:
            raise SchemaError("feature dimension mismatch")


def _batch_metrics(method, params, ref, groups, config):
    """Mean loss, gradient and KL over the groups under the given method."""
    dim = FEATURE_DIM
    grad = [0.0] * dim
    losses = []
    kls = []
    for group in groups:
        if method == "grpo-offline" or method == "grpo-online":
            loss, g, kl = grpo_offline_loss(
                params,
                ref,
                group.features,
                group.advantages,
                config.clip_epsilon,
                config.kl_beta,
            )
            kls.append(kl)
        elif method == "sft":
            loss, g = sft_loss(params, group.features, group.rewards)
        else:
            loss, g = dpo_loss(
                params, ref, group.features, group.rewards, config.dpo_beta
            )
        losses.append(loss)
        for j in range(dim):
            grad[j] += g[j]
    n = len(groups)
    mean_loss = math.fsum(losses) / n
    mean_grad = [g / n for g in grad]
    mean_kl = math.fsum(kls) / n if kls else 0.0
    return mean_loss, mean_grad, mean_kl


def _step(params: PolicyParams, gradient, learning_rate) -> PolicyParams:
    theta = tuple(
        params.theta[j] - learning_rate * gradient[j] for j in range(len(gradient))
    )
    if not all(math.isfinite(x) for x in theta):
        raise TrainingDivergedError(
            f"parameter update overflowed: theta={theta}, "
            f"gradient={tuple(gradient)}, lr={learning_rate}"
        )
    return PolicyParams(
        theta=theta,
        temperature=params.temperature,
        trained_with=params.trained_with,
    )


def _guard(loss, params, epoch):
    if not math.isfinite(loss) or not all(math.isfinite(x) for x in params.theta):
        raise TrainingDivergedError(
            f"non-finite loss or parameters at epoch {epoch}: "
            f"loss={loss}, theta={params.theta}"
        )


def train(
    config: TrainConfig,
    dataset: Optional[Sequence] = None,
    simulator=None,
) -> tuple[PolicyParams, TrainingLog]:
    """Train a policy with the configured method.

    Offline methods (sft, dpo, grpo-offline) take a dataset of preference
    groups; grpo-online takes a group simulator and samples fresh groups
    from the evolving policy each round. Deterministic for a fixed seed.
    """
    log = TrainingLog(method=config.method)
    trained_with = {
        "method": config.method,
        "reward_mode": config.reward_mode,
        "seed": config.seed,
        "epochs": config.epochs,
    }
    params = PolicyParams(temperature=config.temperature, trained_with=trained_with)

    if config.method == "grpo-online":
        if simulator is None:
            raise SchemaError("online training requires a group simulator")
        warmup_groups = simulator.sample(params, "warmup")
        _check_groups(warmup_groups)
        for epoch in range(config.warmup_epochs):
            _, grad, _ = _batch_metrics("sft", params, params, warmup_groups, config)
            params = _step(params, grad, config.learning_rate)
        ref = params
        loss, _, kl = _batch_metrics("grpo-online", params, ref, warmup_groups, config)
        _guard(loss, params, 0)
        log.add(0, loss, kl, top1_agreement(params, warmup_groups))
        for epoch in range(1, config.epochs + 1):
            groups = simulator.sample(params, epoch)
            _check_groups(groups)
            _, grad, _ = _batch_metrics("grpo-online", params, ref, groups, config)
            params = _step(params, grad, config.learning_rate)
            loss, _, kl = _batch_metrics("grpo-online", params, ref, groups, config)
            _guard(loss, params, epoch)
            log.add(epoch, loss, kl, top1_agreement(params, groups))
        return params, log

    if dataset is None:
        raise SchemaError(f"method {config.method!r} requires a dataset")
    groups = list(dataset)
    _check_groups(groups)
    if config.method == "dpo":
        usable = [g for g in groups if max(g.rewards) > min(g.rewards)]
        log.skipped_groups = len(groups) - len(usable)
        groups = usable
        if not groups:
            raise SchemaError("every group has constant rewards; nothing to train on")

    ref = params
    loss, _, kl = _batch_metrics(config.method, params, ref, groups, config)
    _guard(loss, params, 0)
    log.add(0, loss, kl, top1_agreement(params, groups))
    for epoch in range(1, config.epochs + 1):
        _, grad, _ = _batch_metrics(config.method, params, ref, groups, config)
        params = _step(params, grad, config.learning_rate)
        loss, _, kl = _batch_metrics(config.method, params, ref, groups, config)
        _guard(loss, params, epoch)
        log.add(epoch, loss, kl, top1_agreement(params, groups))
    return params, log
