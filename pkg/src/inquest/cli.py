"""Command-line interface with a run-directory convention.

Every command resolves its configuration, fans the global seed out to its
components by stable label hashing, writes its artifacts into the output
directory, and records the fully resolved config plus every file it read
or wrote in `run.json`. Exit codes: 0 success, 1 validation error,
2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import inquest
from inquest.datagen import (
    CandidateGenerator,
    EpsilonGreedyRollout,
    GroupSimulator,
    beliefs_sidecar_path,
    build_dataset,
    load_dataset,
)
from inquest.dialogue import GreedyEntropySelector, OraclePersona, save_transcripts
from inquest.errors import InquestError, SchemaError
from inquest.evaluate import (
    PROTOCOLS,
    compare_personas,
    load_judgments,
    run_evaluation,
    win_rate,
    write_ig_curves,
    write_report,
)
from inquest.policy import PolicyParams, PolicySelector, load_policy, save_policy
from inquest.rng import derive_seed
from inquest.schema import (
    demo_gen_config,
    demo_schema,
    estimate_prior,
    generate_corpus,
    load_corpus,
    load_schema,
    save_corpus,
    save_schema,
    WorldModel,
)
from inquest.training import TrainConfig, train


def _ensure_out(path) -> str:
    os.makedirs(path, exist_ok=True)
    return path


def _write_run_json(out_dir, command, config, inputs, outputs) -> None:
    # Output paths are recorded relative to the run directory so a rerun
    # into a different directory produces byte-identical artifacts.
    rel_outputs = {
        key: os.path.relpath(path, out_dir) for key, path in outputs.items()
    }
    payload = {
        "tool": f"inquest {inquest.__version__}",
        "command": command,
        "config": config,
        "inputs": inputs,
        "outputs": rel_outputs,
    }
    with open(os.path.join(out_dir, "run.json"), "w", encoding="utf-8") as handle:
        handle.write(json.dumps(payload, indent=2) + "\n")


def _resolve_schema(arg: str):
    if arg == "demo":
        return demo_schema()
    return load_schema(arg)


def _resolve_gen_config(arg: str, schema):
    if arg == "demo":
        return demo_gen_config(schema)
    if arg == "uniform":
        return {}
    with open(arg, "r", encoding="utf-8") as handle:
        return json.load(handle)


def _persona_from_args(args) -> OraclePersona:
    persona = OraclePersona(
        kind=args.oracle,
        reveal_fraction=args.reveal_fraction,
        subset_coarseness=args.subset_coarseness,
        noise_rate=args.noise_rate,
    )
    if persona.kind == "novice" and persona.reveal_fraction <= 0.0:
        raise SchemaError(
            "a novice oracle with reveal fraction 0 never terminates; "
            "raise --reveal-fraction"
        )
    return persona


def _add_persona_flags(parser) -> None:
    parser.add_argument(
        "--oracle", choices=("expert", "novice", "noisy"), default="expert"
    )
    parser.add_argument("--reveal-fraction", type=float, default=0.7)
    parser.add_argument("--subset-coarseness", type=int, default=2)
    parser.add_argument("--noise-rate", type=float, default=0.5)


def _max_turns(arg: int):
    return None if arg == 0 else arg


def _selector(spec: str, schema, generator):
    """Resolve a policy spec: 'greedy', 'uniform', or a policy-file path."""
    if spec == "greedy":
        return GreedyEntropySelector(schema)
    if spec == "uniform":
        return PolicySelector(
            PolicyParams(), generator, mode="sample", policy_id="uniform-random"
        )
    params = load_policy(spec)
    label = params.trained_with.get("method", "policy")
    mode = params.trained_with.get("reward_mode", "")
    policy_id = f"{label}-{mode}" if mode else label
    return PolicySelector(params, generator, mode="greedy", policy_id=policy_id)


def _slice_corpus(corpus, start: int, count):
    if start:
        corpus = corpus[start:]
    if count is not None:
        if count > len(corpus):
            raise SchemaError(
                f"requested {count} ground truths but only {len(corpus)} available"
            )
        corpus = corpus[:count]
    if not corpus:
        raise SchemaError("selected corpus slice is empty")
    return corpus


def cmd_gen_corpus(args) -> int:
    schema = _resolve_schema(args.schema)
    gen_config = _resolve_gen_config(args.gen_config, schema)
    corpus = generate_corpus(
        schema, gen_config, args.n, derive_seed(args.seed, "corpus")
    )
    out = _ensure_out(args.out)
    corpus_path = os.path.join(out, "corpus.jsonl")
    save_corpus(corpus, corpus_path)
    schema_path = os.path.join(out, "schema.json")
    save_schema(schema, schema_path)
    _write_run_json(
        out,
        "gen-corpus",
        {
            "schema": args.schema,
            "gen_config": args.gen_config,
            "n": args.n,
            "seed": args.seed,
        },
        {"schema": args.schema if args.schema != "demo" else "builtin:demo"},
        {"corpus": corpus_path, "schema": schema_path},
    )
    print(f"wrote {len(corpus)} specifications to {corpus_path}")
    return 0


def cmd_build_prior(args) -> int:
    schema = _resolve_schema(args.schema)
    corpus = load_corpus(args.corpus, schema)
    world_model = estimate_prior(schema, corpus, args.alpha)
    out = _ensure_out(args.out)
    wm_path = os.path.join(out, "worldmodel.json")
    with open(wm_path, "w", encoding="utf-8") as handle:
        handle.write(world_model.to_json())
    _write_run_json(
        out,
        "build-prior",
        {"schema": args.schema, "corpus": args.corpus, "alpha": args.alpha},
        {"corpus": args.corpus},
        {"worldmodel": wm_path},
    )
    print(f"wrote world model ({world_model.corpus_size} specs) to {wm_path}")
    return 0


def _load_world_model(path, schema) -> WorldModel:
    with open(path, "r", encoding="utf-8") as handle:
        return WorldModel.from_json(handle.read(), schema)


def cmd_datagen(args) -> int:
    schema = _resolve_schema(args.schema)
    world_model = _load_world_model(args.worldmodel, schema)
    persona = _persona_from_args(args)
    truths = _slice_corpus(load_corpus(args.corpus, schema), args.start, args.count)
    generator = CandidateGenerator(schema, k=args.k)
    out = _ensure_out(args.out)
    dataset_path = os.path.join(out, "prefdata.jsonl")
    stats = build_dataset(
        world_model,
        truths,
        persona,
        dataset_path,
        rollout=EpsilonGreedyRollout(args.epsilon),
        generator=generator,
        groups_per_dialogue=args.groups_per_dialogue,
        reward_mode=args.reward,
        seed=derive_seed(args.seed, "datagen"),
        entropy_threshold=args.tau,
        max_turns=args.max_turns,
    )
    stats_path = os.path.join(out, "datagen_stats.json")
    with open(stats_path, "w", encoding="utf-8") as handle:
        handle.write(stats.to_json())
    _write_run_json(
        out,
        "datagen",
        {
            "schema": args.schema,
            "worldmodel": args.worldmodel,
            "corpus": args.corpus,
            "start": args.start,
            "count": args.count,
            "oracle": persona.to_dict(),
            "k": args.k,
            "epsilon": args.epsilon,
            "groups_per_dialogue": args.groups_per_dialogue,
            "reward": args.reward,
            "tau": args.tau,
            "max_turns": args.max_turns,
            "seed": args.seed,
        },
        {"worldmodel": args.worldmodel, "corpus": args.corpus},
        {
            "dataset": dataset_path,
            "beliefs": beliefs_sidecar_path(dataset_path),
            "stats": stats_path,
        },
    )
    print(
        f"wrote {stats.n_groups} groups from {stats.n_dialogues} dialogues "
        f"to {dataset_path}"
    )
    return 0


def cmd_train(args) -> int:
    config = TrainConfig(
        method=args.method,
        epochs=args.epochs,
        learning_rate=args.lr,
        clip_epsilon=args.clip_eps,
        kl_beta=args.kl_beta,
        dpo_beta=args.dpo_beta,
        seed=derive_seed(args.seed, "train"),
        reward_mode=args.reward,
        warmup_epochs=args.warmup_epochs,
    )
    inputs = {}
    if args.method == "grpo-online":
        if not (args.schema and args.worldmodel and args.corpus):
            raise SchemaError(
                "grpo-online needs --schema, --worldmodel and --corpus "
                "to simulate rollouts"
            )
        schema = _resolve_schema(args.schema)
        world_model = _load_world_model(args.worldmodel, schema)
        truths = _slice_corpus(
            load_corpus(args.corpus, schema), args.start, args.count
        )
        simulator = GroupSimulator(
            world_model,
            truths,
            _persona_from_args(args),
            generator=CandidateGenerator(schema, k=args.k),
            reward_mode=args.reward,
            seed=config.seed,
        )
        params, log = train(config, simulator=simulator)
        inputs = {"worldmodel": args.worldmodel, "corpus": args.corpus}
    else:
        if not args.dataset:
            raise SchemaError(f"method {args.method!r} requires --dataset")
        groups = load_dataset(args.dataset)
        params, log = train(config, dataset=groups)
        inputs = {"dataset": args.dataset}
    out = _ensure_out(args.out)
    policy_path = os.path.join(out, "policy.json")
    save_policy(params, policy_path)
    log_path = os.path.join(out, "train_log.csv")
    log.to_csv(log_path)
    _write_run_json(
        out,
        "train",
        {
            "method": args.method,
            "dataset": args.dataset,
            "epochs": args.epochs,
            "lr": args.lr,
            "clip_eps": args.clip_eps,
            "kl_beta": args.kl_beta,
            "dpo_beta": args.dpo_beta,
            "reward": args.reward,
            "warmup_epochs": args.warmup_epochs,
            "seed": args.seed,
        },
        inputs,
        {"policy": policy_path, "train_log": log_path},
    )
    print(
        f"trained {args.method} policy -> {policy_path} "
        f"(top1 agreement {log.initial_agreement:.3f} -> {log.final_agreement:.3f})"
    )
    return 0


def cmd_simulate(args) -> int:
    schema = _resolve_schema(args.schema)
    world_model = _load_world_model(args.worldmodel, schema)
    persona = _persona_from_args(args)
    truths = _slice_corpus(load_corpus(args.corpus, schema), args.start, args.count)
    generator = CandidateGenerator(schema, k=args.k)
    selector = _selector(args.policy, schema, generator)
    summary, transcripts = run_evaluation(
        selector,
        persona,
        world_model,
        truths,
        seed=derive_seed(args.seed, "simulate"),
        entropy_threshold=args.tau,
        max_turns=_max_turns(args.max_turns),
    )
    out = _ensure_out(args.out)
    transcripts_path = os.path.join(out, "transcripts.jsonl")
    save_transcripts(transcripts, transcripts_path)
    _write_run_json(
        out,
        "simulate",
        {
            "schema": args.schema,
            "worldmodel": args.worldmodel,
            "corpus": args.corpus,
            "policy": args.policy,
            "oracle": persona.to_dict(),
            "tau": args.tau,
            "max_turns": args.max_turns,
            "seed": args.seed,
            "count": args.count,
            "start": args.start,
            "k": args.k,
        },
        {"worldmodel": args.worldmodel, "corpus": args.corpus},
        {"transcripts": transcripts_path},
    )
    print(
        f"{summary.n_dialogues} dialogues: mean turns {summary.mean_turns:.2f}, "
        f"mean total IG {summary.mean_total_ig:.3f} bits -> {transcripts_path}"
    )
    return 0


def cmd_eval(args) -> int:
    schema = _resolve_schema(args.schema)
    world_model = _load_world_model(args.worldmodel, schema)
    persona = _persona_from_args(args)
    truths = _slice_corpus(load_corpus(args.corpus, schema), args.start, args.count)
    generator = CandidateGenerator(schema, k=args.k)
    summaries = []
    for spec in args.policy:
        selector = _selector(spec, schema, generator)
        summary, _ = run_evaluation(
            selector,
            persona,
            world_model,
            truths,
            seed=derive_seed(args.seed, "eval"),
            entropy_threshold=args.tau,
            max_turns=_max_turns(args.max_turns),
        )
        summaries.append(summary)
    out = _ensure_out(args.out)
    report_json = os.path.join(out, "report.json")
    report_text = os.path.join(out, "report.txt")
    curves = os.path.join(out, "curves.csv")
    write_report(summaries, report_json, report_text)
    write_ig_curves(summaries, curves)
    _write_run_json(
        out,
        "eval",
        {
            "schema": args.schema,
            "worldmodel": args.worldmodel,
            "corpus": args.corpus,
            "policies": list(args.policy),
            "oracle": persona.to_dict(),
            "tau": args.tau,
            "max_turns": args.max_turns,
            "seed": args.seed,
            "count": args.count,
            "start": args.start,
            "k": args.k,
        },
        {"worldmodel": args.worldmodel, "corpus": args.corpus},
        {"report": report_json, "report_text": report_text, "curves": curves},
    )
    with open(report_text, "r", encoding="utf-8") as handle:
        print(handle.read().rstrip())
    return 0


def cmd_winrate(args) -> int:
    judgments = load_judgments(args.judgments)
    if args.protocol == "all":
        rates = {p: win_rate(judgments, p) for p in PROTOCOLS}
        if args.format == "json":
            print(json.dumps(rates))
        else:
            for protocol in PROTOCOLS:
                print(f"{protocol} {rates[protocol]:.3f}")
    else:
        rate = win_rate(judgments, args.protocol)
        if args.format == "json":
            print(json.dumps({args.protocol: rate}))
        else:
            print(f"{rate:.3f}")
    return 0


def cmd_ablation(args) -> int:
    out = _ensure_out(args.out)
    schema = _resolve_schema(args.schema)
    seed = args.seed

    needed = args.train_dialogues + args.eval_dialogues + args.persona_dialogues
    if args.n_corpus < needed:
        raise SchemaError(
            f"--n-corpus must cover train+eval+persona splits ({needed})"
        )

    corpus = generate_corpus(
        schema, demo_gen_config(schema), args.n_corpus, derive_seed(seed, "corpus")
    )
    corpus_path = os.path.join(out, "corpus.jsonl")
    save_corpus(corpus, corpus_path)
    world_model = estimate_prior(schema, corpus, args.alpha)
    wm_path = os.path.join(out, "worldmodel.json")
    with open(wm_path, "w", encoding="utf-8") as handle:
        handle.write(world_model.to_json())

    train_split = corpus[: args.train_dialogues]
    eval_split = corpus[args.train_dialogues : args.train_dialogues + args.eval_dialogues]
    persona_split = corpus[
        args.train_dialogues
        + args.eval_dialogues : args.train_dialogues
        + args.eval_dialogues
        + args.persona_dialogues
    ]

    generator = CandidateGenerator(schema, k=args.k)
    expert = OraclePersona(kind="expert")
    datasets = {}
    policies = {}
    for reward_mode, tag in (("entropy", "entropy"), ("slot-count", "slotcount")):
        dataset_path = os.path.join(out, f"prefdata_{tag}.jsonl")
        stats = build_dataset(
            world_model,
            train_split,
            expert,
            dataset_path,
            generator=generator,
            reward_mode=reward_mode,
            seed=derive_seed(seed, "datagen", reward_mode),
        )
        with open(os.path.join(out, f"datagen_stats_{tag}.json"), "w") as handle:
            handle.write(stats.to_json())
        datasets[tag] = dataset_path
        config = TrainConfig(
            method="grpo-offline",
            epochs=args.epochs,
            learning_rate=args.lr,
            seed=derive_seed(seed, "train", reward_mode),
            reward_mode=reward_mode,
        )
        params, log = train(config, dataset=load_dataset(dataset_path))
        policy_path = os.path.join(out, f"policy_{tag}.json")
        save_policy(params, policy_path)
        log.to_csv(os.path.join(out, f"train_log_{tag}.csv"))
        policies[tag] = policy_path

    selectors = [
        _selector(policies["entropy"], schema, generator),
        _selector(policies["slotcount"], schema, generator),
        _selector("uniform", schema, generator),
    ]
    summaries = []
    for selector in selectors:
        summary, _ = run_evaluation(
            selector,
            expert,
            world_model,
            eval_split,
            seed=derive_seed(seed, "eval"),
            entropy_threshold=0.01,
            max_turns=args.eval_budget,
        )
        summaries.append(summary)
    write_report(
        summaries,
        os.path.join(out, "report.json"),
        os.path.join(out, "report.txt"),
    )
    write_ig_curves(summaries, os.path.join(out, "curves.csv"))

    personas = [
        OraclePersona(kind="expert"),
        OraclePersona(kind="novice"),
        OraclePersona(kind="noisy"),
    ]
    comparison = compare_personas(
        _selector(policies["entropy"], schema, generator),
        personas,
        world_model,
        persona_split,
        seed=derive_seed(seed, "personas"),
        entropy_threshold=0.0,
        max_turns=None,
    )
    with open(os.path.join(out, "persona_report.json"), "w", encoding="utf-8") as handle:
        handle.write(json.dumps(comparison.to_dict(), indent=2) + "\n")

    by_id = {s.policy_id: s for s in summaries}
    entropy_ig = by_id["grpo-offline-entropy"].mean_total_ig
    uniform_ig = by_id["uniform-random"].mean_total_ig
    slot_ig = by_id["grpo-offline-slot-count"].mean_total_ig
    summary_payload = {
        "eval_budget": args.eval_budget,
        "mean_total_ig_bits": {
            "grpo-entropy": entropy_ig,
            "grpo-slot-count": slot_ig,
            "uniform-random": uniform_ig,
        },
        "ig_gain_over_uniform": (entropy_ig - uniform_ig) / uniform_ig,
        "ig_gain_over_slot_count": (entropy_ig - slot_ig) / slot_ig,
        "persona_mean_turns": {
            kind: comparison.summaries[kind].mean_turns
            for kind in sorted(comparison.summaries)
        },
        "persona_total_ig_spread": comparison.max_total_ig_spread,
    }
    with open(os.path.join(out, "ablation_summary.json"), "w", encoding="utf-8") as handle:
        handle.write(json.dumps(summary_payload, indent=2) + "\n")

    _write_run_json(
        out,
        "ablation",
        {
            "schema": args.schema,
            "seed": seed,
            "n_corpus": args.n_corpus,
            "train_dialogues": args.train_dialogues,
            "eval_dialogues": args.eval_dialogues,
            "persona_dialogues": args.persona_dialogues,
            "k": args.k,
            "eval_budget": args.eval_budget,
            "alpha": args.alpha,
            "epochs": args.epochs,
            "lr": args.lr,
        },
        {"schema": args.schema if args.schema != "demo" else "builtin:demo"},
        {
            "corpus": corpus_path,
            "worldmodel": wm_path,
            "dataset_entropy": datasets["entropy"],
            "dataset_slotcount": datasets["slotcount"],
            "policy_entropy": policies["entropy"],
            "policy_slotcount": policies["slotcount"],
            "report": os.path.join(out, "report.json"),
            "persona_report": os.path.join(out, "persona_report.json"),
            "ablation_summary": os.path.join(out, "ablation_summary.json"),
        },
    )
    print(
        "ablation complete: IG gain over uniform "
        f"{summary_payload['ig_gain_over_uniform']:+.1%}, over slot-count "
        f"{summary_payload['ig_gain_over_slot_count']:+.1%}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="inquest",
        description="Information-gain-driven question selection toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-corpus", help="sample a synthetic specification corpus")
    p.add_argument("--schema", default="demo")
    p.add_argument("--gen-config", default="demo", help="demo | uniform | path")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_gen_corpus)

    p = sub.add_parser("build-prior", help="estimate the world-model prior")
    p.add_argument("--schema", default="demo")
    p.add_argument("--corpus", required=True)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_build_prior)

    p = sub.add_parser("datagen", help="generate a preference dataset")
    p.add_argument("--schema", default="demo")
    p.add_argument("--worldmodel", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--start", type=int, default=0)
    p.add_argument("--count", type=int, default=None)
    _add_persona_flags(p)
    p.add_argument("--k", type=int, default=8)
    p.add_argument("--epsilon", type=float, default=0.2)
    p.add_argument("--groups-per-dialogue", type=int, default=None)
    p.add_argument("--reward", choices=("entropy", "slot-count"), default="entropy")
    p.add_argument("--tau", type=float, default=0.01)
    p.add_argument("--max-turns", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_datagen)

    p = sub.add_parser("train", help="train a question-selection policy")
    p.add_argument(
        "--method",
        choices=("sft", "dpo", "grpo-offline", "grpo-online"),
        default="grpo-offline",
    )
    p.add_argument("--dataset")
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--clip-eps", type=float, default=0.2)
    p.add_argument("--kl-beta", type=float, default=0.01)
    p.add_argument("--dpo-beta", type=float, default=0.1)
    p.add_argument("--reward", choices=("entropy", "slot-count"), default="entropy")
    p.add_argument("--warmup-epochs", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".")
    # online-only wiring
    p.add_argument("--schema", default="demo")
    p.add_argument("--worldmodel")
    p.add_argument("--corpus")
    p.add_argument("--start", type=int, default=0)
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--k", type=int, default=8)
    _add_persona_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("simulate", help="run oracle dialogues, write transcripts")
    p.add_argument("--schema", default="demo")
    p.add_argument("--worldmodel", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--start", type=int, default=0)
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--policy", default="greedy", help="greedy | uniform | policy.json")
    _add_persona_flags(p)
    p.add_argument("--k", type=int, default=8)
    p.add_argument("--tau", type=float, default=0.01)
    p.add_argument("--max-turns", type=int, default=30, help="0 means unbounded")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("eval", help="evaluate policies and write the metrics report")
    p.add_argument("--schema", default="demo")
    p.add_argument("--worldmodel", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--start", type=int, default=0)
    p.add_argument("--count", type=int, default=None)
    p.add_argument(
        "--policy",
        action="append",
        required=True,
        help="greedy | uniform | policy.json (repeatable)",
    )
    _add_persona_flags(p)
    p.add_argument("--k", type=int, default=8)
    p.add_argument("--tau", type=float, default=0.01)
    p.add_argument("--max-turns", type=int, default=30, help="0 means unbounded")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("json", "table"), default="table")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("winrate", help="win rates from a pairwise judgments CSV")
    p.add_argument("--judgments", required=True)
    p.add_argument(
        "--protocol", choices=("win", "wt_half", "wt_full", "all"), default="all"
    )
    p.add_argument("--format", choices=("json", "table"), default="table")
    p.set_defaults(func=cmd_winrate)

    p = sub.add_parser(
        "ablation",
        help="end-to-end suite: entropy vs slot-count rewards, persona robustness",
    )
    p.add_argument("--schema", default="demo")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-corpus", type=int, default=2000)
    p.add_argument("--train-dialogues", type=int, default=40)
    p.add_argument("--eval-dialogues", type=int, default=60)
    p.add_argument("--persona-dialogues", type=int, default=30)
    p.add_argument("--k", type=int, default=8)
    p.add_argument("--eval-budget", type=int, default=10)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ablation)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    try:
        return args.func(args)
    except (SchemaError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (InquestError, OSError, json.JSONDecodeError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
