"""Command-line front door: train/eval/accuracy, experiment run, serve."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .experiment import ExperimentConfig, run_experiment, write_experiment_outputs
from .plantsim import PlantConfig
from .treepolicy import (
    CqiHyperparams,
    DecisionTreePolicy,
    expert_action,
    greedy_policy,
    mean_episode_energy,
    policy_accuracy,
    random_policy,
    sample_states,
    train_cqi,
)


def _load_plant_config(path: str | None) -> PlantConfig:
    if path is None:
        return PlantConfig()
    return PlantConfig.from_file(path)


def cmd_train(args: argparse.Namespace) -> int:
    config = _load_plant_config(args.config)
    hp = CqiHyperparams(episodes=args.episodes) if args.episodes is not None else CqiHyperparams()
    tree = train_cqi(config, hp, seed=args.seed)
    tree.save(args.out)
    print(f"trained tree: {tree.num_nodes()} nodes, seed {args.seed} -> {args.out}")
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    config = _load_plant_config(args.config)
    tree = DecisionTreePolicy.load(args.tree)
    greedy = mean_episode_energy(greedy_policy(tree), config, args.episodes)
    baseline = mean_episode_energy(random_policy(args.seed), config, args.episodes)
    ratio = greedy / baseline if baseline > 0 else float("inf")
    print(f"{'policy':<18}{'mean episode energy':>22}")
    print(f"{'greedy (tree)':<18}{greedy:>22.4f}")
    print(f"{'uniform random':<18}{baseline:>22.4f}")
    print(f"{'ratio':<18}{ratio:>22.2f}")
    return 0


def cmd_accuracy(args: argparse.Namespace) -> int:
    config = _load_plant_config(args.config)
    tree = DecisionTreePolicy.load(args.tree)
    states = sample_states(config, args.states, seed=args.seed)
    a_m = policy_accuracy(tree, states, lambda s: expert_action(s, config))
    print(f"a_m = {a_m:.4f}  (agreement with the scripted expert on {args.states} states)")
    return 0


def cmd_experiment_run(args: argparse.Namespace) -> int:
    config = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    report = run_experiment(config)
    write_experiment_outputs(report, args.out)
    for mode in config.modes:
        arm = report.doc["arms"][mode]
        print(f"{mode:<12} IP={arm['ip']:.4f}  rules/user={arm['m2_mean_rules_learned']:.2f}")
    print(f"report written to {Path(args.out) / 'report.json'}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import ServiceConfig, SessionManager, create_app

    config = ServiceConfig.load(
        args.config,
        mode=args.mode,
        tree_path=args.tree,
        step_seconds=args.step_seconds,
        port=args.port,
    )
    tree = DecisionTreePolicy.load(config.tree_path) if config.tree_path else None
    manager = SessionManager(
        tree=tree,
        mode=config.mode,
        step_seconds=config.step_seconds,
        journal_dir=config.journal_dir,
    )
    app = create_app(manager)
    print(f"serving mode={config.mode} step_seconds={config.step_seconds} on {config.host}:{config.port}")
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="infopower")
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="train the advisor tree")
    train.add_argument("--config", help="plant config JSON file")
    train.add_argument("--seed", type=int, default=2024)
    train.add_argument("--episodes", type=int, default=None)
    train.add_argument("--out", default="tree.json")
    train.set_defaults(func=cmd_train)

    evaluate = sub.add_parser("eval", help="score a tree against the random baseline")
    evaluate.add_argument("--tree", required=True)
    evaluate.add_argument("--config", help="plant config JSON file")
    evaluate.add_argument("--episodes", type=int, default=100)
    evaluate.add_argument("--seed", type=int, default=12345)
    evaluate.set_defaults(func=cmd_eval)

    accuracy = sub.add_parser("accuracy", help="agreement rate with the scripted expert")
    accuracy.add_argument("--tree", required=True)
    accuracy.add_argument("--config", help="plant config JSON file")
    accuracy.add_argument("--states", type=int, default=500)
    accuracy.add_argument("--seed", type=int, default=90001)
    accuracy.set_defaults(func=cmd_accuracy)

    experiment = sub.add_parser("experiment", help="synthetic-user experiment pipeline")
    experiment_sub = experiment.add_subparsers(dest="experiment_command", required=True)
    run = experiment_sub.add_parser("run", help="run the configured arms and write reports")
    run.add_argument("--config", help="experiment config JSON file")
    run.add_argument("--out", required=True, help="output directory")
    run.set_defaults(func=cmd_experiment_run)

    serve = sub.add_parser("serve", help="start the live session service")
    serve.add_argument("--tree", help="tree JSON file (defaults to the reference advisor)")
    serve.add_argument("--mode", choices=["classical", "user-aware"], default=None)
    serve.add_argument("--config", help="service config JSON file")
    serve.add_argument("--step-seconds", type=float, default=None, dest="step_seconds")
    serve.add_argument("--port", type=int, default=None)
    serve.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
