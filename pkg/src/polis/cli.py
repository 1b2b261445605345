"""Command-line front end.

Four verbs: simulate (scripted episodes for one constitution), evolve
(population search), analyze (logs to comparison report), replay
(verify recorded logs by re-execution). Exit codes: 0 success, 1 a
verification or run failure, 2 bad usage or config.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .runner import (
    ConfigError,
    RunSettings,
    default_settings,
    load_run_config,
    run_analyze,
    run_evolve,
    run_replay,
    run_simulate,
)

__all__ = ["build_parser", "main"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polis",
        description="Grid-society episodes, constitution evolution, and log analysis.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser(
        "simulate", help="run scripted episodes under one constitution"
    )
    sim.add_argument(
        "constitution",
        help="baseline name (zero_sum, hhh, llm_generated, c_star) or rulebook YAML path",
    )
    sim.add_argument("--episodes", type=int, default=30)
    sim.add_argument("--seed", type=int, default=42, help="base seed; episode i uses seed+i")
    sim.add_argument("--out", required=True, help="directory for episode logs")
    sim.add_argument("--label", default=None, help="label recorded in log metadata")
    sim.add_argument("--config", default=None, help="run config YAML (world section applies)")

    evo = sub.add_parser("evolve", help="evolve constitutions with island search")
    evo.add_argument("--config", default=None, help="run config YAML")
    evo.add_argument("--out", required=True, help="directory for run artifacts")
    evo.add_argument(
        "--mutator",
        choices=("mock", "llm"),
        default="mock",
        help="structural edits (mock) or chat-endpoint rewrites (llm)",
    )
    evo.add_argument(
        "--initial",
        default=None,
        help="starting constitution: baseline name or YAML path (default: hhh)",
    )
    evo.add_argument(
        "--no-episode-logs",
        action="store_true",
        help="skip writing per-evaluation episode logs",
    )
    evo.add_argument("--iterations", type=int, default=None, help="override max_iterations")
    evo.add_argument("--seed", type=int, default=None, help="override random_seed")

    ana = sub.add_parser("analyze", help="score logs and render comparison tables")
    ana.add_argument("logs", nargs="+", help="log files or directories of .jsonl logs")
    ana.add_argument("--out", default=None, help="directory for report.txt / report.json")
    ana.add_argument("--level", type=float, default=0.95, help="confidence level")

    rep = sub.add_parser("replay", help="re-execute logs and verify state hashes")
    rep.add_argument("logs", nargs="+", help="log files or directories of .jsonl logs")

    return parser


def _settings(args: argparse.Namespace) -> RunSettings:
    if getattr(args, "config", None):
        return load_run_config(args.config)
    return default_settings()


def _cmd_simulate(args: argparse.Namespace) -> int:
    settings = _settings(args)
    result = run_simulate(
        source=args.constitution,
        episodes=args.episodes,
        base_seed=args.seed,
        out_dir=args.out,
        world=settings.world,
        label=args.label,
    )
    print(
        f"{result.label}: {len(result.paths)} episodes, "
        f"mean score {result.mean_score:.3f}, logs in {args.out}"
    )
    return 0


def _cmd_evolve(args: argparse.Namespace) -> int:
    settings = _settings(args)
    evolution = settings.evolution
    if args.iterations is not None:
        evolution = replace(evolution, max_iterations=args.iterations)
    if args.seed is not None:
        evolution = replace(evolution, random_seed=args.seed)
    settings = replace(settings, evolution=evolution)
    result = run_evolve(
        settings,
        args.out,
        mutator=args.mutator,
        initial=args.initial,
        write_episode_logs=not args.no_episode_logs,
    )
    stopped = " (stopped early)" if result.stopped_early else ""
    cells = sum(isl.elite_map.occupancy for isl in result.islands)
    print(
        f"best {result.best.label}: fitness {result.best.fitness:.3f} "
        f"after {result.iterations_run} iterations{stopped}; "
        f"archives hold {cells} cells; artifacts in {args.out}"
    )
    if result.failures:
        print(f"note: {result.failures} evaluation failures scored as 0", file=sys.stderr)
    return 0


def _cmd_analyze(args: argparse.Namespace) -> int:
    result = run_analyze(args.logs, out_dir=args.out, level=args.level)
    print(result.report_text, end="")
    for warning in result.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    if args.out:
        print(f"report written to {args.out}")
    return 0


def _cmd_replay(args: argparse.Namespace) -> int:
    reports = run_replay(args.logs)
    failures = 0
    for path, report in reports:
        if report.verified:
            print(f"ok   {path}")
        else:
            failures += 1
            where = (
                f"turn {report.first_divergence}"
                if report.first_divergence is not None
                else "header/footer"
            )
            print(f"FAIL {path}: diverged at {where}: {report.detail}")
    print(f"{len(reports) - failures}/{len(reports)} logs verified")
    return 0 if failures == 0 else 1


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "simulate": _cmd_simulate,
        "evolve": _cmd_evolve,
        "analyze": _cmd_analyze,
        "replay": _cmd_replay,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
