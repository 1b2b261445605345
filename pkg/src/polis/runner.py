"""File-level workflows behind the CLI verbs.

Four entry points: simulate a batch of episodes for one constitution,
evolve a population of constitutions, analyze directories of episode
logs into a report, and replay logs to verify their recorded hashes.
All outputs are deterministic for a fixed config: seeds derive from a
base seed, logs are canonical JSON lines, and reports carry no
timestamps.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import yaml

from .baselines import BASELINE_NAMES, baseline
from .constitution import (
    Constitution,
    load_constitution,
    serialize_constitution,
)
from .evolution import (
    EvolutionConfig,
    EvolutionResult,
    LLMMutator,
    MockMutator,
    Mutator,
    ScriptedEvaluator,
    evolve,
)
from .logio import read_log, write_log
from .policies import ScriptedPolicy
from .reports import LabelSummary, render_report, report_json, summarize_label
from .scoring import Coefficients, DEFAULT_COEFFICIENTS, trajectory_metrics
from .world import EngineError, ReplayReport, WorldConfig, replay_episode, run_episode

__all__ = [
    "AnalysisResult",
    "RunSettings",
    "SimulateResult",
    "default_settings",
    "load_run_config",
    "resolve_constitution",
    "run_analyze",
    "run_evolve",
    "run_replay",
    "run_simulate",
    "settings_to_obj",
]


class ConfigError(ValueError):
    """A run config file is malformed or inconsistent."""


@dataclass(frozen=True)
class RunSettings:
    evolution: EvolutionConfig = field(default_factory=EvolutionConfig)
    world: WorldConfig = field(default_factory=WorldConfig)
    llm: dict = field(default_factory=dict)
    episodes: int = 30
    base_seed: int = 42


def default_settings() -> RunSettings:
    return RunSettings()


_GENERAL_KEYS = {
    "max_iterations": "max_iterations",
    "random_seed": "random_seed",
    "early_stopping_patience": "early_stopping_patience",
    "convergence_threshold": "convergence_threshold",
}
_ISLAND_KEYS = {
    "num_islands": "num_islands",
    "population_size": "population_size",
    "topology": "topology",
}
_MIGRATION_KEYS = {
    "interval": "migration_interval",
    "rate": "migration_rate",
    "selection": "migration_selection",
}
_SELECTION_KEYS = {
    "elite_ratio": "elite_ratio",
    "exploitation_ratio": "exploitation_ratio",
    "exploration_ratio": "exploration_ratio",
}
_EVALUATION_KEYS = {
    "num_runs": "eval_runs",  # file key differs from the field name
    "timeout_seconds": "timeout_seconds",
}
_WORLD_KEYS = (
    "width",
    "height",
    "horizon",
    "overseer_interval",
    "attack_success_prob",
    "steal_success_prob",
    "carry_capacity",
    "respawn_enabled",
    "respawn_prob",
)
_RUN_KEYS = ("episodes", "base_seed")
_LLM_KEYS = ("model", "temperature", "top_p")

SUPPORTED_DIMENSIONS = ["complexity", "combined_score"]


def _take_section(data: dict, name: str) -> dict:
    section = data.get(name, {})
    if section is None:
        return {}
    if not isinstance(section, dict):
        raise ConfigError(f"section {name!r} must be a mapping")
    return section


def _apply_keys(section: dict, key_map: dict[str, str], where: str, out: dict) -> None:
    for key, value in section.items():
        if key not in key_map:
            raise ConfigError(f"unknown key {where}.{key}")
        out[key_map[key]] = value


def load_run_config(path: str | Path) -> RunSettings:
    """Parse a YAML run config.

    Recognized sections: general, islands, migration, selection,
    feature_map, evaluation, llm, world, run. Unknown keys anywhere
    are errors; a missing section keeps its defaults. Credentials
    never appear here; the endpoint is configured by environment
    variables only.
    """
    raw = Path(path).read_text(encoding="utf-8")
    data = yaml.safe_load(raw)
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("run config must be a YAML mapping")
    known_sections = {
        "general",
        "islands",
        "migration",
        "selection",
        "feature_map",
        "evaluation",
        "llm",
        "world",
        "run",
    }
    unknown = sorted(set(data) - known_sections)
    if unknown:
        raise ConfigError(f"unknown sections: {', '.join(unknown)}")

    evo_kwargs: dict = {}
    _apply_keys(_take_section(data, "general"), _GENERAL_KEYS, "general", evo_kwargs)
    _apply_keys(_take_section(data, "islands"), _ISLAND_KEYS, "islands", evo_kwargs)
    _apply_keys(_take_section(data, "migration"), _MIGRATION_KEYS, "migration", evo_kwargs)
    _apply_keys(_take_section(data, "selection"), _SELECTION_KEYS, "selection", evo_kwargs)
    _apply_keys(_take_section(data, "evaluation"), _EVALUATION_KEYS, "evaluation", evo_kwargs)

    feature_map = _take_section(data, "feature_map")
    for key, value in feature_map.items():
        if key == "dimensions":
            if list(value) != SUPPORTED_DIMENSIONS:
                raise ConfigError(
                    f"feature_map.dimensions must be {SUPPORTED_DIMENSIONS}, got {value!r}"
                )
        elif key == "bins":
            evo_kwargs["feature_bins"] = value
        else:
            raise ConfigError(f"unknown key feature_map.{key}")

    llm_section = _take_section(data, "llm")
    for key in llm_section:
        if key not in _LLM_KEYS:
            raise ConfigError(f"unknown key llm.{key}")

    world_section = _take_section(data, "world")
    for key in world_section:
        if key not in _WORLD_KEYS:
            raise ConfigError(f"unknown key world.{key}")

    run_section = _take_section(data, "run")
    for key in run_section:
        if key not in _RUN_KEYS:
            raise ConfigError(f"unknown key run.{key}")

    try:
        evolution = EvolutionConfig(**evo_kwargs)
        evolution.validate()
        world = WorldConfig(**world_section)
        world.validate()
    except (TypeError, ValueError, EngineError) as exc:
        raise ConfigError(str(exc)) from exc

    return RunSettings(
        evolution=evolution,
        world=world,
        llm=dict(llm_section),
        episodes=int(run_section.get("episodes", 30)),
        base_seed=int(run_section.get("base_seed", evolution.random_seed)),
    )


def settings_to_obj(settings: RunSettings) -> dict:
    """Round-trippable plain-object form, section names as on disk."""
    e = settings.evolution
    w = settings.world
    return {
        "general": {
            "max_iterations": e.max_iterations,
            "random_seed": e.random_seed,
            "early_stopping_patience": e.early_stopping_patience,
            "convergence_threshold": e.convergence_threshold,
        },
        "islands": {
            "num_islands": e.num_islands,
            "population_size": e.population_size,
            "topology": e.topology,
        },
        "migration": {
            "interval": e.migration_interval,
            "rate": e.migration_rate,
            "selection": e.migration_selection,
        },
        "selection": {
            "elite_ratio": e.elite_ratio,
            "exploitation_ratio": e.exploitation_ratio,
            "exploration_ratio": e.exploration_ratio,
        },
        "feature_map": {
            "dimensions": list(SUPPORTED_DIMENSIONS),
            "bins": e.feature_bins,
        },
        "evaluation": {
            "num_runs": e.eval_runs,
            "timeout_seconds": e.timeout_seconds,
        },
        "llm": dict(settings.llm),
        "world": {
            "width": w.width,
            "height": w.height,
            "horizon": w.horizon,
            "overseer_interval": w.overseer_interval,
            "attack_success_prob": w.attack_success_prob,
            "steal_success_prob": w.steal_success_prob,
            "carry_capacity": w.carry_capacity,
            "respawn_enabled": w.respawn_enabled,
            "respawn_prob": w.respawn_prob,
        },
        "run": {"episodes": settings.episodes, "base_seed": settings.base_seed},
    }


# ---------------------------------------------------------------------------
# simulate


def resolve_constitution(source: str) -> Constitution:
    """A baseline name, or a path to a rulebook YAML file."""
    if source in BASELINE_NAMES:
        return baseline(source)
    path = Path(source)
    if path.exists():
        return load_constitution(str(path))
    raise ConfigError(
        f"{source!r} is neither a baseline ({', '.join(BASELINE_NAMES)}) "
        "nor an existing file"
    )


@dataclass(frozen=True)
class SimulateResult:
    label: str
    paths: tuple[str, ...]
    mean_score: float
    scores: tuple[float, ...]


def run_simulate(
    source: str,
    episodes: int,
    base_seed: int,
    out_dir: str | Path,
    world: WorldConfig | None = None,
    label: str | None = None,
    coefficients: Coefficients = DEFAULT_COEFFICIENTS,
) -> SimulateResult:
    """Run `episodes` scripted episodes under one constitution, seeds
    base_seed..base_seed+episodes-1, writing one log file each."""
    if episodes < 1:
        raise ConfigError("episodes must be positive")
    constitution = resolve_constitution(source)
    label = label or constitution.label
    config = world or WorldConfig()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths: list[str] = []
    scores: list[float] = []
    for i in range(episodes):
        seed = base_seed + i
        policies = {
            agent_id: ScriptedPolicy(constitution)
            for _, members in config.teams
            for agent_id in members
        }
        log = run_episode(
            config,
            policies,
            seed,
            meta={"label": label, "episode": str(i)},
        )
        path = out / f"{label}-{seed:08d}.jsonl"
        write_log(log, str(path))
        paths.append(str(path))
        scores.append(trajectory_metrics(log, coefficients).score)
    return SimulateResult(
        label=label,
        paths=tuple(paths),
        mean_score=sum(scores) / len(scores),
        scores=tuple(scores),
    )


# ---------------------------------------------------------------------------
# evolve


def _build_mutator(kind: str, settings: RunSettings) -> Mutator:
    if kind == "mock":
        return MockMutator(max_rules=settings.evolution.max_rules)
    if kind == "llm":
        from .llm import ChatClient

        overrides = {k: v for k, v in settings.llm.items() if k in _LLM_KEYS}
        client = ChatClient.from_env(**overrides)
        return LLMMutator(client, max_rules=settings.evolution.max_rules)
    raise ConfigError(f"unknown mutator {kind!r} (expected 'mock' or 'llm')")


DEFAULT_INITIAL = "hhh"


def run_evolve(
    settings: RunSettings,
    out_dir: str | Path,
    mutator: str | Mutator = "mock",
    initial: str | None = None,
    write_episode_logs: bool = True,
) -> EvolutionResult:
    """Evolve constitutions from one starting rulebook and write the
    run's artifacts.

    Output files: config.yaml (settings snapshot), history.jsonl (one
    record per iteration), migrations.jsonl, archive.json (every
    island's elite map), best.yaml (the best rulebook found),
    best.json (its fitness and origin), and episodes/ holding every
    evaluation episode's log.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    start = resolve_constitution(initial or DEFAULT_INITIAL)
    chosen = mutator if not isinstance(mutator, str) else _build_mutator(mutator, settings)
    evaluator = ScriptedEvaluator(
        world_config=settings.world,
        log_dir=(out / "episodes") if write_episode_logs else None,
    )
    result = evolve(settings.evolution, start, evaluator, chosen)

    (out / "config.yaml").write_text(
        yaml.safe_dump(settings_to_obj(settings), sort_keys=False), encoding="utf-8"
    )
    with (out / "history.jsonl").open("w", encoding="utf-8") as fh:
        for record in result.history:
            fh.write(
                json.dumps(
                    {
                        "iteration": record.iteration,
                        "best_fitness": record.best_fitness,
                        "mean_fitness": record.mean_fitness,
                        "archive_occupancy": record.archive_occupancy,
                        "island_best": list(record.island_best),
                        "best_label": record.best_label,
                    },
                    sort_keys=True,
                )
                + "\n"
            )
    with (out / "migrations.jsonl").open("w", encoding="utf-8") as fh:
        for report in result.migrations:
            fh.write(
                json.dumps(
                    {
                        "iteration": report.iteration,
                        "moves": [
                            {
                                "source": src,
                                "dest": dst,
                                "label": label,
                                "fitness": fitness,
                            }
                            for src, dst, label, fitness in report.moves
                        ],
                    },
                    sort_keys=True,
                )
                + "\n"
            )
    archive_obj = {
        str(island.id): {
            f"{cell[0]},{cell[1]}": {
                "label": cand.label,
                "fitness": cand.fitness,
                "components": list(cand.components) if cand.components else None,
                "rules": list(cand.constitution.rule_names()),
                "iteration": cand.iteration,
                "parent": cand.parent_label,
            }
            for cell, cand in sorted(island.elite_map.cells.items())
        }
        for island in result.islands
    }
    (out / "archive.json").write_text(
        json.dumps(archive_obj, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    (out / "best.yaml").write_text(
        serialize_constitution(result.best.constitution), encoding="utf-8"
    )
    (out / "best.json").write_text(
        json.dumps(
            {
                "label": result.best.label,
                "fitness": result.best.fitness,
                "components": list(result.best.components)
                if result.best.components
                else None,
                "parent": result.best.parent_label,
                "iterations_run": result.iterations_run,
                "stopped_early": result.stopped_early,
                "evaluator_failures": result.failures,
            },
            indent=2,
            sort_keys=True,
        )
        + "\n",
        encoding="utf-8",
    )
    return result


# ---------------------------------------------------------------------------
# analyze


@dataclass(frozen=True)
class AnalysisResult:
    summaries: tuple[LabelSummary, ...]
    warnings: tuple[str, ...]
    report_text: str
    report: dict
    episodes_read: int


def _log_files(paths: Sequence[str | Path]) -> list[Path]:
    files: list[Path] = []
    for p in paths:
        path = Path(p)
        if path.is_dir():
            files.extend(sorted(path.glob("*.jsonl")))
        elif path.exists():
            files.append(path)
        else:
            raise ConfigError(f"no such log path: {path}")
    return files


def run_analyze(
    log_paths: Sequence[str | Path],
    out_dir: str | Path | None = None,
    coefficients: Coefficients = DEFAULT_COEFFICIENTS,
    level: float = 0.95,
) -> AnalysisResult:
    """Score every log, group by the label recorded in its metadata,
    and render comparison tables. Damaged turn lines are skipped with
    a warning rather than sinking the whole analysis."""
    files = _log_files(log_paths)
    if not files:
        raise ConfigError("no .jsonl logs found")
    by_label: dict[str, list] = {}
    warnings: list[str] = []
    episodes = 0
    for path in files:
        try:
            result = read_log(str(path), strict=False)
        except Exception as exc:
            warnings.append(f"{path}: unreadable ({exc})")
            continue
        warnings.extend(f"{path}: {w}" for w in result.warnings)
        label = result.log.meta.get("label", "unlabelled")
        by_label.setdefault(label, []).append(
            trajectory_metrics(result.log, coefficients)
        )
        episodes += 1
    if not by_label:
        raise ConfigError("no readable logs among the given paths")
    summaries = tuple(
        summarize_label(label, metrics, level)
        for label, metrics in sorted(by_label.items())
    )
    text = render_report(list(summaries), coefficients, level)
    payload = report_json(list(summaries), coefficients)
    payload["warnings"] = list(warnings)
    payload["episodes_read"] = episodes
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.txt").write_text(text, encoding="utf-8")
        (out / "report.json").write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    return AnalysisResult(
        summaries=summaries,
        warnings=tuple(warnings),
        report_text=text,
        report=payload,
        episodes_read=episodes,
    )


# ---------------------------------------------------------------------------
# replay


def run_replay(log_paths: Sequence[str | Path]) -> list[tuple[str, ReplayReport]]:
    """Re-execute each log's recorded actions and verify every stored
    state hash. Returns one report per file."""
    files = _log_files(log_paths)
    if not files:
        raise ConfigError("no .jsonl logs found")
    reports: list[tuple[str, ReplayReport]] = []
    for path in files:
        try:
            result = read_log(str(path), strict=True)
        except Exception as exc:
            reports.append(
                (str(path), ReplayReport(verified=False, first_divergence=None, detail=str(exc)))
            )
            continue
        reports.append((str(path), replay_episode(result.log)))
    return reports
