"""Population search over constitutions.

Three islands evolve in parallel lockstep, each owning its population
and its own 8x8 elite archive keyed by rule count and score band.
Every iteration an island picks a parent (elite / fitness-weighted /
exploration mixture), mutates it with performance feedback attached,
scores the child on K seeded episodes, and keeps its best
`population_size` members. On a fixed interval the top members
migrate one step around a ring. Search stops at the iteration cap or
when the running best plateaus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from random import Random
from typing import Protocol, Sequence

from .constitution import (
    Constitution,
    Directive,
    MoralRule,
    validate_constitution,
)
from .scoring import Coefficients, DEFAULT_COEFFICIENTS
from .seeding import child_rng, child_seed

__all__ = [
    "Candidate",
    "EliteMap",
    "EvaluationOutcome",
    "Evaluator",
    "EvolutionConfig",
    "EvolutionResult",
    "Feedback",
    "Island",
    "IterationRecord",
    "LLMMutator",
    "MigrationReport",
    "MockMutator",
    "Mutator",
    "ScriptedEvaluator",
    "evolve",
    "migrate",
    "select_parent",
    "should_stop",
]

SCORE_CEILING = 0.6  # densest achievable score; bins the second archive axis
FITNESS_FLOOR = 1e-6  # keeps proportional-selection weights positive


@dataclass(frozen=True)
class EvolutionConfig:
    max_iterations: int = 30
    random_seed: int = 42
    early_stopping_patience: int = 10
    convergence_threshold: float = 0.05
    num_islands: int = 3
    population_size: int = 10
    topology: str = "ring"
    migration_interval: int = 5
    migration_rate: float = 0.2
    migration_selection: str = "best"
    elite_ratio: float = 0.3
    exploitation_ratio: float = 0.6
    exploration_ratio: float = 0.1
    feature_bins: int = 8
    eval_runs: int = 2
    timeout_seconds: float = 300.0
    max_rules: int = 12

    def validate(self) -> None:
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")
        if self.num_islands < 1 or self.population_size < 1:
            raise ValueError("islands and population must be positive")
        if self.topology != "ring":
            raise ValueError(f"unsupported topology {self.topology!r}")
        if self.migration_selection != "best":
            raise ValueError(
                f"unsupported migration selection {self.migration_selection!r}"
            )
        if self.migration_interval < 1:
            raise ValueError("migration_interval must be positive")
        if not 0.0 < self.migration_rate <= 1.0:
            raise ValueError("migration_rate must lie in (0, 1]")
        total = self.elite_ratio + self.exploitation_ratio + self.exploration_ratio
        if abs(total - 1.0) > 1e-9:
            raise ValueError("selection ratios must sum to 1")
        if self.feature_bins < 1:
            raise ValueError("feature_bins must be positive")
        if self.eval_runs < 1:
            raise ValueError("eval_runs must be positive")


@dataclass(frozen=True)
class Feedback:
    """What a mutator learns about the parent's performance."""

    fitness: float
    components: tuple[float, float, float] | None = None
    behavior: dict[str, float] | None = None


@dataclass(frozen=True)
class Candidate:
    constitution: Constitution
    fitness: float
    components: tuple[float, float, float] | None
    behavior: dict[str, float] | None
    island: int
    iteration: int
    parent_label: str | None = None
    evaluator_failed: bool = False
    mutator_fallback: bool = False

    @property
    def label(self) -> str:
        return self.constitution.label

    @property
    def feedback(self) -> Feedback:
        return Feedback(
            fitness=self.fitness,
            components=self.components,
            behavior=self.behavior,
        )


class EliteMap:
    """Best-candidate-per-cell archive over (rule count, score band)."""

    def __init__(self, bins: int = 8, score_ceiling: float = SCORE_CEILING):
        if bins < 1:
            raise ValueError("bins must be positive")
        self.bins = bins
        self.score_ceiling = score_ceiling
        self.cells: dict[tuple[int, int], Candidate] = {}

    def feature_descriptor(self, candidate: Candidate) -> tuple[int, int]:
        complexity = len(candidate.constitution.rules)
        c_bin = min(max(complexity - 1, 0), self.bins - 1)
        scaled = math.floor(candidate.fitness / self.score_ceiling * self.bins)
        s_bin = min(max(scaled, 0), self.bins - 1)
        return (c_bin, s_bin)

    def try_insert(self, candidate: Candidate) -> bool:
        """Place the candidate iff its cell is empty or strictly beaten;
        ties keep the incumbent."""
        cell = self.feature_descriptor(candidate)
        held = self.cells.get(cell)
        if held is None or candidate.fitness > held.fitness:
            self.cells[cell] = candidate
            return True
        return False

    @property
    def occupancy(self) -> int:
        return len(self.cells)

    def ranked(self) -> list[Candidate]:
        return sorted(self.cells.values(), key=lambda c: (-c.fitness, c.label))

    def best(self) -> Candidate | None:
        if not self.cells:
            return None
        return max(self.cells.values(), key=lambda c: (c.fitness, c.label))

    def random_cell(self, rng: Random) -> Candidate | None:
        if not self.cells:
            return None
        key = rng.choice(sorted(self.cells))
        return self.cells[key]


@dataclass
class Island:
    id: int
    population: list[Candidate] = field(default_factory=list)
    elite_map: EliteMap = field(default_factory=EliteMap)

    def admit(self, candidate: Candidate, size_bound: int) -> None:
        """Add to the population (evicting the worst past the bound)
        and offer to the archive."""
        self.population = _ranked(self.population + [candidate])[:size_bound]
        self.elite_map.try_insert(candidate)


def _ranked(population: Sequence[Candidate]) -> list[Candidate]:
    # Newer candidates win fitness ties. On a flat stretch of the
    # landscape the population then keeps turning over instead of
    # freezing on whichever labels sorted first, so multi-edit
    # lineages can still accumulate.
    return sorted(population, key=lambda c: (-c.fitness, -c.iteration, c.label))


def select_parent(island: Island, rng: Random, config: EvolutionConfig) -> Candidate:
    """Mixture selection: elite draws uniformly from the archive's top
    30% by fitness, exploitation draws fitness-proportionally from the
    population (floored weights), exploration draws uniformly over
    archive cells."""
    if not island.population:
        raise ValueError(f"island {island.id} has an empty population")
    roll = rng.random()
    if roll < config.elite_ratio:
        archived = island.elite_map.ranked()
        if archived:
            cut = max(1, math.ceil(config.elite_ratio * len(archived)))
            return rng.choice(archived[:cut])
        return rng.choice(_ranked(island.population))
    if roll < config.elite_ratio + config.exploitation_ratio:
        weights = [max(c.fitness, FITNESS_FLOOR) for c in island.population]
        return rng.choices(island.population, weights=weights, k=1)[0]
    choice = island.elite_map.random_cell(rng)
    if choice is None:
        return rng.choice(island.population)
    return choice


@dataclass(frozen=True)
class MigrationReport:
    iteration: int
    moves: tuple[tuple[int, int, str, float], ...]  # (source, dest, label, fitness)

    @property
    def per_island(self) -> dict[int, int]:
        counts: dict[int, int] = {}
        for source, _, _, _ in self.moves:
            counts[source] = counts.get(source, 0) + 1
        return counts


def migrate(islands: list[Island], config: EvolutionConfig, iteration: int = 0) -> MigrationReport:
    """Ring migration: each island copies its top ceil(rate * size)
    members to the next island over, which evicts its worst past the
    size bound. Copies, not moves; duplicates on the destination are
    allowed. A single island migrates nowhere."""
    if len(islands) < 2:
        return MigrationReport(iteration=iteration, moves=())
    count = max(1, math.ceil(config.migration_rate * config.population_size))
    emigrants = {isl.id: _ranked(isl.population)[:count] for isl in islands}
    moves: list[tuple[int, int, str, float]] = []
    arrivals: dict[int, list[Candidate]] = {isl.id: [] for isl in islands}
    n = len(islands)
    for isl in islands:
        dest = (isl.id + 1) % n
        for cand in emigrants[isl.id]:
            arrivals[dest].append(replace(cand, island=dest))
            moves.append((isl.id, dest, cand.label, cand.fitness))
    for isl in islands:
        isl.population = _ranked(isl.population + arrivals[isl.id])[
            : config.population_size
        ]
    return MigrationReport(iteration=iteration, moves=tuple(moves))


def should_stop(best_history: Sequence[float], patience: int, threshold: float) -> bool:
    """Stop once the running best improved by less than `threshold`
    over the last `patience` iterations."""
    if patience <= 0 or len(best_history) < patience:
        return False
    if len(best_history) > patience:
        baseline = best_history[-(patience + 1)]
    else:
        baseline = best_history[0]
    return best_history[-1] - baseline < threshold


# ---------------------------------------------------------------------------
# Evaluation


@dataclass(frozen=True)
class EvaluationOutcome:
    fitness: float
    components: tuple[float, float, float] | None = None
    behavior: dict[str, float] | None = None


class Evaluator(Protocol):
    def evaluate(
        self, constitution: Constitution, seeds: Sequence[int]
    ) -> EvaluationOutcome: ...


class ScriptedEvaluator:
    """Scores a constitution by running full episodes in which all six
    agents follow its compiled scripted policy, averaging episode
    scores over the given seeds. With `log_dir` set, every episode log
    is written there, named by the candidate label and seed index."""

    def __init__(
        self,
        world_config=None,
        coefficients: Coefficients = DEFAULT_COEFFICIENTS,
        log_dir=None,
    ):
        from .world import WorldConfig

        self.world_config = world_config or WorldConfig()
        self.coefficients = coefficients
        self.log_dir = log_dir

    def evaluate(
        self, constitution: Constitution, seeds: Sequence[int]
    ) -> EvaluationOutcome:
        from .policies import ScriptedPolicy
        from .scoring import BEHAVIOR_CLASSES, trajectory_metrics
        from .world import run_episode

        scores: list[float] = []
        comps: list[tuple[float, float, float]] = []
        behaviors: list[dict[str, float]] = []
        for k, seed in enumerate(seeds):
            policies = {
                agent_id: ScriptedPolicy(constitution)
                for _, members in self.world_config.teams
                for agent_id in members
            }
            log = run_episode(
                self.world_config,
                policies,
                seed,
                meta={"label": constitution.label, "k": str(k)},
            )
            if self.log_dir is not None:
                from pathlib import Path

                from .logio import write_log

                out = Path(self.log_dir)
                out.mkdir(parents=True, exist_ok=True)
                write_log(log, str(out / f"{constitution.label}-k{k}.jsonl"))
            metrics = trajectory_metrics(log, self.coefficients)
            scores.append(metrics.score)
            comps.append(metrics.components)
            behaviors.append(metrics.behavior.fractions)

        def mean(xs: Sequence[float]) -> float:
            return sum(xs) / len(xs)

        return EvaluationOutcome(
            fitness=mean(scores),
            components=(
                mean([c[0] for c in comps]),
                mean([c[1] for c in comps]),
                mean([c[2] for c in comps]),
            ),
            behavior={
                cls: mean([b[cls] for b in behaviors]) for cls in BEHAVIOR_CLASSES
            },
        )


# ---------------------------------------------------------------------------
# Mutation


class Mutator(Protocol):
    def mutate(
        self, parent: Constitution, feedback: Feedback | None, rng: Random
    ) -> Constitution: ...


_RULE_BANK: tuple[MoralRule, ...] = (
    MoralRule(
        name="deposit_promptly",
        guidance="Carry resources straight to your team's project and deposit "
        "them at once; stockpiles in pockets build nothing.",
        summary="Deposit carried resources immediately.",
        priority=1,
        directives=(Directive("deposit_first"),),
    ),
    MoralRule(
        name="gather_what_is_needed",
        guidance="Gather from the tile you stand on whenever it holds a resource "
        "your project still lacks.",
        summary="Gather resources the project still needs.",
        priority=2,
        directives=(Directive("gather_needed"),),
    ),
    MoralRule(
        name="close_the_largest_gap",
        guidance="When idle, move toward the nearest known source of whichever "
        "resource your project is furthest from completing.",
        summary="Head for the largest remaining deficit.",
        priority=3,
        directives=(Directive("seek_largest_deficit"),),
    ),
    MoralRule(
        name="report_rich_tiles",
        guidance="Broadcast the location of any tile holding two or more units "
        "your team needs, once per tile.",
        summary="Announce rich tiles to the team.",
        priority=4,
        directives=(Directive("broadcast_threshold", threshold=2),),
    ),
    MoralRule(
        name="share_surplus",
        guidance="Give resources you cannot use to an adjacent teammate rather "
        "than letting them sit idle.",
        summary="Hand surplus to teammates.",
        priority=5,
        directives=(Directive("give_surplus"),),
    ),
    MoralRule(
        name="defend_only",
        guidance="Never strike first; respond in kind only if you were attacked "
        "on the previous turn and the attacker is in view.",
        summary="Fight back only when attacked.",
        priority=6,
        directives=(Directive("aggression", mode="retaliate"),),
    ),
    MoralRule(
        name="harm_no_one",
        guidance="Do not attack or steal under any circumstances.",
        summary="Renounce all aggression.",
        priority=7,
        directives=(Directive("aggression", mode="never"),),
    ),
    MoralRule(
        name="strike_first",
        guidance="Attack any rival you can reach before they can act against you.",
        summary="Attack rivals on sight.",
        priority=8,
        directives=(Directive("aggression", mode="always"),),
    ),
    MoralRule(
        name="hold_reserves",
        guidance="Hoard what you collect and delay deposits until the final "
        "stretch so rivals cannot read your progress.",
        summary="Delay deposits, keep reserves.",
        priority=9,
        directives=(Directive("hoard"),),
    ),
    MoralRule(
        name="pause_when_unsure",
        guidance="When no rule applies, rest and observe rather than acting at "
        "random.",
        summary="Rest when nothing else applies.",
        priority=10,
        directives=(Directive("rest_bias"),),
    ),
)

_AGGRESSION_CYCLE = {"never": "retaliate", "retaliate": "never", "always": "retaliate"}


def _renumber(rules: Sequence[MoralRule]) -> tuple[MoralRule, ...]:
    ordered = sorted(rules, key=lambda r: r.priority)
    return tuple(replace(rule, priority=i) for i, rule in enumerate(ordered, start=1))


class MockMutator:
    """Deterministic structural edits drawn from a fixed rule bank.

    One edit per call: add a bank rule the parent lacks, drop a rule,
    swap two adjacent priorities, retune an aggression mode, or nudge
    a broadcast threshold. Priorities are renumbered 1..n afterward.
    Feedback is accepted for interface parity and ignored.
    """

    def __init__(self, max_rules: int = 12):
        self.max_rules = max_rules

    def mutate(
        self, parent: Constitution, feedback: Feedback | None, rng: Random
    ) -> Constitution:
        del feedback
        rules = list(parent.rules)
        present = {r.name for r in rules}
        modes = {d.mode for r in rules for d in r.directives if d.kind == "aggression"}
        addable = [
            r
            for r in _RULE_BANK
            if r.name not in present
            # A bank rule carrying a different aggression stance would make
            # the child contradict itself; skip those candidates.
            and all(
                d.kind != "aggression" or not modes or d.mode in modes
                for d in r.directives
            )
        ]
        ops: list[str] = []
        if addable and len(rules) < self.max_rules:
            ops.append("add")
        if len(rules) > 1:
            ops.extend(["drop", "swap"])
        if any(d.kind == "aggression" for r in rules for d in r.directives):
            ops.append("retune_aggression")
        if any(d.kind == "broadcast_threshold" for r in rules for d in r.directives):
            ops.append("adjust_threshold")
        if not ops:
            # Single-rule parent with the whole bank already present; the
            # stock bank makes this unreachable, but stay total anyway.
            ops.append("swap")

        op = rng.choice(sorted(set(ops)))
        if op == "add":
            new_rule = rng.choice(addable)
            rules.append(replace(new_rule, priority=len(rules) + 1))
        elif op == "drop":
            del rules[rng.randrange(len(rules))]
        elif op == "swap" and len(rules) > 1:
            i = rng.randrange(len(rules) - 1)
            a, b = rules[i], rules[i + 1]
            rules[i], rules[i + 1] = (
                replace(b, priority=a.priority),
                replace(a, priority=b.priority),
            )
        elif op == "retune_aggression":
            # Flip every aggression directive in lockstep so the stance
            # stays consistent across rules.
            target = _AGGRESSION_CYCLE[sorted(modes)[0]]
            for idx, rule in enumerate(rules):
                if any(d.kind == "aggression" for d in rule.directives):
                    flipped = tuple(
                        Directive("aggression", mode=target)
                        if d.kind == "aggression"
                        else d
                        for d in rule.directives
                    )
                    rules[idx] = replace(rule, directives=flipped)
        elif op == "adjust_threshold":
            for idx, rule in enumerate(rules):
                if any(d.kind == "broadcast_threshold" for d in rule.directives):
                    delta = rng.choice([-1, 1])
                    tuned = tuple(
                        Directive(
                            "broadcast_threshold",
                            threshold=max(1, d.threshold + delta),
                        )
                        if d.kind == "broadcast_threshold"
                        else d
                        for d in rule.directives
                    )
                    rules[idx] = replace(rule, directives=tuned)
                    break

        child = Constitution(
            label=parent.label, rules=_renumber(rules), provenance="mutated"
        )
        problems = validate_constitution(child)
        if problems:
            # A structural edit must never produce an invalid rulebook.
            raise AssertionError(f"mutation produced invalid constitution: {problems}")
        return child


class LLMMutator:
    """Asks a chat model to rewrite the parent's rulebook, feeding it
    the parent's performance summary; falls back to a structural edit
    when the reply cannot be parsed twice. `last_was_fallback` reports
    how the most recent child was produced."""

    def __init__(self, client, max_rules: int = 12):
        self.client = client
        self.fallback = MockMutator(max_rules=max_rules)
        self.fallback_count = 0
        self.last_was_fallback = False

    def mutate(
        self, parent: Constitution, feedback: Feedback | None, rng: Random
    ) -> Constitution:
        from .llm import mutation_prompt, parse_constitution_reply

        self.last_was_fallback = False
        prompt = mutation_prompt(parent, feedback)
        for _ in range(2):
            try:
                reply = self.client.complete(prompt)
                child = parse_constitution_reply(reply, label=parent.label)
                if not validate_constitution(child):
                    return child
            except Exception:
                continue
        self.fallback_count += 1
        self.last_was_fallback = True
        return self.fallback.mutate(parent, feedback, rng)


# ---------------------------------------------------------------------------
# The outer loop


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    best_fitness: float
    mean_fitness: float
    archive_occupancy: int  # summed over islands
    island_best: tuple[float, ...]
    best_label: str


@dataclass
class EvolutionResult:
    best: Candidate
    history: list[IterationRecord]
    islands: list[Island]
    migrations: list[MigrationReport]
    config: EvolutionConfig
    iterations_run: int
    stopped_early: bool
    failures: int = 0

    def archive_best(self) -> Candidate:
        candidates = [b for isl in self.islands if (b := isl.elite_map.best())]
        return max(candidates, key=lambda c: (c.fitness, c.label))


def _evaluate_guarded(
    evaluator: Evaluator, constitution: Constitution, seeds: Sequence[int]
) -> tuple[EvaluationOutcome, bool]:
    try:
        return evaluator.evaluate(constitution, seeds), False
    except Exception:
        return EvaluationOutcome(fitness=0.0), True


def evolve(
    config: EvolutionConfig,
    initial: Constitution,
    evaluator: Evaluator,
    mutator: Mutator,
) -> EvolutionResult:
    """Run the full island search from one starting constitution.

    Every island starts with a scored copy of `initial` (iteration 0
    seeds), then iterates select/mutate/evaluate/admit, migrating on
    the configured interval and stopping early once the running best
    plateaus. Deterministic for a fixed config, evaluator, and
    mutator: every random draw comes from streams derived from
    `random_seed`, and evaluation seeds from (seed, iteration,
    island, k).
    """
    config.validate()
    seed = config.random_seed
    failures = 0

    islands: list[Island] = []
    for i in range(config.num_islands):
        island = Island(id=i, elite_map=EliteMap(bins=config.feature_bins))
        eval_seeds = [
            child_seed(seed, "eval", 0, i, k) for k in range(config.eval_runs)
        ]
        outcome, failed = _evaluate_guarded(evaluator, initial, eval_seeds)
        failures += failed
        island.admit(
            Candidate(
                constitution=initial.relabel(f"{initial.label}@i{i}"),
                fitness=outcome.fitness,
                components=outcome.components,
                behavior=outcome.behavior,
                island=i,
                iteration=0,
                evaluator_failed=failed,
            ),
            config.population_size,
        )
        islands.append(island)

    history: list[IterationRecord] = []
    migrations: list[MigrationReport] = []
    best_history: list[float] = []
    stopped_early = False
    iterations_run = 0

    for iteration in range(1, config.max_iterations + 1):
        iterations_run = iteration
        for island in islands:
            rng = child_rng(seed, "island", island.id, iteration)
            parent = select_parent(island, rng, config)
            child = mutator.mutate(parent.constitution, parent.feedback, rng)
            child = child.relabel(f"g{iteration}-i{island.id}")
            eval_seeds = [
                child_seed(seed, "eval", iteration, island.id, k)
                for k in range(config.eval_runs)
            ]
            outcome, failed = _evaluate_guarded(evaluator, child, eval_seeds)
            failures += failed
            island.admit(
                Candidate(
                    constitution=child,
                    fitness=outcome.fitness,
                    components=outcome.components,
                    behavior=outcome.behavior,
                    island=island.id,
                    iteration=iteration,
                    parent_label=parent.label,
                    evaluator_failed=failed,
                    mutator_fallback=bool(getattr(mutator, "last_was_fallback", False)),
                ),
                config.population_size,
            )

        if iteration % config.migration_interval == 0:
            migrations.append(migrate(islands, config, iteration))

        # The running best reads from the archives, which never evict,
        # so the curve is non-decreasing by construction.
        bests = [b for isl in islands if (b := isl.elite_map.best())]
        best_candidate = max(bests, key=lambda c: (c.fitness, c.label))
        all_members = [c for isl in islands for c in isl.population]
        history.append(
            IterationRecord(
                iteration=iteration,
                best_fitness=best_candidate.fitness,
                mean_fitness=sum(c.fitness for c in all_members) / len(all_members),
                archive_occupancy=sum(isl.elite_map.occupancy for isl in islands),
                island_best=tuple(isl.population[0].fitness for isl in islands),
                best_label=best_candidate.label,
            )
        )
        best_history.append(best_candidate.fitness)
        if should_stop(
            best_history, config.early_stopping_patience, config.convergence_threshold
        ):
            stopped_early = True
            break

    archived = [b for isl in islands if (b := isl.elite_map.best())]
    best = max(archived, key=lambda c: (c.fitness, c.label))
    return EvolutionResult(
        best=best,
        history=history,
        islands=islands,
        migrations=migrations,
        config=config,
        iterations_run=iterations_run,
        stopped_early=stopped_early,
        failures=failures,
    )
