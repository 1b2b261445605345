"""Island search: archive geometry, selection, migration, stopping,
mutators, and the outer loop."""

import math
from random import Random

import pytest

from polis.constitution import Constitution, Directive, MoralRule, validate_constitution
from polis.evolution import (
    Candidate,
    EliteMap,
    EvaluationOutcome,
    EvolutionConfig,
    Island,
    LLMMutator,
    MockMutator,
    ScriptedEvaluator,
    evolve,
    migrate,
    select_parent,
    should_stop,
)
from polis.baselines import baseline


def plain_rules(n):
    return tuple(
        MoralRule(
            name=f"rule_{i}",
            guidance=f"Placeholder guidance number {i}.",
            summary=f"Placeholder {i}.",
            priority=i,
            directives=(Directive("rest_bias"),),
        )
        for i in range(1, n + 1)
    )


def make_candidate(label, n_rules, fitness, island=0, iteration=0):
    constitution = Constitution(label=label, rules=plain_rules(n_rules))
    return Candidate(
        constitution=constitution,
        fitness=fitness,
        components=None,
        behavior=None,
        island=island,
        iteration=iteration,
    )


class ForcedRoll(Random):
    """First random() call returns the forced value; later draws are seeded."""

    def __init__(self, roll, seed=1234):
        super().__init__(seed)
        self._roll = roll
        self._used = False

    def random(self):
        if not self._used:
            self._used = True
            return self._roll
        return super().random()


class RuleCountEvaluator:
    """Fitness grows with distinct rules, so add-edits genuinely help."""

    def evaluate(self, constitution, seeds):
        fitness = min(0.08 * len({r.name for r in constitution.rules}), 0.6)
        return EvaluationOutcome(
            fitness=fitness, components=(fitness, 0.0, 0.0), behavior={"idle": 1.0}
        )


class ConstantEvaluator:
    def evaluate(self, constitution, seeds):
        return EvaluationOutcome(fitness=0.25)


# -- config validation ------------------------------------------------------


def test_default_config_validates():
    EvolutionConfig().validate()


@pytest.mark.parametrize(
    "overrides",
    [
        {"max_iterations": 0},
        {"num_islands": 0},
        {"population_size": 0},
        {"topology": "torus"},
        {"migration_selection": "random"},
        {"migration_interval": 0},
        {"migration_rate": 0.0},
        {"migration_rate": 1.5},
        {"elite_ratio": 0.5},
        {"feature_bins": 0},
        {"eval_runs": 0},
    ],
)
def test_config_rejects_bad_values(overrides):
    from dataclasses import replace

    with pytest.raises(ValueError):
        replace(EvolutionConfig(), **overrides).validate()


# -- archive geometry -------------------------------------------------------


@pytest.mark.parametrize(
    "n_rules, fitness, cell",
    [
        (7, 0.577, (6, 7)),
        (1, 0.0, (0, 0)),
        (9, 0.31, (7, 4)),
        (12, 0.6, (7, 7)),  # both axes clamp at the top bin
        (3, 0.3, (2, 4)),  # 0.3/0.6*8 lands exactly on the bin edge
    ],
)
def test_feature_descriptor(n_rules, fitness, cell):
    archive = EliteMap()
    assert archive.feature_descriptor(make_candidate("x", n_rules, fitness)) == cell


def test_insert_fills_an_empty_cell():
    archive = EliteMap()
    assert archive.try_insert(make_candidate("a", 3, 0.2))
    assert archive.occupancy == 1


def test_insert_strictly_better_replaces():
    archive = EliteMap()
    archive.try_insert(make_candidate("a", 3, 0.2))
    assert archive.try_insert(make_candidate("b", 3, 0.21))
    assert archive.occupancy == 1
    (held,) = archive.cells.values()
    assert held.label == "b"


def test_insert_tie_keeps_incumbent():
    archive = EliteMap()
    archive.try_insert(make_candidate("a", 3, 0.2))
    assert not archive.try_insert(make_candidate("b", 3, 0.2))
    (held,) = archive.cells.values()
    assert held.label == "a"


def test_insert_worse_is_rejected():
    archive = EliteMap()
    archive.try_insert(make_candidate("a", 3, 0.2))
    # 0.19 shares the (2, 2) cell with 0.2; 0.1 would land one band down
    assert not archive.try_insert(make_candidate("b", 3, 0.19))
    (held,) = archive.cells.values()
    assert held.label == "a"


def test_different_cells_do_not_compete():
    archive = EliteMap()
    assert archive.try_insert(make_candidate("a", 3, 0.2))
    assert archive.try_insert(make_candidate("b", 4, 0.1))
    assert archive.occupancy == 2


def test_ranked_is_best_first():
    archive = EliteMap()
    for label, n, f in [("a", 3, 0.2), ("b", 4, 0.5), ("c", 5, 0.1)]:
        archive.try_insert(make_candidate(label, n, f))
    assert [c.label for c in archive.ranked()] == ["b", "a", "c"]


def test_best_of_empty_archive_is_none():
    assert EliteMap().best() is None
    assert EliteMap().random_cell(Random(0)) is None


def test_random_cell_returns_an_occupant():
    archive = EliteMap()
    members = [make_candidate(l, n, f) for l, n, f in
               [("a", 3, 0.2), ("b", 4, 0.5), ("c", 5, 0.1)]]
    for m in members:
        archive.try_insert(m)
    picks = {archive.random_cell(Random(s)).label for s in range(40)}
    assert picks <= {"a", "b", "c"}
    assert len(picks) > 1  # uniform over cells, not pinned to one


def test_archive_rejects_zero_bins():
    with pytest.raises(ValueError):
        EliteMap(bins=0)


# -- parent selection -------------------------------------------------------


def island_with_archive():
    island = Island(id=0)
    island.population = [make_candidate("pop_only", 2, 0.05)]
    for label, n, f in [("e1", 3, 0.5), ("e2", 4, 0.4), ("e3", 5, 0.3), ("e4", 6, 0.2)]:
        island.elite_map.try_insert(make_candidate(label, n, f))
    return island


def test_elite_branch_draws_from_archive_top_cut():
    island = island_with_archive()
    config = EvolutionConfig()
    # cut = ceil(0.3 * 4) = 2, so only the two best archived labels appear
    picks = {
        select_parent(island, ForcedRoll(0.0, seed=s), config).label
        for s in range(30)
    }
    assert picks == {"e1", "e2"}


def test_elite_branch_without_archive_falls_back_to_population():
    island = Island(id=0)
    island.population = [make_candidate("only", 2, 0.1)]
    parent = select_parent(island, ForcedRoll(0.0), EvolutionConfig())
    assert parent.label == "only"


def test_exploitation_branch_draws_from_population():
    island = island_with_archive()
    parent = select_parent(island, ForcedRoll(0.5), EvolutionConfig())
    assert parent.label == "pop_only"


def test_exploitation_weights_follow_fitness():
    island = Island(id=0)
    island.population = [
        make_candidate("strong", 3, 0.6),
        make_candidate("weak", 2, 0.0),
    ]
    config = EvolutionConfig()
    picks = [select_parent(island, ForcedRoll(0.5), config).label for _ in range(60)]
    # The zero-fitness member keeps a floored weight: reachable in
    # principle, vanishingly rare in practice.
    assert picks.count("strong") == 60


def test_exploration_branch_draws_an_archive_cell():
    island = island_with_archive()
    picks = {
        select_parent(island, ForcedRoll(0.95, seed=s), EvolutionConfig()).label
        for s in range(40)
    }
    assert picks == {"e1", "e2", "e3", "e4"}


def test_exploration_without_archive_falls_back_to_population():
    island = Island(id=0)
    island.population = [make_candidate("only", 2, 0.1)]
    parent = select_parent(island, ForcedRoll(0.95), EvolutionConfig())
    assert parent.label == "only"


def test_empty_population_is_an_error():
    with pytest.raises(ValueError, match="empty population"):
        select_parent(Island(id=0), Random(0), EvolutionConfig())


def test_admit_keeps_the_population_bounded():
    island = Island(id=0)
    for i in range(8):
        island.admit(make_candidate(f"c{i}", 2, i / 10), size_bound=5)
    assert len(island.population) == 5
    assert [c.fitness for c in island.population] == [0.7, 0.6, 0.5, 0.4, 0.3]


def test_newer_candidate_wins_a_fitness_tie():
    island = Island(id=0)
    island.admit(make_candidate("old", 2, 0.2, iteration=1), size_bound=5)
    island.admit(make_candidate("new", 3, 0.2, iteration=2), size_bound=5)
    assert island.population[0].label == "new"


# -- migration --------------------------------------------------------------


def three_islands(population_size=10):
    islands = []
    for i in range(3):
        island = Island(id=i)
        for j in range(population_size):
            island.admit(
                make_candidate(f"i{i}c{j}", 2 + j % 3, 0.05 * j, island=i),
                population_size,
            )
        islands.append(island)
    return islands


def test_migration_moves_two_per_island_at_defaults():
    islands = three_islands()
    report = migrate(islands, EvolutionConfig(), iteration=5)
    assert report.iteration == 5
    assert report.per_island == {0: 2, 1: 2, 2: 2}


def test_migration_follows_the_ring():
    islands = three_islands()
    report = migrate(islands, EvolutionConfig())
    assert {(src, dest) for src, dest, _, _ in report.moves} == {(0, 1), (1, 2), (2, 0)}


def test_migrants_are_copies_of_the_best():
    islands = three_islands()
    top_of_zero = {c.label for c in islands[0].population[:2]}
    migrate(islands, EvolutionConfig())
    # source still holds its champions, destination gained copies
    assert top_of_zero <= {c.label for c in islands[0].population}
    arrived = [c for c in islands[1].population if c.label in top_of_zero]
    assert arrived and all(c.island == 1 for c in arrived)


def test_migration_respects_the_size_bound():
    islands = three_islands()
    migrate(islands, EvolutionConfig())
    assert all(len(isl.population) == 10 for isl in islands)


def test_single_island_migrates_nowhere():
    island = Island(id=0)
    island.admit(make_candidate("only", 2, 0.1), 10)
    report = migrate([island], EvolutionConfig(), iteration=3)
    assert report.moves == ()
    assert report.per_island == {}


def test_migration_count_scales_with_rate():
    islands = three_islands()
    from dataclasses import replace

    config = replace(EvolutionConfig(), migration_rate=0.45)
    report = migrate(islands, config)
    assert report.per_island == {0: 5, 1: 5, 2: 5}  # ceil(0.45 * 10)


# -- stopping ---------------------------------------------------------------


def test_stop_on_a_flat_stretch():
    assert should_stop([0.3] * 10, patience=10, threshold=0.05)


def test_no_stop_before_patience_elapses():
    assert not should_stop([0.3] * 9, patience=10, threshold=0.05)


def test_no_stop_while_still_improving():
    history = [0.1, 0.1, 0.1, 0.10, 0.12, 0.16]
    assert not should_stop(history, patience=5, threshold=0.05)


def test_stop_window_slides():
    # Early growth, then flat: the window only sees the plateau.
    history = [0.1, 0.3, 0.5] + [0.5] * 10
    assert should_stop(history, patience=10, threshold=0.05)


def test_threshold_is_exclusive():
    history = [0.1, 0.1, 0.16]
    # Improvement of exactly 0.06 >= 0.05 keeps going
    assert not should_stop(history, patience=3, threshold=0.05)
    assert should_stop(history, patience=3, threshold=0.07)


def test_zero_patience_never_stops():
    assert not should_stop([0.1] * 50, patience=0, threshold=0.05)


# -- the structural mutator -------------------------------------------------


def aggression_modes(constitution):
    return {
        d.mode
        for rule in constitution.rules
        for d in rule.directives
        if d.kind == "aggression"
    }


@pytest.mark.parametrize("profile", ["c_star", "hhh", "zero_sum", "llm_generated"])
def test_repeated_mutation_stays_valid(profile):
    mutator = MockMutator()
    rng = Random(99)
    current = baseline(profile)
    for _ in range(200):
        current = mutator.mutate(current, None, rng)
        assert not validate_constitution(current)
        assert 1 <= len(current.rules) <= mutator.max_rules
        assert [r.priority for r in current.rules] == list(
            range(1, len(current.rules) + 1)
        )
        assert len(aggression_modes(current)) <= 1


def test_mutation_is_deterministic_for_a_seed():
    parent = baseline("c_star")
    a = MockMutator().mutate(parent, None, Random(7))
    b = MockMutator().mutate(parent, None, Random(7))
    assert a == b


def test_mutation_changes_something():
    parent = baseline("c_star")
    rng = Random(3)
    children = [MockMutator().mutate(parent, None, rng) for _ in range(20)]
    assert all(c.rules != parent.rules for c in children)


def test_mutated_child_keeps_the_parent_label():
    parent = baseline("hhh")
    child = MockMutator().mutate(parent, None, Random(1))
    assert child.label == parent.label
    assert child.provenance == "mutated"


# -- the endpoint-backed mutator --------------------------------------------


PROPOSAL_YAML = """\
format_version: 1
label: proposal
provenance: mutated
rules:
- name: deposit_promptly
  priority: 1
  summary: Deposit carried resources immediately.
  guidance: Carry resources straight to the site and deposit them at once.
- name: gather_what_is_needed
  priority: 2
  summary: Gather resources the project still needs.
  guidance: Gather from the tile you stand on when it holds a needed resource.
"""


def chat_reply(content):
    return {"choices": [{"message": {"content": content}}]}


class StubChat:
    def __init__(self, replies):
        self.replies = list(replies)
        self.prompts = []

    def complete(self, messages):
        self.prompts.append(messages)
        reply = self.replies.pop(0)
        if isinstance(reply, Exception):
            raise reply
        return reply


def test_llm_mutator_parses_a_fenced_rulebook():
    client = StubChat([chat_reply(f"Here you go:\n```yaml\n{PROPOSAL_YAML}```\n")])
    mutator = LLMMutator(client)
    parent = baseline("hhh")
    child = mutator.mutate(parent, None, Random(0))
    assert [r.name for r in child.rules] == [
        "deposit_promptly",
        "gather_what_is_needed",
    ]
    assert child.label == "hhh"  # relabeled to the parent, not the reply
    assert not mutator.last_was_fallback
    assert mutator.fallback_count == 0


def test_llm_mutator_retries_once_then_succeeds():
    client = StubChat(
        [
            chat_reply("I refuse to answer in YAML."),
            chat_reply(f"```yaml\n{PROPOSAL_YAML}```"),
        ]
    )
    mutator = LLMMutator(client)
    child = mutator.mutate(baseline("hhh"), None, Random(0))
    assert len(client.prompts) == 2
    assert len(child.rules) == 2
    assert not mutator.last_was_fallback


def test_llm_mutator_falls_back_after_two_bad_replies():
    client = StubChat([chat_reply("no"), chat_reply("still no")])
    mutator = LLMMutator(client)
    parent = baseline("hhh")
    child = mutator.mutate(parent, None, Random(5))
    assert mutator.last_was_fallback
    assert mutator.fallback_count == 1
    assert not validate_constitution(child)  # structural fallback, still sound


def test_llm_mutator_rejects_an_invalid_rulebook():
    # Parseable YAML, but duplicate rule names fail validation twice over.
    broken = PROPOSAL_YAML.replace("gather_what_is_needed", "deposit_promptly")
    client = StubChat([chat_reply(f"```yaml\n{broken}```")] * 2)
    mutator = LLMMutator(client)
    mutator.mutate(baseline("hhh"), None, Random(5))
    assert mutator.fallback_count == 1


def test_llm_mutator_recovers_from_transport_errors():
    client = StubChat([RuntimeError("boom"), chat_reply(f"```yaml\n{PROPOSAL_YAML}```")])
    mutator = LLMMutator(client)
    child = mutator.mutate(baseline("hhh"), None, Random(0))
    assert len(child.rules) == 2
    assert not mutator.last_was_fallback


def test_mutator_feedback_reaches_the_prompt():
    from polis.evolution import Feedback

    client = StubChat([chat_reply(f"```yaml\n{PROPOSAL_YAML}```")])
    mutator = LLMMutator(client)
    feedback = Feedback(fitness=0.249, components=(0.298, 1 / 3, 0.0))
    mutator.mutate(baseline("hhh"), feedback, Random(0))
    (messages,) = client.prompts
    text = "\n".join(m["content"] for m in messages)
    assert "0.249" in text


# -- the outer loop ---------------------------------------------------------


def small_config(**overrides):
    from dataclasses import replace

    base = EvolutionConfig(
        max_iterations=10,
        random_seed=42,
        early_stopping_patience=10,
        num_islands=3,
        population_size=6,
        eval_runs=2,
    )
    return replace(base, **overrides)


def start_constitution():
    return Constitution(label="start", rules=plain_rules(1))


def test_evolve_is_bit_reproducible():
    runs = [
        evolve(small_config(), start_constitution(), RuleCountEvaluator(), MockMutator())
        for _ in range(2)
    ]
    assert runs[0].history == runs[1].history
    assert runs[0].best.label == runs[1].best.label
    assert runs[0].best.fitness == runs[1].best.fitness
    assert runs[0].best.constitution == runs[1].best.constitution


def test_running_best_never_decreases():
    result = evolve(
        small_config(), start_constitution(), RuleCountEvaluator(), MockMutator()
    )
    bests = [r.best_fitness for r in result.history]
    assert all(b2 >= b1 for b1, b2 in zip(bests, bests[1:]))
    assert bests[-1] == result.best.fitness


def test_every_island_starts_from_the_seed():
    result = evolve(
        small_config(max_iterations=1),
        start_constitution(),
        RuleCountEvaluator(),
        MockMutator(),
    )
    for i, island in enumerate(result.islands):
        assert any(c.label == f"start@i{i}" for c in island.population)


def test_archive_cells_hold_their_own_descriptor():
    result = evolve(
        small_config(), start_constitution(), RuleCountEvaluator(), MockMutator()
    )
    for island in result.islands:
        for cell, occupant in island.elite_map.cells.items():
            assert island.elite_map.feature_descriptor(occupant) == cell


def test_history_tracks_archive_occupancy():
    result = evolve(
        small_config(), start_constitution(), RuleCountEvaluator(), MockMutator()
    )
    last = result.history[-1]
    assert last.archive_occupancy == sum(
        isl.elite_map.occupancy for isl in result.islands
    )
    occupancies = [r.archive_occupancy for r in result.history]
    assert all(b >= a for a, b in zip(occupancies, occupancies[1:]))


def test_migrations_happen_on_the_interval():
    result = evolve(
        small_config(migration_interval=5),
        start_constitution(),
        RuleCountEvaluator(),
        MockMutator(),
    )
    assert [m.iteration for m in result.migrations] == [5, 10]
    assert all(
        count == 2 for m in result.migrations for count in m.per_island.values()
    )


def test_plateau_stops_the_search_early():
    result = evolve(
        small_config(max_iterations=30, early_stopping_patience=5),
        start_constitution(),
        ConstantEvaluator(),
        MockMutator(),
    )
    assert result.stopped_early
    assert result.iterations_run == 5
    assert len(result.history) == 5


def test_improving_run_goes_the_distance():
    result = evolve(
        small_config(), start_constitution(), RuleCountEvaluator(), MockMutator()
    )
    assert not result.stopped_early
    assert result.iterations_run == 10


def test_evaluator_failures_are_flagged_not_fatal():
    class FlakyEvaluator:
        def evaluate(self, constitution, seeds):
            if constitution.label.startswith("g2-"):
                raise RuntimeError("episode blew up")
            return EvaluationOutcome(fitness=0.3)

    result = evolve(
        small_config(max_iterations=3),
        start_constitution(),
        FlakyEvaluator(),
        MockMutator(),
    )
    assert result.failures == 3  # one per island at iteration 2
    failed = [
        c
        for isl in result.islands
        for c in isl.population
        if c.evaluator_failed
    ]
    assert failed
    assert all(c.fitness == 0.0 for c in failed)


def test_children_record_their_parent():
    result = evolve(
        small_config(max_iterations=2),
        start_constitution(),
        RuleCountEvaluator(),
        MockMutator(),
    )
    children = [
        c
        for isl in result.islands
        for c in isl.population
        if c.iteration > 0
    ]
    assert children
    assert all(c.parent_label for c in children)


def test_scripted_evaluator_scores_within_bounds():
    evaluator = ScriptedEvaluator()
    result = evolve(
        small_config(max_iterations=3, num_islands=2, population_size=4, eval_runs=1),
        baseline("c_star"),
        evaluator,
        MockMutator(),
    )
    members = [c for isl in result.islands for c in isl.population]
    assert all(0.0 <= c.fitness <= 0.6 for c in members)
    assert result.best.fitness > 0.0
    assert all(
        0.0 <= f <= 0.6
        for c in members
        if c.components
        for f in (c.components[0], c.components[1])
    )


def test_scripted_evaluator_writes_logs_when_asked(tmp_path):
    evaluator = ScriptedEvaluator(log_dir=tmp_path / "episodes")
    constitution = baseline("c_star")
    outcome = evaluator.evaluate(constitution, [11, 12])
    written = sorted(p.name for p in (tmp_path / "episodes").iterdir())
    assert written == ["c_star-k0.jsonl", "c_star-k1.jsonl"]
    assert 0.0 <= outcome.fitness <= 0.6
    assert outcome.behavior and abs(sum(outcome.behavior.values()) - 1.0) < 1e-9


def test_feedback_roundtrips_through_the_candidate():
    cand = Candidate(
        constitution=start_constitution(),
        fitness=0.3,
        components=(0.5, 1 / 3, 0.1),
        behavior={"idle": 1.0},
        island=0,
        iteration=4,
    )
    assert cand.feedback.fitness == 0.3
    assert cand.feedback.components == (0.5, 1 / 3, 0.1)
    assert cand.feedback.behavior == {"idle": 1.0}
