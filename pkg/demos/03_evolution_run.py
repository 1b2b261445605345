"""Constitution search escaping the idle plateau, no network required.

Three islands evolve the hhh charter with the offline mutator and the
scripted evaluator. Societies without movement rules all score exactly
0.100 (survival term only), so the search starts on a wide plateau
where every child ties and the archive fills on diversity alone. The
breakthrough needs two stacked additions, a deposit rule plus a
move-toward-deficit rule, and here it lands at iteration 11. Default
patience (10) would have stopped the run one iteration earlier, which
is why this demo widens it.

The run is fully seeded: execute it twice and every line repeats.
"""

from polis import baseline
from polis.evolution import (
    EvolutionConfig,
    MockMutator,
    ScriptedEvaluator,
    evolve,
)

config = EvolutionConfig(
    max_iterations=30,
    random_seed=16,
    early_stopping_patience=30,
)
result = evolve(config, baseline("hhh"), ScriptedEvaluator(), MockMutator())

print(f"{config.num_islands} islands, population {config.population_size}, "
      f"migration every {config.migration_interval} iterations\n")

previous = None
for entry in result.history:
    marker = " <- improved" if previous is not None and entry.best_fitness > previous else ""
    previous = entry.best_fitness
    print(f"iter {entry.iteration:>2}: best {entry.best_fitness:.3f} "
          f"({entry.best_label}), mean {entry.mean_fitness:.3f}, "
          f"archive {entry.archive_occupancy}{marker}")

print("\nmigrations:")
for migration in result.migrations:
    moved = ", ".join(f"island {i}: {n}" for i, n in sorted(migration.per_island.items()))
    print(f"  iter {migration.iteration}: {moved}")

print("\narchive occupancy (rule-count band x score band):")
for island in result.islands:
    cells = ", ".join(f"{cell}" for cell in sorted(island.elite_map.cells))
    print(f"  island {island.id}: {len(island.elite_map.cells)} cells  {cells}")

best = result.best
print(f"\nbest charter: {best.label}, fitness {best.fitness:.3f}, "
      f"{len(best.constitution.rules)} rules")
for rule in best.constitution.rules:
    print(f"  {rule.priority}. {rule.name}")
how = "stopped early" if result.stopped_early else "ran the full budget"
print(f"\n{how}: {result.iterations_run} iterations, "
      f"{result.failures} failed evaluations")
