"""The analysis pipeline on live data.

Two societies, ten episodes each, then the full statistical report:
performance with confidence intervals, score decomposition, behavior
mix, pairwise tests, and the coefficient sensitivity grid. Everything
is recomputed from the episodes run here, nothing is canned.
"""

from polis import WorldConfig, baseline, run_episode
from polis.policies import ScriptedPolicy
from polis.reports import render_report, summarize_label
from polis.scoring import trajectory_metrics
from polis.stats import SampleSet, mann_whitney, welch_t_test

config = WorldConfig()
batches = {}
for label in ("c_star", "zero_sum"):
    constitution = baseline(label)
    metrics = []
    for seed in range(100, 110):
        policies = {
            agent_id: ScriptedPolicy(constitution)
            for _, members in config.teams
            for agent_id in members
        }
        metrics.append(trajectory_metrics(run_episode(config, policies, seed)))
    batches[label] = metrics

summaries = [summarize_label(label, m) for label, m in batches.items()]
print(render_report(summaries))

# the same tests, called directly
a = SampleSet("c_star", tuple(m.score for m in batches["c_star"]))
b = SampleSet("zero_sum", tuple(m.score for m in batches["zero_sum"]))
welch = welch_t_test(a, b)
ranks = mann_whitney(a, b)
print(f"welch: t = {welch.t:.2f}, df = {welch.df:.1f}, "
      f"p = {welch.p_value:.2e}")
print(f"mann-whitney: U = {min(ranks.u_a, ranks.u_b):.0f}, "
      f"p = {ranks.p_value:.2e}"
      f"{' (exact)' if ranks.exact else ' (normal approximation)'}")
