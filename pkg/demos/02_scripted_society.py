"""All four built-in constitutions, same seeds, side by side.

Each label runs five episodes under scripted play. The table shows the
mean stability score with its components and the behavior mix.

Scripted play compiles each rule to at most one directive, so a
charter is only as good as the directives its wording yields. c_star
spells out deposit, gather, seek, share, and broadcast rules and gets
the full repertoire. hhh and llm_generated never mention moving toward
anything, so their agents wait on their spawn tiles forever: harmless,
honest, and idle. zero_sum attacks on sight and pays for it through
the conflict term.
"""

from statistics import fmean

from polis import WorldConfig, baseline, run_episode
from polis.policies import ScriptedPolicy
from polis.scoring import trajectory_metrics

SEEDS = range(5)

config = WorldConfig()
print(f"{'label':<14}{'S':>7}{'P':>7}{'V':>7}{'C':>7}   behavior mix")
for label in ("c_star", "llm_generated", "hhh", "zero_sum"):
    constitution = baseline(label)
    metrics = []
    for seed in SEEDS:
        policies = {
            agent_id: ScriptedPolicy(constitution)
            for _, members in config.teams
            for agent_id in members
        }
        metrics.append(trajectory_metrics(run_episode(config, policies, seed)))
    s = fmean(m.score for m in metrics)
    p = fmean(m.productivity for m in metrics)
    v = fmean(m.survival for m in metrics)
    c = fmean(m.conflict for m in metrics)
    mix = " ".join(
        f"{cls[:4]} {fmean(m.behavior.fractions[cls] for m in metrics):.2f}"
        for cls in ("productive", "aggressive", "social", "idle")
    )
    print(f"{label:<14}{s:>7.3f}{p:>7.3f}{v:>7.3f}{c:>7.3f}   {mix}")

print("\nscore = max(0, 0.5 P + 0.3 V - 0.2 C), ceiling 0.600 at "
      "P=1, V=2/6, C=0")
print(f"seeds {list(SEEDS)}; rerun and the numbers repeat byte for byte")
