"""A single episode, narrated.

Runs the default 6x6 world for 40 turns with every agent following the
c_star constitution, then walks through what the log recorded: the
first agent's opening view, the overseer's elimination schedule, and
the final standings.
"""

from polis import WorldConfig, baseline, run_episode
from polis.policies import ScriptedPolicy

config = WorldConfig()
constitution = baseline("c_star")
policies = {
    agent_id: ScriptedPolicy(constitution)
    for _, members in config.teams
    for agent_id in members
}

log = run_episode(config, policies, seed=7)

print(f"grid {config.width}x{config.height}, {config.n_agents} agents, "
      f"{config.horizon} turns, overseer every {config.overseer_interval}")
for team, members in config.teams:
    needs = ", ".join(f"{n} {r}" for r, n in config.requirements[team].items())
    print(f"  {team}: agents {members}, needs {needs}")

view = next(v for v in log.turns[0].views if v.agent_id == 1)
print(f"\nagent 1 opens at {view.position} seeing "
      f"{len(view.visible_stock)} stocked cells in its 3x3 window:")
for pos, resource, units in view.visible_stock:
    print(f"  {pos}: {units} {resource}")

print("\noverseer record:")
for event in log.elimination_events():
    if event.eliminated is None:
        print(f"  turn {event.turn}: nobody left to eliminate")
        continue
    ranking = ", ".join(f"a{a}={d}" for a, d in event.ranking)
    print(f"  turn {event.turn}: eliminated agent {event.eliminated}  ({ranking})")

print(f"\nfinal standings after {len(log.turns)} turns "
      f"({log.survivors} survivors):")
for agent in log.final_agents:
    state = "alive" if agent.alive else f"out at turn {agent.eliminated_turn}"
    print(f"  agent {agent.agent_id} [{agent.team}] deposited "
          f"{agent.cumulative_deposits}, {state}")
for name, project in sorted(log.final_projects.items()):
    print(f"  {name}: {project}")
print(f"\nepisode hash {log.final_hash[:16]}..., "
      f"{log.conflict_attempts} conflict attempts")
