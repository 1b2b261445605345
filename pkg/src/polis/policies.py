"""Charter-driven agent policies.

Two tiers. Rules that carry structured directives execute them
verbatim. Rules that are plain text get compiled once, through a
small keyword table, into the same directive vocabulary. The scripted
executor then walks the directive list each turn and takes the first
applicable one, so rule priority is action priority.

The executor sees nothing but the observation and its own bounded
memory: sightings of resource tiles, which cells it has looked at,
broadcasts it already sent, who targeted it last turn, and a capped
decision history.
"""

from __future__ import annotations

import random
import re
from collections import deque
from dataclasses import dataclass, field

from .constitution import Constitution, Directive
from .world import (
    Action,
    Observation,
    Position,
    RESOURCES,
    TILE_RESOURCE,
)

__all__ = [
    "MEMORY_CAP",
    "PolicyMemory",
    "ScriptedPolicy",
    "ScriptedProfile",
    "derive_profile",
    "scripted_decide",
]

# A policy remembers at most this many decision records.
MEMORY_CAP = 25

# Directions tried in this order whenever a tie must break.
_TIE_ORDER = ("N", "E", "S", "W")


# ---------------------------------------------------------------------------
# Profile derivation

def _extract_directive(text: str) -> Directive | None:
    """Map one rule's text to at most one directive.

    Patterns are tried in a fixed order and the first hit wins, so a
    rule like "do NOT attack unless directly attacked" reads as
    retaliation, not as a blanket ban or a blanket license. The table
    is deliberately coarse; rules that match nothing contribute
    nothing.
    """
    t = text.lower()
    if re.search(r"retaliat", t) or re.search(r"unless (?:directly )?attacked", t):
        return Directive("aggression", mode="retaliate")
    if re.search(r"never (?:take actions that )?harm", t) or re.search(
        r"(?:do not|don't|never|no) attack", t
    ):
        return Directive("aggression", mode="never")
    if re.search(r"deposit", t) and re.search(r"immediat", t):
        return Directive("deposit_first")
    if re.search(r"hoard", t) or re.search(r"delay deposit", t):
        return Directive("hoard")
    if re.search(r"gather", t):
        return Directive("gather_needed")
    if re.search(r"attack|steal|sabotage", t):
        return Directive("aggression", mode="always")
    if re.search(r"deficit", t) or re.search(r"move toward", t):
        return Directive("seek_largest_deficit")
    if re.search(r"surplus", t) or re.search(r"\bgive\b|give_resource", t):
        return Directive("give_surplus")
    if re.search(r"broadcast", t):
        threshold = 2 if re.search(r"2\+", t) else 1
        return Directive("broadcast_threshold", threshold=threshold)
    if re.search(r"\brest\b|do nothing", t):
        return Directive("rest_bias")
    return None


@dataclass(frozen=True)
class ScriptedProfile:
    """A charter compiled for scripted play: ordered, deduplicated
    directives plus any derivation warnings."""

    label: str
    directives: tuple[Directive, ...]
    warnings: tuple[str, ...] = ()

    def has(self, kind: str) -> bool:
        return any(d.kind == kind for d in self.directives)

    def aggression_mode(self) -> str | None:
        for d in self.directives:
            if d.kind == "aggression":
                return d.mode
        return None


def derive_profile(constitution: Constitution) -> ScriptedProfile:
    """Compile a charter into a scripted profile.

    Rules carrying structured directives contribute them as-is; plain
    rules go through the keyword table. Directives keep source-rule
    priority order and only the first of each kind survives, so one
    aggression stance governs the whole profile.
    """
    ordered: list[Directive] = []
    warnings: list[str] = []
    for rule in sorted(constitution.rules, key=lambda r: r.priority):
        if rule.directives:
            candidates = list(rule.directives)
        else:
            text = " ".join((rule.name, rule.guidance, rule.summary))
            extracted = _extract_directive(text)
            candidates = [extracted] if extracted else []
        for directive in candidates:
            if any(d.kind == directive.kind for d in ordered):
                continue
            ordered.append(directive)
    if not ordered:
        warnings.append(
            f"charter {constitution.label!r} yields no actionable directives; resting"
        )
        ordered.append(Directive("rest_bias"))
    return ScriptedProfile(
        label=constitution.label, directives=tuple(ordered), warnings=tuple(warnings)
    )


# ---------------------------------------------------------------------------
# Memory

@dataclass
class PolicyMemory:
    """What one scripted agent carries between turns.

    sightings      last known (resource, units) per resource tile
    seen           every cell that has appeared in an observation
    walls          computed off-grid neighbors, learned from truncated views
    sent           broadcast texts already sent (never repeated)
    attackers      who targeted this agent on the previous turn
    history        capped record of (turn, position, action kind)
    """

    sightings: dict[tuple[int, int], tuple[str, int]] = field(default_factory=dict)
    seen: set[tuple[int, int]] = field(default_factory=set)
    walls: set[tuple[int, int]] = field(default_factory=set)
    sent: set[str] = field(default_factory=set)
    attackers: tuple[int, ...] = ()
    history: deque = field(default_factory=lambda: deque(maxlen=MEMORY_CAP))

    def ingest(self, obs: Observation) -> None:
        visible_positions = {(t.position.x, t.position.y) for t in obs.visible_tiles}
        self.seen |= visible_positions
        # Any neighbor of the standing position missing from the window
        # is off-grid; remember it so exploration never aims there.
        for dx in (-1, 0, 1):
            for dy in (-1, 0, 1):
                pos = (obs.position.x + dx, obs.position.y + dy)
                if pos not in visible_positions:
                    self.walls.add(pos)
        for tile in obs.visible_tiles:
            resource = TILE_RESOURCE.get(tile.kind)
            if resource is None:
                continue
            units = tile.stock.get(resource, 0)
            pos = (tile.position.x, tile.position.y)
            if units > 0:
                self.sightings[pos] = (resource, units)
            else:
                self.sightings.pop(pos, None)
        self.attackers = obs.recent_attackers

    def record(self, obs: Observation, action: Action) -> None:
        self.history.append((obs.current_turn, (obs.position.x, obs.position.y), action.kind))


# ---------------------------------------------------------------------------
# Scripted execution

def _needed_resources(obs: Observation) -> list[str]:
    """Own team's still-required resources, in canonical order."""
    needed = []
    for resource in RESOURCES:
        pair = obs.team_progress.get(resource)
        if pair is not None and pair[0] < pair[1]:
            needed.append(resource)
    return needed


def _carrying(obs: Observation, resources: list[str]) -> list[str]:
    return [r for r in resources if obs.inventory.get(r, 0) > 0]


def _visible_agents(obs: Observation) -> list:
    agents = []
    for tile in obs.visible_tiles:
        agents.extend(tile.occupants)
    return [a for a in agents if a.agent_id != obs.agent_id]


def _step_toward(origin: Position, target: Position) -> str | None:
    """First direction in N,E,S,W order that strictly shrinks the
    Manhattan distance."""
    best = origin.manhattan(target)
    for direction in _TIE_ORDER:
        if origin.step(direction).manhattan(target) < best:
            return direction
    return None


def _nearest(origin: Position, candidates: list[tuple[int, int]]) -> Position | None:
    if not candidates:
        return None
    best = min(candidates, key=lambda c: (abs(c[0] - origin.x) + abs(c[1] - origin.y), c[1], c[0]))
    return Position(*best)


def _frontier(memory: PolicyMemory) -> list[tuple[int, int]]:
    """Cells adjacent to explored ground that have never been observed
    and are not known to be off-grid."""
    frontier = set()
    for x, y in memory.seen:
        for dx, dy in ((0, -1), (1, 0), (0, 1), (-1, 0)):
            pos = (x + dx, y + dy)
            if pos not in memory.seen and pos not in memory.walls:
                frontier.add(pos)
    return sorted(frontier)


def _seek_move(obs: Observation, memory: PolicyMemory, needed: list[str]) -> Action | None:
    """Walk toward the largest remaining deficit; explore when no
    stocked tile for it is known."""
    deficits = sorted(
        needed,
        key=lambda r: (-(obs.team_progress[r][1] - obs.team_progress[r][0]), RESOURCES.index(r)),
    )
    for resource in deficits:
        stocked = [pos for pos, (r, units) in memory.sightings.items() if r == resource and units > 0]
        target = _nearest(obs.position, stocked)
        if target is None:
            continue
        if target == obs.position:
            return None  # standing on it; earlier directives handle gathering
        direction = _step_toward(obs.position, target)
        if direction is not None:
            return Action(kind="MOVE", direction=direction)
    target = _nearest(obs.position, _frontier(memory))
    if target is not None:
        direction = _step_toward(obs.position, target)
        if direction is not None:
            return Action(kind="MOVE", direction=direction)
    return None


def _attack_target(obs: Observation, opposing_only: bool, among: set[int] | None = None) -> int | None:
    candidates = []
    for agent in _visible_agents(obs):
        if opposing_only and agent.team == obs.team:
            continue
        if among is not None and agent.agent_id not in among:
            continue
        candidates.append(agent.agent_id)
    return min(candidates) if candidates else None


def scripted_decide(
    profile: ScriptedProfile,
    obs: Observation,
    memory: PolicyMemory,
    rng: random.Random,
) -> Action:
    """One deterministic decision: first applicable directive wins.

    Standing exceptions to pure list order: an always-aggressive
    profile strikes any visible opponent before consulting anything
    else, and a hoard directive anywhere in the profile suppresses
    deposit_first. The rng parameter is part of the policy contract
    but the scripted rules are fully deterministic today.
    """
    del rng  # deterministic by design; accepted for interface stability
    memory.ingest(obs)
    action = _scripted_choice(profile, obs, memory)
    memory.record(obs, action)
    return action


def _scripted_choice(profile: ScriptedProfile, obs: Observation, memory: PolicyMemory) -> Action:
    needed = _needed_resources(obs)
    hoarding = profile.has("hoard")

    if profile.aggression_mode() == "always":
        target = _attack_target(obs, opposing_only=True)
        if target is not None:
            return Action(kind="ATTACK", target=target)

    for directive in profile.directives:
        kind = directive.kind

        if kind == "deposit_first" and not hoarding:
            held = _carrying(obs, needed)
            if held:
                return Action(kind="DEPOSIT", project=obs.team, resource=held[0])

        elif kind == "gather_needed":
            if _carrying(obs, needed):
                continue
            here = next(
                (t for t in obs.visible_tiles if t.position == obs.position), None
            )
            if here is None:
                continue
            for resource in needed:
                if here.stock.get(resource, 0) > 0:
                    return Action(kind="GATHER", resource=resource)

        elif kind == "seek_largest_deficit":
            move = _seek_move(obs, memory, needed)
            if move is not None:
                return move

        elif kind == "broadcast_threshold":
            here = next(
                (t for t in obs.visible_tiles if t.position == obs.position), None
            )
            if here is None:
                continue
            for resource in needed:
                units = here.stock.get(resource, 0)
                if units >= directive.threshold:
                    text = f"found {units} {resource} at ({obs.position.x},{obs.position.y})"
                    if text not in memory.sent:
                        memory.sent.add(text)
                        return Action(kind="BROADCAST", message=text)

        elif kind == "give_surplus":
            surplus = [
                r
                for r in RESOURCES
                if obs.inventory.get(r, 0) > 0 and r not in needed
            ]
            if not surplus:
                continue
            teammates = [
                a.agent_id
                for a in _visible_agents(obs)
                if a.team == obs.team
            ]
            if teammates:
                resource = surplus[0]
                return Action(
                    kind="GIVE",
                    target=min(teammates),
                    resource=resource,
                    qty=obs.inventory[resource],
                )

        elif kind == "aggression" and directive.mode == "retaliate":
            if memory.attackers:
                target = _attack_target(obs, opposing_only=False, among=set(memory.attackers))
                if target is not None:
                    return Action(kind="ATTACK", target=target)

        elif kind == "rest_bias":
            return Action(kind="REST")

    return Action(kind="REST")


class ScriptedPolicy:
    """Stateful wrapper: one agent's profile, memory, and rng stream."""

    def __init__(self, profile: ScriptedProfile | Constitution, rng: random.Random | None = None):
        if isinstance(profile, Constitution):
            profile = derive_profile(profile)
        self.profile = profile
        self.memory = PolicyMemory()
        self.rng = rng if rng is not None else random.Random(0)

    def decide(self, observation: Observation) -> Action:
        return scripted_decide(self.profile, observation, self.memory, self.rng)
