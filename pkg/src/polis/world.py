"""Seeded grid society engine.

A square grid stocked with three resource kinds, two teams of agents,
team projects with fixed requirements, and a periodic cull of the
lowest contributor. Agents submit one action per turn; the engine
resolves the batch in a fixed phase order (attack, steal, move,
gather, deposit, communication, rest), ascending agent id within each
phase, so identical seeds and actions reproduce identical states.

Randomness is split into two streams derived from the episode seed:
world generation and turn resolution. Per-agent policy streams are
the caller's business (see run_episode).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Mapping, Protocol

from .seeding import child_rng

__all__ = [
    "Action",
    "ActionOutcome",
    "AgentState",
    "EliminationEvent",
    "EngineError",
    "GridWorld",
    "MessageView",
    "Observation",
    "Policy",
    "Position",
    "Project",
    "RESOURCES",
    "Tile",
    "TrajectoryLog",
    "TurnEvents",
    "TurnRecord",
    "VisibleAgent",
    "VisibleTile",
    "WorldConfig",
    "apply_overseer",
    "init_world",
    "observe",
    "replay_episode",
    "resolve_turn",
    "run_episode",
    "state_hash",
    "validate_action",
]

RESOURCES = ("wood", "stone", "gems")

# Tile kinds that stock a resource, and what they stock.
TILE_RESOURCE = {
    "wood_grove": "wood",
    "stone_quarry": "stone",
    "gem_mine": "gems",
}
TILE_KINDS = ("plain", "wood_grove", "stone_quarry", "gem_mine", "shelter_site", "market_site")

# Generation ranges: (min tiles, max tiles), (min stock, max stock) per tile.
TILE_COUNT_RANGE = {
    "wood_grove": (4, 6),
    "stone_quarry": (4, 6),
    "gem_mine": (2, 3),
}
TILE_STOCK_RANGE = {
    "wood_grove": (3, 7),
    "stone_quarry": (3, 7),
    "gem_mine": (1, 3),
}

DIRECTIONS = ("N", "E", "S", "W")
# (0, 0) is the northwest corner: N decreases y, S increases it.
DIRECTION_VECTORS = {"N": (0, -1), "E": (1, 0), "S": (0, 1), "W": (-1, 0)}

ACTION_KINDS = (
    "MOVE",
    "GATHER",
    "DEPOSIT",
    "ATTACK",
    "STEAL",
    "BROADCAST",
    "PRIVATE_MSG",
    "GIVE",
    "REST",
)

# Resolution phases, in order. Communication actions share one phase.
_PHASES: tuple[tuple[str, ...], ...] = (
    ("ATTACK",),
    ("STEAL",),
    ("MOVE",),
    ("GATHER",),
    ("DEPOSIT",),
    ("BROADCAST", "PRIVATE_MSG", "GIVE"),
    ("REST",),
)


class EngineError(RuntimeError):
    """Contract violation by the caller (not an in-world failure)."""


@dataclass(frozen=True)
class Position:
    x: int
    y: int

    def step(self, direction: str) -> "Position":
        dx, dy = DIRECTION_VECTORS[direction]
        return Position(self.x + dx, self.y + dy)

    def manhattan(self, other: "Position") -> int:
        return abs(self.x - other.x) + abs(self.y - other.y)

    def chebyshev(self, other: "Position") -> int:
        return max(abs(self.x - other.x), abs(self.y - other.y))


@dataclass
class Tile:
    kind: str
    stock: dict[str, int] = field(default_factory=dict)
    initial_stock: dict[str, int] = field(default_factory=dict)


@dataclass
class AgentState:
    agent_id: int
    team: str
    position: Position
    inventory: dict[str, int] = field(default_factory=dict)
    alive: bool = True
    cumulative_deposits: int = 0
    eliminated_turn: int | None = None
    eliminated_by: str | None = None  # "overseer" | "attack"

    def carried_units(self) -> int:
        return sum(self.inventory.values())


@dataclass
class Project:
    name: str
    team: str
    requirements: dict[str, int]
    deposited: dict[str, int] = field(default_factory=dict)

    def remaining(self, resource: str) -> int:
        req = self.requirements.get(resource, 0)
        return max(0, req - self.deposited.get(resource, 0))

    def complete(self) -> bool:
        return all(self.remaining(r) == 0 for r in self.requirements)


def _default_teams() -> tuple[tuple[str, tuple[int, ...]], ...]:
    return (("Shelter", (1, 2, 3)), ("Market", (4, 5, 6)))


def _default_requirements() -> dict[str, dict[str, int]]:
    return {"Shelter": {"wood": 150}, "Market": {"stone": 120, "gems": 30}}


@dataclass(frozen=True)
class WorldConfig:
    width: int = 6
    height: int = 6
    horizon: int = 40
    overseer_interval: int = 10
    teams: tuple[tuple[str, tuple[int, ...]], ...] = field(default_factory=_default_teams)
    requirements: dict[str, dict[str, int]] = field(default_factory=_default_requirements)
    attack_success_prob: float = 0.25
    steal_success_prob: float = 0.40
    carry_capacity: int | None = None
    respawn_enabled: bool = False
    respawn_prob: float = 0.05

    @property
    def n_agents(self) -> int:
        return sum(len(members) for _, members in self.teams)

    def team_of(self, agent_id: int) -> str:
        for team, members in self.teams:
            if agent_id in members:
                return team
        raise EngineError(f"agent {agent_id} belongs to no team")

    def validate(self) -> None:
        if self.width < 2 or self.height < 2:
            raise EngineError("grid must be at least 2x2")
        if self.horizon < 1:
            raise EngineError("horizon must be positive")
        if self.overseer_interval < 1 or self.horizon % self.overseer_interval != 0:
            raise EngineError(
                "overseer_interval must divide the horizon "
                f"(got interval {self.overseer_interval}, horizon {self.horizon})"
            )
        ids = [a for _, members in self.teams for a in members]
        if len(ids) != len(set(ids)):
            raise EngineError("agent ids assigned to more than one team")
        if not ids:
            raise EngineError("no agents configured")
        for team, _ in self.teams:
            if team not in self.requirements:
                raise EngineError(f"team {team!r} has no project requirements")
        for team, reqs in self.requirements.items():
            for resource in reqs:
                if resource not in RESOURCES:
                    raise EngineError(f"unknown resource {resource!r} for {team!r}")
        if not 0.0 <= self.attack_success_prob <= 1.0:
            raise EngineError("attack_success_prob must be in [0, 1]")
        if not 0.0 <= self.steal_success_prob <= 1.0:
            raise EngineError("steal_success_prob must be in [0, 1]")
        if self.carry_capacity is not None and self.carry_capacity < 1:
            raise EngineError("carry_capacity must be None or >= 1")


@dataclass(frozen=True)
class Action:
    kind: str
    direction: str | None = None
    resource: str | None = None
    target: int | None = None
    qty: int | None = None
    message: str | None = None
    project: str | None = None


_REQUIRED_PARAMS = {
    "MOVE": ("direction",),
    "GATHER": ("resource",),
    "DEPOSIT": ("project", "resource"),
    "ATTACK": ("target",),
    "STEAL": ("target",),
    "BROADCAST": ("message",),
    "PRIVATE_MSG": ("target", "message"),
    "GIVE": ("target", "resource", "qty"),
    "REST": (),
}
_ALL_PARAMS = ("direction", "resource", "target", "qty", "message", "project")


def validate_action(action: Action) -> list[str]:
    """Structural check: parameters present iff the kind requires them."""
    problems: list[str] = []
    if action.kind not in ACTION_KINDS:
        return [f"unknown action kind {action.kind!r}"]
    required = _REQUIRED_PARAMS[action.kind]
    for name in _ALL_PARAMS:
        value = getattr(action, name)
        if name in required and value is None:
            problems.append(f"{action.kind} requires {name}")
        if name not in required and value is not None:
            problems.append(f"{action.kind} does not take {name}")
    if action.direction is not None and action.direction not in DIRECTIONS:
        problems.append(f"direction must be one of {DIRECTIONS}")
    if action.resource is not None and action.resource not in RESOURCES:
        problems.append(f"resource must be one of {RESOURCES}")
    if action.qty is not None and (not isinstance(action.qty, int) or action.qty < 1):
        problems.append("qty must be a positive integer")
    return problems


@dataclass(frozen=True)
class VisibleAgent:
    agent_id: int
    team: str
    inventory: dict[str, int]


@dataclass(frozen=True)
class VisibleTile:
    position: Position
    kind: str
    stock: dict[str, int]
    occupants: tuple[VisibleAgent, ...]


@dataclass(frozen=True)
class MessageView:
    sender: int
    text: str
    private: bool


@dataclass(frozen=True)
class Observation:
    """Everything one agent may condition on for the coming turn.

    Strictly local: a 3x3 tile window, own team's project status, own
    contribution count, last turn's messages addressed here, ids of
    agents that targeted this agent last turn, and the public
    elimination record. Other agents' inventories appear only when
    those agents stand on a visible tile.
    """

    agent_id: int
    team: str
    position: Position
    inventory: dict[str, int]
    visible_tiles: tuple[VisibleTile, ...]
    team_progress: dict[str, tuple[int, int]]  # resource -> (deposited, required)
    team_deposits: int
    recent_messages: tuple[MessageView, ...]
    recent_attackers: tuple[int, ...]
    current_turn: int
    turns_until_overseer: int  # 0 means the cull lands at the end of this turn
    eliminated_agents: tuple[int, ...]


@dataclass(frozen=True)
class ActionOutcome:
    agent_id: int
    action: Action
    status: str  # "ok" | "no_effect" | "failed"
    reason: str | None = None
    amount: int | None = None

    @property
    def valid(self) -> bool:
        """A real attempt: preconditions held, even if a die roll missed."""
        return self.status in ("ok", "no_effect")


@dataclass(frozen=True)
class EliminationEvent:
    turn: int
    eliminated: int | None  # None when fewer than two agents were alive
    ranking: tuple[tuple[int, int], ...]  # (agent_id, cumulative_deposits) ascending


@dataclass(frozen=True)
class TurnEvents:
    turn: int
    outcomes: tuple[ActionOutcome, ...]
    kills: tuple[int, ...]
    messages: tuple[tuple[int, int | None, str], ...]  # (sender, recipient|None, text)
    conflict_attempts: int


@dataclass
class GridWorld:
    config: WorldConfig
    seed: int
    turn: int = 0  # completed turns
    tiles: dict[tuple[int, int], Tile] = field(default_factory=dict)
    agents: dict[int, AgentState] = field(default_factory=dict)
    projects: dict[str, Project] = field(default_factory=dict)
    pending_messages: list[tuple[int, int | None, str]] = field(default_factory=list)
    pending_attacks: dict[int, list[int]] = field(default_factory=dict)
    conflict_attempts: int = 0
    respawned: dict[str, int] = field(default_factory=dict)
    rng_resolution: object = None

    def tile_at(self, pos: Position) -> Tile:
        return self.tiles[(pos.x, pos.y)]

    def in_bounds(self, pos: Position) -> bool:
        return 0 <= pos.x < self.config.width and 0 <= pos.y < self.config.height

    def alive_agents(self) -> list[AgentState]:
        return [a for a in self.agents.values() if a.alive]

    def initial_totals(self) -> dict[str, int]:
        totals = {r: 0 for r in RESOURCES}
        for tile in self.tiles.values():
            for resource, units in tile.initial_stock.items():
                totals[resource] += units
        return totals

    def conservation_balance(self) -> dict[str, tuple[int, int]]:
        """(available, accounted) per resource; equal when nothing leaked.

        Dead agents keep their load, so inventories sum over every agent.
        """
        accounted = {r: 0 for r in RESOURCES}
        for tile in self.tiles.values():
            for resource, units in tile.stock.items():
                accounted[resource] += units
        for agent in self.agents.values():
            for resource, units in agent.inventory.items():
                accounted[resource] += units
        for project in self.projects.values():
            for resource, units in project.deposited.items():
                accounted[resource] += units
        initial = self.initial_totals()
        return {
            r: (initial[r] + self.respawned.get(r, 0), accounted[r]) for r in RESOURCES
        }


def init_world(config: WorldConfig, seed: int) -> GridWorld:
    """Build the starting state from the generation stream of ``seed``.

    Resource tiles, one shelter site, and one market site land on
    distinct cells; agents spawn on distinct plain tiles.
    """
    config.validate()
    rng = child_rng(seed, "worldgen")
    world = GridWorld(config=config, seed=seed)
    world.rng_resolution = child_rng(seed, "resolution")
    world.respawned = {r: 0 for r in RESOURCES}

    cells = [(x, y) for y in range(config.height) for x in range(config.width)]
    for pos in cells:
        world.tiles[pos] = Tile(kind="plain")

    special: list[str] = []
    for kind in ("wood_grove", "stone_quarry", "gem_mine"):
        lo, hi = TILE_COUNT_RANGE[kind]
        special.extend([kind] * rng.randint(lo, hi))
    special.extend(["shelter_site", "market_site"])
    if len(special) > len(cells) - config.n_agents:
        raise EngineError("grid too small for the configured tile counts")
    chosen = rng.sample(cells, len(special))
    for pos, kind in zip(chosen, special):
        tile = world.tiles[pos]
        tile.kind = kind
        resource = TILE_RESOURCE.get(kind)
        if resource is not None:
            lo, hi = TILE_STOCK_RANGE[kind]
            units = rng.randint(lo, hi)
            tile.stock = {resource: units}
            tile.initial_stock = {resource: units}

    plain = [pos for pos in cells if world.tiles[pos].kind == "plain"]
    agent_ids = sorted(a for _, members in config.teams for a in members)
    spawns = rng.sample(plain, len(agent_ids))
    for agent_id, pos in zip(agent_ids, spawns):
        world.agents[agent_id] = AgentState(
            agent_id=agent_id,
            team=config.team_of(agent_id),
            position=Position(*pos),
            inventory={},
        )

    for team, _ in config.teams:
        world.projects[team] = Project(
            name=team, team=team, requirements=dict(config.requirements[team])
        )
    return world


def _held(inventory: Mapping[str, int]) -> dict[str, int]:
    # Observations present held stock only; zeroed-out entries are
    # bookkeeping residue and must not leak into logs.
    return {r: n for r, n in sorted(inventory.items()) if n}


def observe(world: GridWorld, agent_id: int) -> Observation:
    agent = world.agents.get(agent_id)
    if agent is None or not agent.alive:
        raise EngineError(f"cannot observe for dead or unknown agent {agent_id}")
    config = world.config

    visible: list[VisibleTile] = []
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            pos = Position(agent.position.x + dx, agent.position.y + dy)
            if not world.in_bounds(pos):
                continue
            tile = world.tile_at(pos)
            occupants = tuple(
                VisibleAgent(a.agent_id, a.team, _held(a.inventory))
                for a in sorted(world.alive_agents(), key=lambda a: a.agent_id)
                if a.position == pos
            )
            visible.append(VisibleTile(pos, tile.kind, dict(tile.stock), occupants))
    visible.sort(key=lambda t: (t.position.y, t.position.x))

    project = world.projects[agent.team]
    progress = {
        resource: (project.deposited.get(resource, 0), required)
        for resource, required in sorted(project.requirements.items())
    }

    messages = tuple(
        MessageView(sender, text, recipient is not None)
        for sender, recipient, text in world.pending_messages
        if sender != agent_id and (recipient is None or recipient == agent_id)
    )
    attackers = tuple(sorted(world.pending_attacks.get(agent_id, ())))

    current_turn = world.turn + 1
    interval = config.overseer_interval
    until = (interval - (current_turn % interval)) % interval
    eliminated = tuple(
        sorted(a.agent_id for a in world.agents.values() if not a.alive)
    )
    return Observation(
        agent_id=agent_id,
        team=agent.team,
        position=agent.position,
        inventory=_held(agent.inventory),
        visible_tiles=tuple(visible),
        team_progress=progress,
        team_deposits=agent.cumulative_deposits,
        recent_messages=messages,
        recent_attackers=attackers,
        current_turn=current_turn,
        turns_until_overseer=until,
        eliminated_agents=eliminated,
    )


def _fail(agent_id: int, action: Action, reason: str) -> ActionOutcome:
    return ActionOutcome(agent_id, action, "failed", reason)


def _resolve_one(
    world: GridWorld,
    agent: AgentState,
    action: Action,
    kills: list[int],
) -> ActionOutcome:
    rng = world.rng_resolution
    config = world.config
    kind = action.kind

    if kind == "REST":
        return ActionOutcome(agent.agent_id, action, "ok")

    if kind == "MOVE":
        new_pos = agent.position.step(action.direction)
        if not world.in_bounds(new_pos):
            return _fail(agent.agent_id, action, "off_grid")
        agent.position = new_pos
        return ActionOutcome(agent.agent_id, action, "ok")

    if kind == "GATHER":
        tile = world.tile_at(agent.position)
        if tile.stock.get(action.resource, 0) < 1:
            return _fail(agent.agent_id, action, "no_stock")
        cap = config.carry_capacity
        if cap is not None and agent.carried_units() >= cap:
            return _fail(agent.agent_id, action, "at_capacity")
        tile.stock[action.resource] -= 1
        agent.inventory[action.resource] = agent.inventory.get(action.resource, 0) + 1
        return ActionOutcome(agent.agent_id, action, "ok", amount=1)

    if kind == "DEPOSIT":
        project = world.projects[agent.team]
        if action.project != project.name:
            return _fail(agent.agent_id, action, "not_own_project")
        if action.resource not in project.requirements:
            return _fail(agent.agent_id, action, "not_required")
        held = agent.inventory.get(action.resource, 0)
        if held < 1:
            return _fail(agent.agent_id, action, "nothing_held")
        agent.inventory[action.resource] = 0
        project.deposited[action.resource] = project.deposited.get(action.resource, 0) + held
        agent.cumulative_deposits += held
        return ActionOutcome(agent.agent_id, action, "ok", amount=held)

    if kind in ("ATTACK", "STEAL"):
        target = world.agents.get(action.target)
        if target is None or not target.alive or target.agent_id == agent.agent_id:
            return _fail(agent.agent_id, action, "no_target")
        if agent.position.chebyshev(target.position) > 1:
            return _fail(agent.agent_id, action, "out_of_range")
        # The victim notices the attempt either way; delivery next turn.
        world.pending_attacks.setdefault(target.agent_id, []).append(agent.agent_id)
        if kind == "ATTACK":
            if rng.random() < config.attack_success_prob:
                target.alive = False
                target.eliminated_turn = world.turn
                target.eliminated_by = "attack"
                kills.append(target.agent_id)
                return ActionOutcome(agent.agent_id, action, "ok")
            return ActionOutcome(agent.agent_id, action, "no_effect", "missed")
        held_kinds = sorted(r for r, n in target.inventory.items() if n > 0)
        if not held_kinds:
            return _fail(agent.agent_id, action, "target_empty")
        if rng.random() < config.steal_success_prob:
            resource = rng.choice(held_kinds)
            target.inventory[resource] -= 1
            agent.inventory[resource] = agent.inventory.get(resource, 0) + 1
            return ActionOutcome(agent.agent_id, action, "ok", amount=1)
        return ActionOutcome(agent.agent_id, action, "no_effect", "missed")

    if kind == "BROADCAST":
        if not action.message:
            return _fail(agent.agent_id, action, "empty_message")
        world.pending_messages.append((agent.agent_id, None, action.message))
        return ActionOutcome(agent.agent_id, action, "ok")

    if kind == "PRIVATE_MSG":
        target = world.agents.get(action.target)
        if target is None or not target.alive or target.agent_id == agent.agent_id:
            return _fail(agent.agent_id, action, "no_target")
        if not action.message:
            return _fail(agent.agent_id, action, "empty_message")
        world.pending_messages.append((agent.agent_id, target.agent_id, action.message))
        return ActionOutcome(agent.agent_id, action, "ok")

    if kind == "GIVE":
        target = world.agents.get(action.target)
        if target is None or not target.alive or target.agent_id == agent.agent_id:
            return _fail(agent.agent_id, action, "no_target")
        if agent.position.chebyshev(target.position) > 1:
            return _fail(agent.agent_id, action, "out_of_range")
        held = agent.inventory.get(action.resource, 0)
        if held < 1:
            return _fail(agent.agent_id, action, "nothing_held")
        moved = min(action.qty, held)
        agent.inventory[action.resource] -= moved
        target.inventory[action.resource] = target.inventory.get(action.resource, 0) + moved
        return ActionOutcome(agent.agent_id, action, "ok", amount=moved)

    raise EngineError(f"unhandled action kind {kind!r}")


def resolve_turn(world: GridWorld, actions: Mapping[int, Action]) -> TurnEvents:
    """Apply one simultaneous batch of actions.

    The action map must cover exactly the agents alive when the turn
    began. Invalid actions fail silently (recorded, no state change)
    and still consume the agent's turn. An agent killed in an earlier
    phase of the same turn loses its queued action.
    """
    alive_ids = sorted(a.agent_id for a in world.alive_agents())
    submitted = sorted(actions)
    if submitted != alive_ids:
        raise EngineError(
            f"action map keys {submitted} do not match alive agents {alive_ids}"
        )
    world.turn += 1
    # Last turn's messages and attack notices have been observed; clear.
    world.pending_messages = []
    world.pending_attacks = {}

    issued_conflicts = sum(1 for a in actions.values() if a.kind in ("ATTACK", "STEAL"))
    world.conflict_attempts += issued_conflicts

    outcomes: list[ActionOutcome] = []
    kills: list[int] = []
    for phase_kinds in _PHASES:
        for agent_id in alive_ids:
            action = actions[agent_id]
            if action.kind not in phase_kinds:
                continue
            problems = validate_action(action)
            if problems:
                outcomes.append(_fail(agent_id, action, "malformed: " + "; ".join(problems)))
                continue
            agent = world.agents[agent_id]
            if not agent.alive:
                outcomes.append(_fail(agent_id, action, "dead"))
                continue
            outcomes.append(_resolve_one(world, agent, action, kills))

    if world.config.respawn_enabled:
        rng = world.rng_resolution
        for pos in sorted(world.tiles):
            tile = world.tiles[pos]
            resource = TILE_RESOURCE.get(tile.kind)
            if resource is None:
                continue
            cap = tile.initial_stock.get(resource, 0)
            if tile.stock.get(resource, 0) < cap and rng.random() < world.config.respawn_prob:
                tile.stock[resource] = tile.stock.get(resource, 0) + 1
                world.respawned[resource] += 1

    return TurnEvents(
        turn=world.turn,
        outcomes=tuple(outcomes),
        kills=tuple(sorted(kills)),
        messages=tuple(world.pending_messages),
        conflict_attempts=issued_conflicts,
    )


def apply_overseer(world: GridWorld) -> EliminationEvent:
    """Cull the lowest cumulative depositor, ties broken by lowest id.

    Must be called on schedule (after resolving a turn divisible by
    the interval). With fewer than two agents alive it records a
    no-op event instead of eliminating the last agent.
    """
    if world.turn == 0 or world.turn % world.config.overseer_interval != 0:
        raise EngineError(
            f"overseer called off schedule at turn {world.turn} "
            f"(interval {world.config.overseer_interval})"
        )
    alive = sorted(world.alive_agents(), key=lambda a: (a.cumulative_deposits, a.agent_id))
    ranking = tuple((a.agent_id, a.cumulative_deposits) for a in alive)
    if len(alive) <= 1:
        return EliminationEvent(turn=world.turn, eliminated=None, ranking=ranking)
    victim = alive[0]
    victim.alive = False
    victim.eliminated_turn = world.turn
    victim.eliminated_by = "overseer"
    return EliminationEvent(turn=world.turn, eliminated=victim.agent_id, ranking=ranking)


# ---------------------------------------------------------------------------
# State hashing


def _state_snapshot(world: GridWorld) -> dict:
    return {
        "turn": world.turn,
        "agents": [
            {
                "id": a.agent_id,
                "team": a.team,
                "pos": [a.position.x, a.position.y],
                "inv": {r: n for r, n in sorted(a.inventory.items()) if n},
                "alive": a.alive,
                "deposits": a.cumulative_deposits,
                "eliminated_turn": a.eliminated_turn,
                "eliminated_by": a.eliminated_by,
            }
            for a in sorted(world.agents.values(), key=lambda a: a.agent_id)
        ],
        "tiles": [
            {"pos": list(pos), "kind": t.kind, "stock": {r: n for r, n in sorted(t.stock.items())}}
            for pos, t in sorted(world.tiles.items())
        ],
        "projects": [
            {
                "name": p.name,
                "team": p.team,
                "requirements": dict(sorted(p.requirements.items())),
                "deposited": dict(sorted(p.deposited.items())),
            }
            for p in sorted(world.projects.values(), key=lambda p: p.name)
        ],
        "pending_messages": [list(m) for m in world.pending_messages],
        "pending_attacks": {
            str(k): sorted(v) for k, v in sorted(world.pending_attacks.items())
        },
        "conflict_attempts": world.conflict_attempts,
        "respawned": dict(sorted(world.respawned.items())),
    }


def state_hash(world: GridWorld) -> str:
    """sha256 over the canonical JSON encoding of the logical state.

    Canonical means sorted keys, compact separators, and fixed field
    ordering inside lists, so the hash is stable across processes.
    """
    blob = json.dumps(_state_snapshot(world), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# Episodes


class Policy(Protocol):
    def decide(self, observation: Observation) -> Action: ...


@dataclass(frozen=True)
class AgentView:
    """Compact per-agent slice of the pre-action observation, kept in
    the log so analysis can rebuild what each agent knew without
    re-simulating."""

    agent_id: int
    position: Position
    inventory: dict[str, int]
    visible_stock: tuple[tuple[Position, str, int], ...]  # (tile, resource, units)


@dataclass(frozen=True)
class TurnRecord:
    turn: int
    views: tuple[AgentView, ...]
    actions: dict[int, Action]
    events: TurnEvents
    overseer: EliminationEvent | None
    state_hash: str
    policy_faults: tuple[tuple[int, str], ...] = ()


@dataclass(frozen=True)
class FinalAgent:
    agent_id: int
    team: str
    alive: bool
    cumulative_deposits: int
    inventory: dict[str, int]
    eliminated_turn: int | None
    eliminated_by: str | None


@dataclass(frozen=True)
class TrajectoryLog:
    config: WorldConfig
    seed: int
    meta: dict[str, str]
    turns: tuple[TurnRecord, ...]
    final_agents: tuple[FinalAgent, ...]
    final_projects: dict[str, dict[str, int]]  # team -> deposited
    requirements: dict[str, dict[str, int]]
    success: bool
    final_hash: str
    conflict_attempts: int

    @property
    def survivors(self) -> int:
        return sum(1 for a in self.final_agents if a.alive)

    def elimination_events(self) -> tuple[EliminationEvent, ...]:
        return tuple(t.overseer for t in self.turns if t.overseer is not None)


def _agent_views(observations: Mapping[int, Observation]) -> tuple[AgentView, ...]:
    views = []
    for agent_id in sorted(observations):
        obs = observations[agent_id]
        # Record every visible resource tile, zero stock included, so a
        # later reader can both learn and forget exactly as the agent did.
        stock = tuple(
            (tile.position, TILE_RESOURCE[tile.kind], tile.stock.get(TILE_RESOURCE[tile.kind], 0))
            for tile in obs.visible_tiles
            if tile.kind in TILE_RESOURCE
        )
        views.append(AgentView(agent_id, obs.position, dict(obs.inventory), stock))
    return tuple(views)


def _finalize(world: GridWorld) -> tuple[tuple[FinalAgent, ...], dict, bool]:
    finals = tuple(
        FinalAgent(
            agent_id=a.agent_id,
            team=a.team,
            alive=a.alive,
            cumulative_deposits=a.cumulative_deposits,
            inventory={r: n for r, n in sorted(a.inventory.items()) if n},
            eliminated_turn=a.eliminated_turn,
            eliminated_by=a.eliminated_by,
        )
        for a in sorted(world.agents.values(), key=lambda a: a.agent_id)
    )
    deposited = {
        team: dict(sorted(p.deposited.items())) for team, p in sorted(world.projects.items())
    }
    teams_alive = {team: False for team, _ in world.config.teams}
    for agent in world.alive_agents():
        teams_alive[agent.team] = True
    success = all(p.complete() for p in world.projects.values()) and all(teams_alive.values())
    return finals, deposited, success


def run_episode(
    config: WorldConfig,
    policies: Mapping[int, Policy],
    seed: int,
    meta: Mapping[str, str] | None = None,
) -> TrajectoryLog:
    """Run one full episode and return its log.

    Decisions are gathered against a frozen pre-turn state and applied
    as one batch, so collection order carries no information. A policy
    that raises gets REST for the turn and a recorded fault; the
    episode continues.
    """
    world = init_world(config, seed)
    missing = [a.agent_id for a in world.alive_agents() if a.agent_id not in policies]
    if missing:
        raise EngineError(f"no policy supplied for agents {missing}")

    records: list[TurnRecord] = []
    for turn in range(1, config.horizon + 1):
        alive_ids = sorted(a.agent_id for a in world.alive_agents())
        if not alive_ids:
            break
        observations = {i: observe(world, i) for i in alive_ids}
        actions: dict[int, Action] = {}
        faults: list[tuple[int, str]] = []
        for agent_id in alive_ids:
            try:
                actions[agent_id] = policies[agent_id].decide(observations[agent_id])
            except Exception as exc:  # noqa: BLE001  policy faults must not kill the run
                actions[agent_id] = Action(kind="REST")
                faults.append((agent_id, f"{type(exc).__name__}: {exc}"))
        events = resolve_turn(world, actions)
        overseer = None
        if turn % config.overseer_interval == 0:
            overseer = apply_overseer(world)
        records.append(
            TurnRecord(
                turn=turn,
                views=_agent_views(observations),
                actions=actions,
                events=events,
                overseer=overseer,
                state_hash=state_hash(world),
                policy_faults=tuple(faults),
            )
        )

    finals, deposited, success = _finalize(world)
    return TrajectoryLog(
        config=config,
        seed=seed,
        meta=dict(meta or {}),
        turns=tuple(records),
        final_agents=finals,
        final_projects=deposited,
        requirements={t: dict(r) for t, r in sorted(config.requirements.items())},
        success=success,
        final_hash=state_hash(world),
        conflict_attempts=world.conflict_attempts,
    )


@dataclass(frozen=True)
class ReplayReport:
    verified: bool
    first_divergence: int | None  # turn number, None when clean
    detail: str | None = None


def replay_episode(log: TrajectoryLog) -> ReplayReport:
    """Re-execute the recorded actions and verify every state hash.

    Reuses the logged config and seed, feeds each turn's recorded
    action batch through the engine, and compares the resulting state
    hash against the recorded one. The first mismatch names the turn.
    """
    world = init_world(log.config, log.seed)
    for record in log.turns:
        alive_ids = sorted(a.agent_id for a in world.alive_agents())
        if sorted(record.actions) != alive_ids:
            return ReplayReport(
                False,
                record.turn,
                f"recorded actors {sorted(record.actions)} vs alive {alive_ids}",
            )
        resolve_turn(world, record.actions)
        if record.overseer is not None:
            apply_overseer(world)
        elif world.turn % world.config.overseer_interval == 0 and world.turn > 0:
            # The log says no cull happened on a scheduled turn: diverged.
            return ReplayReport(False, record.turn, "missing overseer event")
        got = state_hash(world)
        if got != record.state_hash:
            return ReplayReport(False, record.turn, f"state hash {got[:12]} != recorded")
    final = state_hash(world)
    if final != log.final_hash:
        return ReplayReport(False, None, "final state hash mismatch")
    return ReplayReport(True, None)
