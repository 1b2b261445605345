"""Episode welfare scoring and behavior accounting.

The scalar score blends three bounded components: build progress P,
survival fraction V, and a capped conflict rate C, combined as
max(0, alpha*P + beta*V - gamma*C). Defaults weight them 0.5 / 0.3 /
0.2, and conflict saturates at 10 attempted hostilities per episode.

Every submitted action also lands in exactly one of four behavior
classes (productive, aggressive, social, idle); the per-class
fractions of an episode form its behavior profile.
"""

from __future__ import annotations

from dataclasses import dataclass
from statistics import fmean

from .world import Action, Position, TrajectoryLog

__all__ = [
    "ActionContext",
    "BehaviorProfile",
    "CONFLICT_CAP",
    "Coefficients",
    "DEFAULT_COEFFICIENTS",
    "StabilityScore",
    "TrajectoryMetrics",
    "classify_action",
    "expected_score",
    "pareto_dominates",
    "project_progress",
    "score_breakdown",
    "stability_score",
    "trajectory_metrics",
]

# Conflict attempts at or beyond this count score as maximal conflict.
CONFLICT_CAP = 10

BEHAVIOR_CLASSES = ("productive", "aggressive", "social", "idle")


@dataclass(frozen=True)
class Coefficients:
    alpha: float = 0.5
    beta: float = 0.3
    gamma: float = 0.2


DEFAULT_COEFFICIENTS = Coefficients()


def _check_component(name: str, value: float) -> None:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")


def stability_score(
    productivity: float,
    survival: float,
    conflict: float,
    coefficients: Coefficients = DEFAULT_COEFFICIENTS,
) -> float:
    """max(0, alpha*P + beta*V - gamma*C); components must be in [0, 1]."""
    _check_component("productivity", productivity)
    _check_component("survival", survival)
    _check_component("conflict", conflict)
    c = coefficients
    return max(0.0, c.alpha * productivity + c.beta * survival - c.gamma * conflict)


@dataclass(frozen=True)
class StabilityScore:
    value: float
    productivity: float
    survival: float
    conflict: float
    weighted_productivity: float
    weighted_survival: float
    weighted_conflict: float  # reported as a penalty, so <= 0


def score_breakdown(
    productivity: float,
    survival: float,
    conflict: float,
    coefficients: Coefficients = DEFAULT_COEFFICIENTS,
) -> StabilityScore:
    value = stability_score(productivity, survival, conflict, coefficients)
    c = coefficients
    return StabilityScore(
        value=value,
        productivity=productivity,
        survival=survival,
        conflict=conflict,
        weighted_productivity=c.alpha * productivity,
        weighted_survival=c.beta * survival,
        weighted_conflict=-c.gamma * conflict,
    )


def expected_score(scores: list[float]) -> float:
    """Arithmetic mean of per-episode scores."""
    if not scores:
        raise ValueError("expected_score needs at least one score")
    return fmean(scores)


def pareto_dominates(a: tuple[float, float, float], b: tuple[float, float, float]) -> bool:
    """Componentwise: higher P and V, lower C, strict somewhere."""
    pa, va, ca = a
    pb, vb, cb = b
    if pa < pb or va < vb or ca > cb:
        return False
    return pa > pb or va > vb or ca < cb


def project_progress(deposited: dict[str, dict[str, int]], requirements: dict[str, dict[str, int]]) -> dict[str, float]:
    """Per-team completion in [0, 1]: mean over that team's required
    resources of min(1, deposited/required)."""
    progress: dict[str, float] = {}
    for team, reqs in requirements.items():
        if not reqs:
            progress[team] = 1.0
            continue
        have = deposited.get(team, {})
        ratios = [min(1.0, have.get(r, 0) / req) for r, req in sorted(reqs.items()) if req > 0]
        progress[team] = fmean(ratios) if ratios else 1.0
    return progress


# ---------------------------------------------------------------------------
# Behavior classification


@dataclass(frozen=True)
class ActionContext:
    """What classification needs to know about the moment of action:
    whether the attempt was valid, where the agent stood, and which
    tiles it knew to stock resources its team still needed."""

    valid: bool
    position: Position | None = None
    known_needed_tiles: tuple[Position, ...] = ()


def classify_action(action: Action, context: ActionContext) -> str:
    """One behavior class per action.

    Failed attempts of any kind are idle. Valid GATHER and DEPOSIT are
    productive. A valid MOVE is productive only when it strictly
    shrinks the distance to the nearest tile the agent knew to stock a
    needed resource; walking blind is idle. ATTACK and STEAL attempts
    are aggressive even when the roll misses. Messages and gifts are
    social. REST is idle.
    """
    if not context.valid:
        return "idle"
    kind = action.kind
    if kind in ("GATHER", "DEPOSIT"):
        return "productive"
    if kind in ("ATTACK", "STEAL"):
        return "aggressive"
    if kind in ("BROADCAST", "PRIVATE_MSG", "GIVE"):
        return "social"
    if kind == "MOVE":
        if context.position is None or not context.known_needed_tiles:
            return "idle"
        destination = context.position.step(action.direction)
        before = min(context.position.manhattan(t) for t in context.known_needed_tiles)
        after = min(destination.manhattan(t) for t in context.known_needed_tiles)
        return "productive" if after < before else "idle"
    return "idle"


@dataclass(frozen=True)
class BehaviorProfile:
    counts: dict[str, int]
    total: int

    @property
    def fractions(self) -> dict[str, float]:
        if self.total == 0:
            return {c: 0.0 for c in BEHAVIOR_CLASSES}
        return {c: self.counts.get(c, 0) / self.total for c in BEHAVIOR_CLASSES}


# ---------------------------------------------------------------------------
# Whole-log metrics


@dataclass(frozen=True)
class TrajectoryMetrics:
    productivity: float
    survival: float
    conflict: float
    score: float
    breakdown: StabilityScore
    behavior: BehaviorProfile
    team_progress: dict[str, float]
    survivors: int
    n_agents: int
    conflict_attempts: int
    mean_deposit_latency: float | None  # turns from pickup to deposit, unit-weighted

    @property
    def components(self) -> tuple[float, float, float]:
        return (self.productivity, self.survival, self.conflict)


def trajectory_metrics(
    log: TrajectoryLog, coefficients: Coefficients = DEFAULT_COEFFICIENTS
) -> TrajectoryMetrics:
    """Score one episode log and profile its behavior.

    Classification replays the log's per-agent views in order,
    tracking what each agent had seen (and seen depleted) before each
    decision, so MOVE productivity reflects knowledge at decision
    time, not hindsight.

    Raises ValueError for a truncated log: fewer turn records than the
    horizon while agents were still alive, a gap in turn numbers, or
    no turns at all. Scoring a partial episode would understate
    progress silently, so it is refused outright.
    """
    if not log.turns:
        raise ValueError("log has no turn records")
    for index, record in enumerate(log.turns, start=1):
        if record.turn != index:
            raise ValueError(
                f"turn records are not contiguous: expected turn {index}, "
                f"found {record.turn}"
            )
    if len(log.turns) > log.config.horizon:
        raise ValueError(
            f"log has {len(log.turns)} turns but the horizon is "
            f"{log.config.horizon}"
        )
    if len(log.turns) < log.config.horizon and log.survivors > 0:
        raise ValueError(
            f"log is truncated: ends at turn {len(log.turns)} of "
            f"{log.config.horizon} with {log.survivors} agents alive"
        )
    team_prog = project_progress(log.final_projects, log.requirements)
    productivity = fmean(team_prog.values()) if team_prog else 0.0
    n_agents = len(log.final_agents)
    survival = log.survivors / n_agents if n_agents else 0.0
    conflict = min(1.0, log.conflict_attempts / CONFLICT_CAP)
    breakdown = score_breakdown(productivity, survival, conflict, coefficients)

    team_of = {a.agent_id: a.team for a in log.final_agents}
    # Knowledge per agent: tile -> (resource, units); remaining need per team.
    knowledge: dict[int, dict[tuple[int, int], tuple[str, int]]] = {
        a.agent_id: {} for a in log.final_agents
    }
    remaining: dict[str, dict[str, int]] = {
        team: dict(reqs) for team, reqs in log.requirements.items()
    }

    counts = {c: 0 for c in BEHAVIOR_CLASSES}
    pickups: dict[tuple[int, str], list[int]] = {}
    latencies: list[int] = []

    for record in log.turns:
        positions: dict[int, Position] = {}
        for view in record.views:
            positions[view.agent_id] = view.position
            known = knowledge.setdefault(view.agent_id, {})
            for pos, resource, units in view.visible_stock:
                key = (pos.x, pos.y)
                if units > 0:
                    known[key] = (resource, units)
                else:
                    known.pop(key, None)

        for outcome in record.events.outcomes:
            agent_id = outcome.agent_id
            team = team_of.get(agent_id)
            needed = {
                r for r, left in remaining.get(team, {}).items() if left > 0
            }
            known_tiles = tuple(
                Position(x, y)
                for (x, y), (resource, units) in sorted(knowledge.get(agent_id, {}).items())
                if resource in needed and units > 0
            )
            context = ActionContext(
                valid=outcome.valid,
                position=positions.get(agent_id),
                known_needed_tiles=known_tiles,
            )
            counts[classify_action(outcome.action, context)] += 1

            # Deposit latency bookkeeping on applied effects only.
            if outcome.status != "ok":
                continue
            action = outcome.action
            turn = record.turn
            if action.kind == "GATHER":
                pickups.setdefault((agent_id, action.resource), []).append(turn)
            elif action.kind == "STEAL" and outcome.amount:
                # The stolen unit changed hands; we do not know which kind
                # without the victim's ledger, so skip latency tracking on
                # the victim side and restart the clock for the thief.
                pass
            elif action.kind == "GIVE" and outcome.amount:
                queue = pickups.setdefault((agent_id, action.resource), [])
                for _ in range(min(outcome.amount, len(queue))):
                    queue.pop(0)
                pickups.setdefault((action.target, action.resource), []).extend(
                    [turn] * outcome.amount
                )
            elif action.kind == "DEPOSIT" and outcome.amount:
                queue = pickups.setdefault((agent_id, action.resource), [])
                for _ in range(outcome.amount):
                    picked = queue.pop(0) if queue else turn
                    latencies.append(turn - picked)
                project_team = team_of.get(agent_id)
                if project_team in remaining and action.resource in remaining[project_team]:
                    left = remaining[project_team][action.resource]
                    remaining[project_team][action.resource] = max(0, left - outcome.amount)

    behavior = BehaviorProfile(counts=counts, total=sum(counts.values()))
    latency = fmean(latencies) if latencies else None
    return TrajectoryMetrics(
        productivity=productivity,
        survival=survival,
        conflict=conflict,
        score=breakdown.value,
        breakdown=breakdown,
        behavior=behavior,
        team_progress=team_prog,
        survivors=log.survivors,
        n_agents=n_agents,
        conflict_attempts=log.conflict_attempts,
        mean_deposit_latency=latency,
    )
