"""Trajectory log files: one JSON record per line.

Layout: a header line (format tag, engine version, seed, config,
metadata), one line per resolved turn, and a footer line (final
state, success flag, final state hash). Every line is canonical JSON
(sorted keys, compact separators) and nothing carries a timestamp, so
two runs of the same configuration produce byte-identical files.

``read_log`` inverts ``write_log`` exactly; a non-strict read skips
corrupt turn lines and reports them as warnings instead of raising.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from . import __version__ as _engine_version
from .world import (
    Action,
    ActionOutcome,
    AgentView,
    EliminationEvent,
    FinalAgent,
    Position,
    TrajectoryLog,
    TurnEvents,
    TurnRecord,
    WorldConfig,
)

__all__ = [
    "FORMAT_TAG",
    "LogFormatError",
    "log_to_lines",
    "read_log",
    "write_log",
]

FORMAT_TAG = "polis-trajectory/1"


class LogFormatError(ValueError):
    """Raised when a log file cannot be understood."""


def _dumps(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


# ---------------------------------------------------------------------------
# to JSON


def _config_obj(config: WorldConfig) -> dict:
    return {
        "width": config.width,
        "height": config.height,
        "horizon": config.horizon,
        "overseer_interval": config.overseer_interval,
        "teams": [[team, list(members)] for team, members in config.teams],
        "requirements": {t: dict(sorted(r.items())) for t, r in sorted(config.requirements.items())},
        "attack_success_prob": config.attack_success_prob,
        "steal_success_prob": config.steal_success_prob,
        "carry_capacity": config.carry_capacity,
        "respawn_enabled": config.respawn_enabled,
        "respawn_prob": config.respawn_prob,
    }


def _action_obj(action: Action) -> dict:
    obj: dict = {"kind": action.kind}
    for name in ("direction", "resource", "target", "qty", "message", "project"):
        value = getattr(action, name)
        if value is not None:
            obj[name] = value
    return obj


def _outcome_obj(outcome: ActionOutcome) -> dict:
    obj: dict = {
        "agent": outcome.agent_id,
        "action": _action_obj(outcome.action),
        "status": outcome.status,
    }
    if outcome.reason is not None:
        obj["reason"] = outcome.reason
    if outcome.amount is not None:
        obj["amount"] = outcome.amount
    return obj


def _view_obj(view: AgentView) -> dict:
    return {
        "agent": view.agent_id,
        "pos": [view.position.x, view.position.y],
        "inv": {r: n for r, n in sorted(view.inventory.items()) if n},
        "stock": [[p.x, p.y, resource, units] for p, resource, units in view.visible_stock],
    }


def _overseer_obj(event: EliminationEvent) -> dict:
    return {
        "turn": event.turn,
        "eliminated": event.eliminated,
        "ranking": [list(pair) for pair in event.ranking],
    }


def _turn_obj(record: TurnRecord) -> dict:
    events = record.events
    return {
        "record": "turn",
        "turn": record.turn,
        "views": [_view_obj(v) for v in record.views],
        "actions": {str(agent_id): _action_obj(a) for agent_id, a in sorted(record.actions.items())},
        "outcomes": [_outcome_obj(o) for o in events.outcomes],
        "kills": list(events.kills),
        "messages": [[s, r, t] for s, r, t in events.messages],
        "conflict_attempts": events.conflict_attempts,
        "overseer": _overseer_obj(record.overseer) if record.overseer else None,
        "state_hash": record.state_hash,
        "policy_faults": [[agent_id, text] for agent_id, text in record.policy_faults],
    }


def log_to_lines(log: TrajectoryLog) -> list[str]:
    header = {
        "record": "header",
        "format": FORMAT_TAG,
        "engine_version": _engine_version,
        "seed": log.seed,
        "config": _config_obj(log.config),
        "meta": dict(sorted(log.meta.items())),
    }
    footer = {
        "record": "footer",
        "final_agents": [
            {
                "agent": a.agent_id,
                "team": a.team,
                "alive": a.alive,
                "deposits": a.cumulative_deposits,
                "inv": {r: n for r, n in sorted(a.inventory.items()) if n},
                "eliminated_turn": a.eliminated_turn,
                "eliminated_by": a.eliminated_by,
            }
            for a in log.final_agents
        ],
        "final_projects": {t: dict(sorted(d.items())) for t, d in sorted(log.final_projects.items())},
        "requirements": {t: dict(sorted(r.items())) for t, r in sorted(log.requirements.items())},
        "success": log.success,
        "final_hash": log.final_hash,
        "conflict_attempts": log.conflict_attempts,
    }
    lines = [_dumps(header)]
    lines.extend(_dumps(_turn_obj(t)) for t in log.turns)
    lines.append(_dumps(footer))
    return lines


def write_log(log: TrajectoryLog, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for line in log_to_lines(log):
            fh.write(line)
            fh.write("\n")


# ---------------------------------------------------------------------------
# from JSON


def _config_from(obj: dict) -> WorldConfig:
    return WorldConfig(
        width=obj["width"],
        height=obj["height"],
        horizon=obj["horizon"],
        overseer_interval=obj["overseer_interval"],
        teams=tuple((team, tuple(members)) for team, members in obj["teams"]),
        requirements={t: dict(r) for t, r in obj["requirements"].items()},
        attack_success_prob=obj["attack_success_prob"],
        steal_success_prob=obj["steal_success_prob"],
        carry_capacity=obj["carry_capacity"],
        respawn_enabled=obj["respawn_enabled"],
        respawn_prob=obj["respawn_prob"],
    )


def _action_from(obj: dict) -> Action:
    return Action(
        kind=obj["kind"],
        direction=obj.get("direction"),
        resource=obj.get("resource"),
        target=obj.get("target"),
        qty=obj.get("qty"),
        message=obj.get("message"),
        project=obj.get("project"),
    )


def _turn_from(obj: dict) -> TurnRecord:
    views = tuple(
        AgentView(
            agent_id=v["agent"],
            position=Position(*v["pos"]),
            inventory=dict(v["inv"]),
            visible_stock=tuple((Position(x, y), resource, units) for x, y, resource, units in v["stock"]),
        )
        for v in obj["views"]
    )
    outcomes = tuple(
        ActionOutcome(
            agent_id=o["agent"],
            action=_action_from(o["action"]),
            status=o["status"],
            reason=o.get("reason"),
            amount=o.get("amount"),
        )
        for o in obj["outcomes"]
    )
    events = TurnEvents(
        turn=obj["turn"],
        outcomes=outcomes,
        kills=tuple(obj["kills"]),
        messages=tuple((s, r, t) for s, r, t in obj["messages"]),
        conflict_attempts=obj["conflict_attempts"],
    )
    overseer = None
    if obj.get("overseer") is not None:
        ov = obj["overseer"]
        overseer = EliminationEvent(
            turn=ov["turn"],
            eliminated=ov["eliminated"],
            ranking=tuple((a, d) for a, d in ov["ranking"]),
        )
    return TurnRecord(
        turn=obj["turn"],
        views=views,
        actions={int(k): _action_from(a) for k, a in obj["actions"].items()},
        events=events,
        overseer=overseer,
        state_hash=obj["state_hash"],
        policy_faults=tuple((a, t) for a, t in obj.get("policy_faults", [])),
    )


@dataclass(frozen=True)
class ReadResult:
    log: TrajectoryLog
    warnings: tuple[str, ...]
    engine_version: str


def read_log(path: str, strict: bool = True) -> ReadResult:
    """Parse a log file back into a TrajectoryLog.

    strict=True raises LogFormatError on any malformed line;
    strict=False drops malformed turn lines and reports each as a
    warning. Header and footer must parse either way.
    """
    warnings: list[str] = []
    header: dict | None = None
    footer: dict | None = None
    turns: list[TurnRecord] = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                kind = obj.get("record")
                if kind == "header":
                    if header is not None:
                        raise LogFormatError("duplicate header")
                    header = obj
                elif kind == "turn":
                    turns.append(_turn_from(obj))
                elif kind == "footer":
                    if footer is not None:
                        raise LogFormatError("duplicate footer")
                    footer = obj
                else:
                    raise LogFormatError(f"unknown record kind {kind!r}")
            except LogFormatError:
                raise
            except Exception as exc:  # malformed line
                message = f"line {lineno}: {type(exc).__name__}: {exc}"
                if strict:
                    raise LogFormatError(message) from None
                warnings.append(message)
    if header is None:
        raise LogFormatError("missing header record")
    if footer is None:
        raise LogFormatError("missing footer record")
    if header.get("format") != FORMAT_TAG:
        raise LogFormatError(f"unsupported format {header.get('format')!r}")

    final_agents = tuple(
        FinalAgent(
            agent_id=a["agent"],
            team=a["team"],
            alive=a["alive"],
            cumulative_deposits=a["deposits"],
            inventory=dict(a["inv"]),
            eliminated_turn=a["eliminated_turn"],
            eliminated_by=a["eliminated_by"],
        )
        for a in footer["final_agents"]
    )
    log = TrajectoryLog(
        config=_config_from(header["config"]),
        seed=header["seed"],
        meta=dict(header.get("meta", {})),
        turns=tuple(turns),
        final_agents=final_agents,
        final_projects={t: dict(d) for t, d in footer["final_projects"].items()},
        requirements={t: dict(r) for t, r in footer["requirements"].items()},
        success=footer["success"],
        final_hash=footer["final_hash"],
        conflict_attempts=footer["conflict_attempts"],
    )
    return ReadResult(
        log=log,
        warnings=tuple(warnings),
        engine_version=str(header.get("engine_version", "")),
    )
