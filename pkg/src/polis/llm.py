"""Chat-endpoint client, action tool schemas, and the LLM-backed policy.

Talks to any OpenAI-style /chat/completions endpoint. The endpoint
location and credentials come from environment variables only
(POLIS_LLM_BASE_URL, POLIS_LLM_API_KEY, POLIS_LLM_MODEL); nothing
secret is ever read from config files. The HTTP layer is injectable
so tests can run against canned transports.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

from .constitution import Constitution, parse_constitution, serialize_constitution
from .world import Action, Observation, validate_action

__all__ = [
    "ACTION_TOOLS",
    "ChatClient",
    "ChatEndpointConfig",
    "EndpointError",
    "LLMPolicy",
    "ParseError",
    "mutation_prompt",
    "parse_constitution_reply",
    "parse_tool_call",
    "render_observation",
    "render_system_prompt",
]

ENV_BASE_URL = "POLIS_LLM_BASE_URL"
ENV_API_KEY = "POLIS_LLM_API_KEY"
ENV_MODEL = "POLIS_LLM_MODEL"
DEFAULT_MODEL = "openai/gpt-oss-120b"

HISTORY_LIMIT = 25  # non-system messages kept per agent


class EndpointError(RuntimeError):
    """The endpoint could not be reached or kept failing."""


class ParseError(ValueError):
    """The model reply did not contain a usable action or rulebook."""


@dataclass(frozen=True)
class ChatEndpointConfig:
    base_url: str
    api_key: str
    model: str = DEFAULT_MODEL
    temperature: float = 1.0
    top_p: float = 0.95
    timeout: float = 60.0
    max_retries: int = 3

    @classmethod
    def from_env(cls, **overrides: Any) -> "ChatEndpointConfig":
        base_url = os.environ.get(ENV_BASE_URL)
        if not base_url:
            raise EndpointError(
                f"{ENV_BASE_URL} is not set; point it at an OpenAI-style endpoint"
            )
        kwargs: dict[str, Any] = {
            "base_url": base_url,
            "api_key": os.environ.get(ENV_API_KEY, ""),
            "model": os.environ.get(ENV_MODEL, DEFAULT_MODEL),
        }
        kwargs.update(overrides)  # explicit overrides beat the environment
        return cls(**kwargs)


# transport: payload dict -> decoded response dict; raises on failure
Transport = Callable[[dict], dict]


def _requests_transport(config: ChatEndpointConfig) -> Transport:
    import requests

    url = config.base_url.rstrip("/") + "/chat/completions"
    headers = {"Content-Type": "application/json"}
    if config.api_key:
        headers["Authorization"] = f"Bearer {config.api_key}"

    def send(payload: dict) -> dict:
        response = requests.post(
            url, headers=headers, json=payload, timeout=config.timeout
        )
        if response.status_code >= 500:
            raise EndpointError(f"server error {response.status_code}")
        if response.status_code != 200:
            raise EndpointError(
                f"endpoint rejected request: {response.status_code} {response.text[:200]}"
            )
        return response.json()

    return send


class ChatClient:
    """Thin chat-completions wrapper with retry and injectable transport."""

    def __init__(self, config: ChatEndpointConfig, transport: Transport | None = None):
        self.config = config
        self.transport = transport or _requests_transport(config)

    @classmethod
    def from_env(cls, transport: Transport | None = None, **overrides: Any) -> "ChatClient":
        return cls(ChatEndpointConfig.from_env(**overrides), transport=transport)

    def complete(
        self,
        messages: Sequence[dict],
        tools: Sequence[dict] | None = None,
        tool_choice: str | None = None,
    ) -> dict:
        payload: dict[str, Any] = {
            "model": self.config.model,
            "messages": list(messages),
            "temperature": self.config.temperature,
            "top_p": self.config.top_p,
        }
        if tools is not None:
            payload["tools"] = list(tools)
            payload["tool_choice"] = tool_choice or "required"
        last: Exception | None = None
        for attempt in range(self.config.max_retries):
            try:
                return self.transport(payload)
            except Exception as exc:  # noqa: BLE001 - any transport failure retries
                last = exc
                if attempt + 1 < self.config.max_retries:
                    time.sleep(0.5 * 2**attempt)
        raise EndpointError(f"endpoint failed after {self.config.max_retries} attempts") from last


# ---------------------------------------------------------------------------
# Action tool schemas


def _tool(name: str, description: str, properties: dict, required: list[str]) -> dict:
    return {
        "type": "function",
        "function": {
            "name": name,
            "description": description,
            "parameters": {
                "type": "object",
                "properties": properties,
                "required": required,
                "additionalProperties": False,
            },
        },
    }


_DIRECTION = {"type": "string", "enum": ["N", "E", "S", "W"]}
_TARGET = {"type": "integer", "description": "agent id of the target"}
_RESOURCE = {"type": "string", "enum": ["wood", "stone", "gems"]}

ACTION_TOOLS: tuple[dict, ...] = (
    _tool("move", "Step one tile north, east, south, or west.", {"direction": _DIRECTION}, ["direction"]),
    _tool(
        "gather",
        "Pick up one unit of a resource from the tile you stand on.",
        {"resource": _RESOURCE},
        ["resource"],
    ),
    _tool(
        "deposit",
        "Deposit everything you carry of one needed resource at your team's site (stand on it).",
        {
            "project": {"type": "string", "description": "your team's project name"},
            "resource": _RESOURCE,
        },
        ["project", "resource"],
    ),
    _tool("attack", "Attack an adjacent agent; may eliminate them.", {"target": _TARGET}, ["target"]),
    _tool("steal", "Try to take one resource unit from an adjacent agent.", {"target": _TARGET}, ["target"]),
    _tool(
        "broadcast",
        "Send a short message every agent receives next turn.",
        {"message": {"type": "string"}},
        ["message"],
    ),
    _tool(
        "private_msg",
        "Send a short message one agent receives next turn.",
        {"target": _TARGET, "message": {"type": "string"}},
        ["target", "message"],
    ),
    _tool(
        "give",
        "Hand units of one resource to an adjacent agent.",
        {"target": _TARGET, "resource": _RESOURCE, "qty": {"type": "integer", "minimum": 1}},
        ["target", "resource", "qty"],
    ),
    _tool("rest", "Do nothing this turn.", {}, []),
)

_TOOL_KINDS = {
    "move": "MOVE",
    "gather": "GATHER",
    "deposit": "DEPOSIT",
    "attack": "ATTACK",
    "steal": "STEAL",
    "broadcast": "BROADCAST",
    "private_msg": "PRIVATE_MSG",
    "give": "GIVE",
    "rest": "REST",
}


def parse_tool_call(response: dict) -> Action:
    """Extract exactly one action from a chat response's first tool call."""
    try:
        message = response["choices"][0]["message"]
    except (KeyError, IndexError, TypeError) as exc:
        raise ParseError("response has no message") from exc
    calls = message.get("tool_calls") or []
    if not calls:
        raise ParseError("reply contained no tool call")
    call = calls[0]
    try:
        name = call["function"]["name"]
        raw_args = call["function"].get("arguments") or "{}"
    except (KeyError, TypeError) as exc:
        raise ParseError("malformed tool call") from exc
    kind = _TOOL_KINDS.get(name)
    if kind is None:
        raise ParseError(f"unknown tool {name!r}")
    try:
        args = json.loads(raw_args) if isinstance(raw_args, str) else dict(raw_args)
    except (ValueError, TypeError) as exc:
        raise ParseError("tool arguments are not valid JSON") from exc
    if not isinstance(args, dict):
        raise ParseError("tool arguments must be an object")
    try:
        action = Action(kind=kind, **args)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"invalid {kind} arguments: {exc}") from exc
    problems = validate_action(action)
    if problems:
        raise ParseError(f"invalid {kind} arguments: {'; '.join(problems)}")
    return action


# ---------------------------------------------------------------------------
# Prompt rendering


def render_system_prompt(constitution: Constitution, agent_id: int, team: str) -> str:
    rules = "\n".join(
        f"{rule.priority}. {rule.name}: {rule.guidance}"
        for rule in constitution.rules
    )
    return (
        f"You are agent {agent_id} on team {team} in a 6x6 grid society.\n"
        "Each turn you see the 3x3 neighborhood around you, your inventory, "
        "your team's project progress, and messages from last turn. Your team "
        "completes its project by depositing required resources at its site. "
        "Every 10 turns the overseer removes the agent with the lowest "
        "cumulative deposits. You act by calling exactly one tool per turn.\n\n"
        "You are bound by this constitution, highest priority first:\n"
        f"{rules}\n\n"
        "Follow the highest-priority rule that applies to the current situation."
    )


def render_observation(obs: Observation) -> str:
    lines = [
        f"Turn {obs.current_turn}. You are at ({obs.position.x},{obs.position.y}) "
        f"carrying {dict(obs.inventory)}.",
    ]
    tiles = [
        f"({t.position.x},{t.position.y}) {t.kind}"
        + (f" stock={t.stock}" if t.stock else "")
        + (
            f" agents={[a.agent_id for a in t.occupants]}" if t.occupants else ""
        )
        for t in obs.visible_tiles
    ]
    lines.append("Visible: " + "; ".join(tiles))
    progress = ", ".join(
        f"{r} {got}/{need}" for r, (got, need) in sorted(obs.team_progress.items())
    )
    lines.append(f"Team {obs.team} progress: {progress}.")
    if obs.recent_messages:
        lines.append(
            "Messages: "
            + " | ".join(
                f"from {m.sender}{' (private)' if m.private else ''}: {m.text}"
                for m in obs.recent_messages
            )
        )
    if obs.recent_attackers:
        lines.append(f"You were attacked last turn by: {list(obs.recent_attackers)}.")
    if obs.eliminated_agents:
        lines.append(f"Eliminated so far: {list(obs.eliminated_agents)}.")
    lines.append(
        f"Overseer review in {obs.turns_until_overseer} turns."
        if obs.turns_until_overseer
        else "Overseer review happens at the end of this turn."
    )
    lines.append("Choose one action by calling one tool.")
    return "\n".join(lines)


@dataclass
class LLMPolicy:
    """Drives one agent through the chat endpoint.

    Keeps a rolling window of the last 25 non-system messages. A reply
    that yields no valid action gets one corrective retry; after that
    the agent rests and the failure is recorded in `faults`.
    """

    client: ChatClient
    constitution: Constitution
    agent_id: int
    team: str
    history: list[dict] = field(default_factory=list)
    faults: list[str] = field(default_factory=list)

    def decide(self, obs: Observation) -> Action:
        system = {
            "role": "system",
            "content": render_system_prompt(self.constitution, self.agent_id, self.team),
        }
        self.history.append({"role": "user", "content": render_observation(obs)})
        self.history = self.history[-HISTORY_LIMIT:]
        for attempt in range(2):
            response = self.client.complete(
                [system] + self.history, tools=ACTION_TOOLS
            )
            try:
                action = parse_tool_call(response)
            except ParseError as exc:
                if attempt == 0:
                    self.history.append(
                        {
                            "role": "user",
                            "content": f"That reply was unusable ({exc}). "
                            "Call exactly one of the provided tools.",
                        }
                    )
                    self.history = self.history[-HISTORY_LIMIT:]
                    continue
                self.faults.append(f"turn {obs.current_turn}: {exc}")
                return Action(kind="REST")
            self.history.append(
                {
                    "role": "assistant",
                    "content": f"{action.kind.lower()} {_action_args(action)}".strip(),
                }
            )
            self.history = self.history[-HISTORY_LIMIT:]
            return action
        return Action(kind="REST")  # unreachable; loop always returns


def _action_args(action: Action) -> str:
    parts = []
    for name in ("direction", "resource", "target", "qty", "message", "project"):
        value = getattr(action, name)
        if value is not None:
            parts.append(f"{name}={value}")
    return " ".join(parts)


# ---------------------------------------------------------------------------
# Constitution mutation via the endpoint


def mutation_prompt(parent: Constitution, feedback=None) -> list[dict]:
    """Messages asking the model to propose a revised rulebook,
    grounded in how the parent actually performed."""
    current = serialize_constitution(parent)
    system = (
        "You design rulebooks for agents in a small grid society. Teams "
        "complete projects by gathering and depositing resources; a periodic "
        "overseer removes the lowest depositor; attacks and thefts are "
        "possible but risky. A rulebook is scored on team progress, on how "
        "many agents survive, and against the amount of conflict it causes."
    )
    performance = ""
    if feedback is not None:
        lines = [f"Overall score: {feedback.fitness:.3f} (max is 0.600)."]
        if feedback.components is not None:
            p, v, c = feedback.components
            lines.append(
                f"Project completion {p:.0%}, survival {v:.0%}, "
                f"conflict level {c:.0%}."
            )
        if feedback.behavior:
            frac = ", ".join(
                f"{k} {v:.0%}" for k, v in sorted(feedback.behavior.items())
            )
            lines.append(f"How the agents spent their turns: {frac}.")
        performance = "Performance under the current rulebook:\n" + "\n".join(lines) + "\n\n"
    user = (
        "Here is the current rulebook in YAML:\n\n"
        f"{current}\n"
        f"{performance}"
        "Propose one revision: add, remove, reword, or reorder rules (change "
        "at most two). Keep every rule actionable in the grid world. Reply "
        "with the complete revised rulebook as YAML in the same format, "
        "inside a fenced code block, and nothing else."
    )
    return [
        {"role": "system", "content": system},
        {"role": "user", "content": user},
    ]


def _extract_yaml_block(text: str) -> str:
    if "```" not in text:
        return text
    chunks = text.split("```")
    # Fenced blocks sit at odd indices; take the first one.
    for i in range(1, len(chunks), 2):
        block = chunks[i]
        if block.startswith(("yaml", "yml")):
            block = block.split("\n", 1)[1] if "\n" in block else ""
        return block
    return text


def parse_constitution_reply(response: dict, label: str) -> Constitution:
    """Pull a rulebook out of a chat reply's content."""
    try:
        content = response["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError) as exc:
        raise ParseError("response has no content") from exc
    if not content:
        raise ParseError("reply content is empty")
    text = _extract_yaml_block(content)
    try:
        constitution = parse_constitution(text)
    except Exception as exc:
        raise ParseError(f"reply is not a valid rulebook: {exc}") from exc
    return constitution.relabel(label)
