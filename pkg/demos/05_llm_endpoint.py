"""What the LLM integration sends and accepts, shown offline.

Agents driven by a chat endpoint see a constitution as their system
prompt, one rendered observation per turn, and must answer with
exactly one tool call. This demo renders both prompts and feeds a
handmade tool-call reply through the parser, so it runs without any
endpoint. If POLIS_LLM_BASE_URL is set, it finishes with one live
decision.

Credentials come from the environment only:
  POLIS_LLM_BASE_URL   endpoint base, e.g. https://host/v1
  POLIS_LLM_API_KEY    bearer token, optional for open endpoints
  POLIS_LLM_MODEL      model name (defaults to openai/gpt-oss-120b)
"""

import json
import os

from polis import baseline
from polis.llm import (
    ACTION_TOOLS,
    ChatClient,
    ChatEndpointConfig,
    LLMPolicy,
    parse_tool_call,
    render_observation,
    render_system_prompt,
)
from polis.world import Observation, Position, VisibleTile

constitution = baseline("c_star")

print("=== system prompt (agent 1, Shelter) ===")
print(render_system_prompt(constitution, agent_id=1, team="Shelter"))

observation = Observation(
    agent_id=1,
    team="Shelter",
    position=Position(2, 2),
    inventory={"wood": 2},
    visible_tiles=(
        VisibleTile(Position(2, 2), "plain", {}, ()),
        VisibleTile(Position(3, 2), "wood_grove", {"wood": 4}, ()),
    ),
    team_progress={"wood": (31, 150)},
    team_deposits=12,
    recent_messages=(),
    recent_attackers=(),
    current_turn=17,
    turns_until_overseer=3,
    eliminated_agents=(2,),
)
print("=== a rendered observation ===")
print(render_observation(observation))

print("=== the nine tools ===")
for tool in ACTION_TOOLS:
    fn = tool["function"]
    required = fn["parameters"].get("required", [])
    print(f"  {fn['name']:<13} required: {', '.join(required) or 'nothing'}")

print("\n=== parsing a reply ===")
reply = {
    "choices": [{
        "message": {
            "tool_calls": [{
                "function": {
                    "name": "deposit",
                    "arguments": json.dumps({"project": "Shelter", "resource": "wood"}),
                }
            }]
        }
    }]
}
print(f"tool call 'deposit' parsed to {parse_tool_call(reply)}")

if not os.environ.get("POLIS_LLM_BASE_URL"):
    print("\nPOLIS_LLM_BASE_URL is not set; skipping the live call.")
else:
    endpoint = ChatEndpointConfig.from_env()
    print(f"\nasking {endpoint.model} at {endpoint.base_url} for one decision")
    policy = LLMPolicy(ChatClient(endpoint), constitution)
    print(f"the model chose: {policy.decide(observation)}")
