"""Charter compilation and scripted decisions.

Decision tests hand-build observations, so each asserts exactly one
branch of the directive walk.
"""

from polis import Constitution, Directive, MoralRule, baseline, derive_profile
from polis.policies import (
    MEMORY_CAP,
    PolicyMemory,
    ScriptedPolicy,
    scripted_decide,
)
from polis.world import Observation, Position, VisibleAgent, VisibleTile


def rule(name, guidance, priority, directives=()):
    return MoralRule(
        name=name,
        guidance=guidance,
        summary=guidance,
        priority=priority,
        directives=tuple(directives),
    )


def charter(*rules_):
    return Constitution(label="t", rules=tuple(rules_))


def make_obs(
    agent_id=1,
    team="Shelter",
    position=(2, 2),
    inventory=None,
    tiles=(),
    progress=None,
    attackers=(),
    turn=1,
):
    """Observation with a 3x3 plain window, overridden tile by tile.

    tiles: iterable of (x, y, kind, stock, occupants).
    """
    px, py = position
    override = {(t[0], t[1]): t for t in tiles}
    visible = []
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            x, y = px + dx, py + dy
            kind, stock, occupants = "plain", {}, ()
            if (x, y) in override:
                _, _, kind, stock, occupants = override[(x, y)]
            visible.append(VisibleTile(Position(x, y), kind, dict(stock), tuple(occupants)))
    if progress is None:
        progress = {"wood": (0, 150)}
    return Observation(
        agent_id=agent_id,
        team=team,
        position=Position(px, py),
        inventory=dict(inventory or {}),
        visible_tiles=tuple(visible),
        team_progress=progress,
        team_deposits=0,
        recent_messages=(),
        recent_attackers=tuple(attackers),
        current_turn=turn,
        turns_until_overseer=9,
        eliminated_agents=(),
    )


def decide(constitution, obs, memory=None):
    profile = derive_profile(constitution)
    return scripted_decide(profile, obs, memory or PolicyMemory(), None)


# -- derivation goldens -----------------------------------------------------


def directive_keys(profile):
    return [
        (d.kind, d.mode, d.threshold) for d in profile.directives
    ]


def test_c_star_profile():
    assert directive_keys(derive_profile(baseline("c_star"))) == [
        ("deposit_first", None, None),
        ("gather_needed", None, None),
        ("seek_largest_deficit", None, None),
        ("give_surplus", None, None),
        ("broadcast_threshold", None, 2),
        ("aggression", "retaliate", None),
    ]


def test_zero_sum_profile():
    assert directive_keys(derive_profile(baseline("zero_sum"))) == [
        ("aggression", "always", None),
        ("hoard", None, None),
    ]


def test_hhh_profile():
    assert directive_keys(derive_profile(baseline("hhh"))) == [
        ("gather_needed", None, None),
        ("aggression", "never", None),
    ]


def test_llm_generated_profile():
    assert directive_keys(derive_profile(baseline("llm_generated"))) == [
        ("gather_needed", None, None),
        ("broadcast_threshold", None, 1),
        ("aggression", "never", None),
    ]


def test_structured_directives_bypass_text_extraction():
    c = charter(
        rule("odd", "this text mentions attack and steal everywhere",
             1, [Directive("gather_needed")])
    )
    assert directive_keys(derive_profile(c)) == [("gather_needed", None, None)]


def test_first_directive_of_each_kind_wins():
    c = charter(
        rule("a", "x", 1, [Directive("aggression", mode="retaliate")]),
        rule("b", "x", 2, [Directive("aggression", mode="always")]),
    )
    profile = derive_profile(c)
    assert profile.aggression_mode() == "retaliate"
    assert len(profile.directives) == 1


def test_inert_charter_falls_back_to_resting_with_warning():
    c = charter(rule("vibes", "be excellent to each other", 1))
    profile = derive_profile(c)
    assert directive_keys(profile) == [("rest_bias", None, None)]
    assert profile.warnings and "no actionable directives" in profile.warnings[0]


# -- decisions --------------------------------------------------------------


def test_deposit_fires_anywhere_when_carrying_needed():
    obs = make_obs(inventory={"wood": 3})
    action = decide(baseline("c_star"), obs)
    assert action.kind == "DEPOSIT"
    assert action.project == "Shelter" and action.resource == "wood"


def test_hoard_suppresses_deposit():
    c = charter(
        rule("d", "x", 1, [Directive("deposit_first")]),
        rule("h", "x", 2, [Directive("hoard")]),
    )
    obs = make_obs(inventory={"wood": 3})
    assert decide(c, obs).kind == "REST"


def test_gather_from_standing_stock():
    obs = make_obs(tiles=[(2, 2, "wood_grove", {"wood": 4}, ())])
    action = decide(baseline("c_star"), obs)
    assert action.kind == "GATHER" and action.resource == "wood"


def test_gather_skipped_for_satisfied_requirement():
    obs = make_obs(
        tiles=[(2, 2, "wood_grove", {"wood": 4}, ())],
        progress={"wood": (150, 150)},
    )
    assert decide(charter(rule("g", "x", 1, [Directive("gather_needed")])), obs).kind == "REST"


def test_always_aggression_strikes_visible_opponent_first():
    enemy = VisibleAgent(5, "Market", {})
    friend = VisibleAgent(2, "Shelter", {})
    obs = make_obs(
        inventory={"wood": 3},  # a depositing profile would deposit here
        tiles=[(3, 2, "plain", {}, (enemy, friend))],
    )
    action = decide(baseline("zero_sum"), obs)
    assert action.kind == "ATTACK" and action.target == 5


def test_always_aggression_targets_lowest_opponent_id():
    obs = make_obs(
        tiles=[
            (3, 2, "plain", {}, (VisibleAgent(6, "Market", {}),)),
            (1, 2, "plain", {}, (VisibleAgent(4, "Market", {}),)),
        ]
    )
    assert decide(baseline("zero_sum"), obs).target == 4


def test_retaliation_requires_a_recorded_attacker():
    c = charter(rule("r", "x", 1, [Directive("aggression", mode="retaliate")]))
    attacker = VisibleAgent(4, "Market", {})
    calm = make_obs(tiles=[(3, 2, "plain", {}, (attacker,))])
    assert decide(c, calm).kind == "REST"
    provoked = make_obs(tiles=[(3, 2, "plain", {}, (attacker,))], attackers=(4,))
    action = decide(c, provoked)
    assert action.kind == "ATTACK" and action.target == 4


def test_retaliation_ignores_bystanders():
    c = charter(rule("r", "x", 1, [Directive("aggression", mode="retaliate")]))
    bystander = VisibleAgent(5, "Market", {})
    obs = make_obs(tiles=[(3, 2, "plain", {}, (bystander,))], attackers=(4,))
    assert decide(c, obs).kind == "REST"


def test_broadcast_on_threshold_then_dedupe():
    memory = PolicyMemory()
    c = charter(rule("b", "x", 1, [Directive("broadcast_threshold", threshold=2)]))
    obs = make_obs(tiles=[(2, 2, "wood_grove", {"wood": 3}, ())])
    first = scripted_decide(derive_profile(c), obs, memory, None)
    assert first.kind == "BROADCAST"
    assert "3 wood" in first.message and "(2,2)" in first.message
    second = scripted_decide(derive_profile(c), obs, memory, None)
    assert second.kind == "REST"


def test_broadcast_below_threshold_stays_quiet():
    c = charter(rule("b", "x", 1, [Directive("broadcast_threshold", threshold=2)]))
    obs = make_obs(tiles=[(2, 2, "wood_grove", {"wood": 1}, ())])
    assert decide(c, obs).kind == "REST"


def test_give_surplus_to_adjacent_teammate():
    c = charter(rule("g", "x", 1, [Directive("give_surplus")]))
    mate = VisibleAgent(2, "Shelter", {})
    obs = make_obs(
        inventory={"gems": 2},  # Shelter needs wood, not gems
        tiles=[(3, 2, "plain", {}, (mate,))],
    )
    action = decide(c, obs)
    assert action.kind == "GIVE"
    assert action.target == 2 and action.resource == "gems" and action.qty == 2


def test_needed_resources_are_not_surplus():
    c = charter(rule("g", "x", 1, [Directive("give_surplus")]))
    mate = VisibleAgent(2, "Shelter", {})
    obs = make_obs(inventory={"wood": 2}, tiles=[(3, 2, "plain", {}, (mate,))])
    assert decide(c, obs).kind == "REST"


def test_seek_steps_toward_remembered_stock():
    c = charter(rule("s", "x", 1, [Directive("seek_largest_deficit")]))
    memory = PolicyMemory()
    # See the grove to the east, then walk toward it from afar.
    scripted_decide(derive_profile(c), make_obs(position=(3, 2),
        tiles=[(4, 2, "wood_grove", {"wood": 5}, ())]), memory, None)
    action = scripted_decide(derive_profile(c), make_obs(position=(1, 2)), memory, None)
    assert action.kind == "MOVE" and action.direction == "E"


def test_seek_prefers_largest_deficit():
    c = charter(rule("s", "x", 1, [Directive("seek_largest_deficit")]))
    memory = PolicyMemory()
    profile = derive_profile(c)
    progress = {"stone": (100, 120), "gems": (0, 30)}  # gems deficit is larger
    sighting = make_obs(
        team="Market",
        position=(2, 2),
        progress=progress,
        tiles=[
            (1, 2, "gem_mine", {"gems": 2}, ()),
            (3, 2, "stone_quarry", {"stone": 5}, ()),
        ],
    )
    scripted_decide(profile, sighting, memory, None)
    action = scripted_decide(
        profile, make_obs(team="Market", position=(2, 2), progress=progress), memory, None
    )
    # Both are one step away; the gems deficit (30) beats stone (20),
    # so the walk goes west to the mine rather than east to the quarry.
    assert action.kind == "MOVE" and action.direction == "W"


def test_seek_explores_frontier_when_nothing_is_known():
    c = charter(rule("s", "x", 1, [Directive("seek_largest_deficit")]))
    action = decide(c, make_obs(position=(2, 2)))
    assert action.kind == "MOVE"


def test_memory_forgets_depleted_tiles():
    memory = PolicyMemory()
    memory.ingest(make_obs(tiles=[(3, 2, "wood_grove", {"wood": 2}, ())]))
    assert memory.sightings[(3, 2)] == ("wood", 2)
    memory.ingest(make_obs(tiles=[(3, 2, "wood_grove", {"wood": 0}, ())]))
    assert (3, 2) not in memory.sightings


def test_memory_history_is_capped():
    policy = ScriptedPolicy(baseline("hhh"))
    for turn in range(MEMORY_CAP + 10):
        policy.decide(make_obs(turn=turn + 1))
    assert len(policy.memory.history) == MEMORY_CAP


def test_policy_accepts_constitution_or_profile():
    from_constitution = ScriptedPolicy(baseline("hhh"))
    from_profile = ScriptedPolicy(derive_profile(baseline("hhh")))
    assert from_constitution.profile == from_profile.profile
