"""Shared fixtures.

Episode logs are expensive relative to everything else here, so the
handful of logs many tests share are built once per session.
"""

from __future__ import annotations

import pytest

from polis import WorldConfig, baseline, run_episode
from polis.policies import ScriptedPolicy


def scripted_team(constitution, config=None):
    cfg = config or WorldConfig()
    ids = [i for _, members in cfg.teams for i in members]
    return {i: ScriptedPolicy(constitution) for i in ids}


@pytest.fixture(scope="session")
def world_config():
    return WorldConfig()


@pytest.fixture(scope="session")
def c_star_log(world_config):
    policies = scripted_team(baseline("c_star"), world_config)
    return run_episode(world_config, policies, seed=42)


@pytest.fixture(scope="session")
def zero_sum_log(world_config):
    policies = scripted_team(baseline("zero_sum"), world_config)
    return run_episode(world_config, policies, seed=42)


@pytest.fixture(scope="session")
def hhh_log(world_config):
    policies = scripted_team(baseline("hhh"), world_config)
    return run_episode(world_config, policies, seed=42)
