"""Reference agents: determinism, action validity, oracle replay."""

import numpy as np
import pytest

from traptube.agents import AgentObservation, PlannerAgent, RandomAgent, planner_agent, random_agent
from traptube.env import ACTIONS, ACTION_INDEX
from traptube.harness import run_episode
from traptube.planner import solve
from traptube.tasks import TransferSet

from conftest import vertical_tool_base


def _dummy_obs():
    return AgentObservation(np.zeros((12, 12, 3)), None, 0)


def test_random_agent_deterministic_per_seed():
    a = RandomAgent(99)
    b = RandomAgent(99)
    seq_a = [a.act(_dummy_obs()) for _ in range(50)]
    seq_b = [b.act(_dummy_obs()) for _ in range(50)]
    assert seq_a == seq_b
    c = RandomAgent(100)
    assert [c.act(_dummy_obs()) for _ in range(50)] != seq_a


def test_random_agent_actions_in_set():
    agent = RandomAgent(0)
    for _ in range(500):
        assert agent.act(_dummy_obs()) in ACTION_INDEX


def test_random_agent_roughly_uniform():
    agent = RandomAgent(7)
    counts = {a: 0 for a in ACTIONS}
    n = 16_000
    for _ in range(n):
        counts[agent.act(_dummy_obs())] += 1
    for action, count in counts.items():
        assert abs(count / n - 1 / 16) < 0.01, action


def test_planner_agent_solves_own_config(base):
    agent = PlannerAgent(base)
    episode = run_episode(base, agent)
    assert episode.solved
    assert episode.steps == solve(base).length


def test_planner_agent_deterministic(base):
    a = run_episode(base, PlannerAgent(base))
    b = run_episode(base, PlannerAgent(base))
    assert a.to_json() == b.to_json()


def test_planner_agent_rejects_unsolvable():
    with pytest.raises(ValueError):
        PlannerAgent(vertical_tool_base())


def test_planner_agent_fallback_after_plan(base):
    agent = PlannerAgent(base)
    agent.begin_episode(base)
    for _ in range(agent.plan.length):
        agent.act(_dummy_obs())
    extra = agent.act(_dummy_obs())
    assert extra in ACTION_INDEX
    assert agent.act(_dummy_obs()) == extra  # fixed from then on


def test_factory_helpers(base):
    assert isinstance(random_agent(3), RandomAgent)
    assert isinstance(planner_agent(base), PlannerAgent)


def test_planner_agent_on_sampled_tasks(sample_bank):
    for cfg in sample_bank.tasks(TransferSet(perceptual=True), 5):
        episode = run_episode(cfg, PlannerAgent(cfg))
        assert episode.solved
