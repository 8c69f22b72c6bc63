"""Agent interface and the bundled reference agents.

An agent sees the rendered observation tensor plus its previous action
and reward, and must answer with one of the 16 (grasp, move) actions.
``RandomAgent`` is the null baseline; ``PlannerAgent`` replays the exact
search oracle's plan for the task it was built on.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .env import ACTIONS, Action, Position, reset, step
from .grid import Direction
from .planner import solve
from .rng import SplitMix64

if TYPE_CHECKING:
    from .harness import EpisodeResult
    from .tasks import TaskConfig


class AgentProtocolError(RuntimeError):
    """Agent violated its contract (for example an out-of-set action)."""


@dataclass
class AgentObservation:
    """What an agent sees each step."""

    observation: np.ndarray
    prev_action: Action | None
    prev_reward: int


class Agent:
    """Base agent: episode hooks are optional, ``act`` is not."""

    name = "agent"

    def begin_episode(self, config: "TaskConfig") -> None:
        pass

    def act(self, obs: AgentObservation) -> Action:
        raise NotImplementedError

    def end_episode(self, result: "EpisodeResult") -> None:
        pass


class RandomAgent(Agent):
    """Uniform draws over the 16 actions, deterministic per seed."""

    name = "random"

    def __init__(self, seed: int):
        self._rng = SplitMix64(seed)

    def act(self, obs: AgentObservation) -> Action:
        return ACTIONS[self._rng.randrange(len(ACTIONS))]


class PlannerAgent(Agent):
    """Replays the oracle plan for the config it was constructed on.

    A plan ends in success, so a normally terminating episode never runs
    past it; if driven further anyway, the agent keeps emitting one fixed
    action aimed at the nearest grid edge from the plan's final cell.
    """

    name = "planner"

    def __init__(self, config: "TaskConfig"):
        plan = solve(config)
        if plan is None:
            raise ValueError("cannot build a planner agent for an unsolvable task")
        self.plan = plan
        self._cursor = 0
        self._fallback = Action(
            grasp=Direction.UP,
            move=_nearest_edge_direction(_final_cell(config, plan), config.grid_size),
        )

    def begin_episode(self, config: "TaskConfig") -> None:
        self._cursor = 0

    def act(self, obs: AgentObservation) -> Action:
        if self._cursor < len(self.plan.actions):
            action = self.plan.actions[self._cursor]
            self._cursor += 1
            return action
        return self._fallback


def _final_cell(config: "TaskConfig", plan) -> Position:
    state = reset(config)
    for action in plan.actions:
        state = step(state, action).state
    return state.agent


def _nearest_edge_direction(cell: Position, grid_size: int) -> Direction:
    distances = (
        (cell.row, Direction.UP),
        (grid_size - 1 - cell.row, Direction.DOWN),
        (cell.col, Direction.LEFT),
        (grid_size - 1 - cell.col, Direction.RIGHT),
    )
    return min(distances, key=lambda pair: pair[0])[1]


def random_agent(seed: int) -> RandomAgent:
    return RandomAgent(seed)


def planner_agent(config: "TaskConfig") -> PlannerAgent:
    return PlannerAgent(config)
