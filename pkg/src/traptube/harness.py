"""Episode runner, evaluation protocols, and report emission.

An evaluation samples fresh tasks for a transfer set, runs one episode
per task, and reports the solved fraction. ``experiment_eval`` repeats
that over independent trial seeds for the base set plus all seven
transfer sets and aggregates mean and sample standard deviation per set,
which is the shape external learners are compared in.

Seed discipline: a root seed expands into named substreams (one per
task, one per agent, one per trial), so adding episodes or trials never
perturbs earlier draws and reports are byte-reproducible.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .agents import Agent, AgentObservation, AgentProtocolError, PlannerAgent, RandomAgent
from .env import ACTION_INDEX, Action, EnvState, reset, step
from .grid import render
from .protocol import WireClient, in_memory_client
from .rng import derive_seed
from .tasks import (
    ALL_TRANSFER_SETS,
    SCHEMA_VERSION,
    TaskConfig,
    TransferSet,
    sample_task,
)

AgentFactory = Callable[[TaskConfig, int], Agent]


def random_agent_factory(config: TaskConfig, agent_seed: int) -> Agent:
    return RandomAgent(agent_seed)


def planner_agent_factory(config: TaskConfig, agent_seed: int) -> Agent:
    return PlannerAgent(config)


AGENT_FACTORIES: dict[str, AgentFactory] = {
    "random": random_agent_factory,
    "planner": planner_agent_factory,
}


@dataclass(frozen=True)
class EpisodeResult:
    """One episode: the actions taken, rewards seen, and the outcome."""

    task: dict
    actions: tuple[Action, ...]
    rewards: tuple[int, ...]
    solved: bool
    steps: int

    def to_jsonable(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "task": self.task,
            "actions": [a.to_jsonable() for a in self.actions],
            "rewards": list(self.rewards),
            "solved": self.solved,
            "steps": self.steps,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_jsonable(), sort_keys=True, separators=(",", ":"))


def task_reference(config: TaskConfig) -> dict:
    """Compact task identity: provenance when sampled, inline otherwise."""
    if config.seed_provenance is not None:
        return config.seed_provenance.to_jsonable()
    return {"config": config.to_jsonable()}


def run_episode(
    config: TaskConfig, agent: Agent, record_states: bool = False
) -> EpisodeResult | tuple[EpisodeResult, list[EnvState]]:
    """Run one episode to termination, feeding the agent its observation
    contract (rendered tensor, previous action, previous reward).

    Raises :class:`AgentProtocolError` when the agent answers with
    anything outside the 16-action set; the partial episode (marked
    failed) rides on the exception as ``.result``.
    """
    state = reset(config)
    agent.begin_episode(config)
    actions: list[Action] = []
    rewards: list[int] = []
    states = [state]
    prev_action: Action | None = None
    prev_reward = 0
    while not state.done:
        obs = render(state, config.palette, config.symbols)
        action = agent.act(AgentObservation(obs, prev_action, prev_reward))
        if not isinstance(action, Action) or action not in ACTION_INDEX:
            failed = EpisodeResult(
                task=task_reference(config),
                actions=tuple(actions),
                rewards=tuple(rewards),
                solved=False,
                steps=len(actions),
            )
            error = AgentProtocolError(f"agent returned an out-of-set action: {action!r}")
            error.result = failed
            raise error
        result = step(state, action)
        state = result.state
        actions.append(action)
        rewards.append(result.reward)
        states.append(state)
        prev_action = action
        prev_reward = result.reward
    episode = EpisodeResult(
        task=task_reference(config),
        actions=tuple(actions),
        rewards=tuple(rewards),
        solved=bool(rewards and rewards[-1] == 1),
        steps=len(actions),
    )
    agent.end_episode(episode)
    if record_states:
        return episode, states
    return episode


def run_episode_over_wire(
    agent: Agent,
    transfer_set: TransferSet | None = None,
    seed: int = 0,
    task: TaskConfig | None = None,
    client: WireClient | None = None,
) -> EpisodeResult:
    """Drive one episode through the wire protocol.

    With the same agent and task this produces an EpisodeResult
    byte-identical to :func:`run_episode`, because observations survive
    the JSON round trip exactly.
    """
    if client is None:
        client = in_memory_client()
    if task is not None:
        frame = client.reset(task=task)
        ref = task_reference(task)
        config_for_agent = task
    else:
        ts = transfer_set or TransferSet()
        frame = client.reset(transfer_set=ts, seed=seed)
        ref = {"seed": seed, "transfer_set": ts.name}
        config_for_agent = sample_task(ts, seed)

    def unpack(frame: dict) -> np.ndarray:
        flat = np.asarray(frame["observation"], dtype=np.float64)
        n = round((flat.size // 3) ** 0.5)
        return flat.reshape(n, n, 3)

    agent.begin_episode(config_for_agent)
    actions: list[Action] = []
    rewards: list[int] = []
    prev_action: Action | None = None
    prev_reward = 0
    obs = unpack(frame)
    done = frame["done"]
    while not done:
        action = agent.act(AgentObservation(obs, prev_action, prev_reward))
        if not isinstance(action, Action) or action not in ACTION_INDEX:
            raise AgentProtocolError(f"agent returned an out-of-set action: {action!r}")
        frame = client.step(action)
        obs = unpack(frame)
        done = frame["done"]
        reward = frame["reward"]
        actions.append(action)
        rewards.append(reward)
        prev_action = action
        prev_reward = reward
    client.close()
    episode = EpisodeResult(
        task=ref,
        actions=tuple(actions),
        rewards=tuple(rewards),
        solved=bool(rewards and rewards[-1] == 1),
        steps=len(actions),
    )
    agent.end_episode(episode)
    return episode


@dataclass(frozen=True)
class TrialSetStats:
    """Per-(trial, transfer set) counts."""

    n_tasks: int
    n_solved: int

    @property
    def solve_rate(self) -> float:
        return self.n_solved / self.n_tasks

    @property
    def any_success(self) -> bool:
        return self.n_solved > 0

    def to_jsonable(self) -> dict:
        return {
            "n_tasks": self.n_tasks,
            "n_solved": self.n_solved,
            "solve_rate": self.solve_rate,
        }


def evaluate(
    factory: AgentFactory,
    transfer_set: TransferSet,
    n_tasks: int,
    seed: int,
) -> TrialSetStats:
    """Sample ``n_tasks`` fresh tasks for the set and run one episode each.

    Deterministic given the seed: task i draws from the "task/<set>/<i>"
    substream and its agent from "agent/<set>/<i>".
    """
    if n_tasks < 1:
        raise ValueError("n_tasks must be >= 1")
    n_solved = 0
    for i in range(n_tasks):
        task_seed = derive_seed(seed, f"task/{transfer_set.name}/{i}")
        agent_seed = derive_seed(seed, f"agent/{transfer_set.name}/{i}")
        config = sample_task(transfer_set, task_seed)
        agent = factory(config, agent_seed)
        episode = run_episode(config, agent)
        n_solved += int(episode.solved)
    return TrialSetStats(n_tasks=n_tasks, n_solved=n_solved)


def _mean_std(values: Sequence[float]) -> tuple[float, float]:
    mean = sum(values) / len(values)
    if len(values) < 2:
        return mean, 0.0
    var = sum((v - mean) ** 2 for v in values) / (len(values) - 1)
    return mean, math.sqrt(var)


@dataclass(frozen=True)
class EvalReport:
    """Solve rates over the base set and all seven transfer sets.

    ``per_set`` maps set name to mean/std over trials plus the raw
    per-trial counts; with ``any_success`` the aggregated statistic is
    solved-at-least-once per trial instead of the solve rate.
    """

    agent: str
    seed: int
    trials: int
    n_tasks: int
    any_success: bool
    per_set: dict[str, dict]
    timestamp: str | None = None

    def to_jsonable(self) -> dict:
        payload = {
            "schema_version": SCHEMA_VERSION,
            "agent": self.agent,
            "seed": self.seed,
            "trials": self.trials,
            "n_tasks": self.n_tasks,
            "any_success": self.any_success,
            "per_set": self.per_set,
        }
        if self.timestamp is not None:
            payload["timestamp"] = self.timestamp
        return payload

    def to_json(self) -> str:
        return json.dumps(self.to_jsonable(), sort_keys=True, separators=(",", ":"))


def experiment_eval(
    factory: AgentFactory,
    trials: int,
    n_tasks: int,
    seed: int,
    agent_name: str = "agent",
    any_success: bool = False,
    timestamp: str | None = None,
) -> EvalReport:
    """Evaluate over all eight sets for each trial seed and aggregate."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    per_set: dict[str, dict] = {}
    stats: dict[str, list[TrialSetStats]] = {ts.name: [] for ts in ALL_TRANSFER_SETS}
    for t in range(trials):
        trial_seed = derive_seed(seed, f"trial/{t}")
        for ts in ALL_TRANSFER_SETS:
            stats[ts.name].append(evaluate(factory, ts, n_tasks, trial_seed))
    for ts in ALL_TRANSFER_SETS:
        trial_stats = stats[ts.name]
        values = [
            (1.0 if s.any_success else 0.0) if any_success else s.solve_rate
            for s in trial_stats
        ]
        mean, std = _mean_std(values)
        per_set[ts.name] = {
            "mean": mean,
            "std": std,
            "trials": [s.to_jsonable() for s in trial_stats],
        }
    return EvalReport(
        agent=agent_name,
        seed=seed,
        trials=trials,
        n_tasks=n_tasks,
        any_success=any_success,
        per_set=per_set,
        timestamp=timestamp,
    )


def format_report_table(report: EvalReport) -> str:
    """Human-readable aligned table; the JSON form is the source of truth."""
    names = [ts.name for ts in ALL_TRANSFER_SETS]
    width = max(len(n) for n in names)
    lines = [
        f"agent: {report.agent}   trials: {report.trials}   "
        f"tasks/set: {report.n_tasks}   seed: {report.seed}",
        f"{'set'.ljust(width)}  {'mean':>8}  {'std':>8}",
    ]
    for name in names:
        entry = report.per_set[name]
        lines.append(
            f"{name.ljust(width)}  {entry['mean'] * 100:7.1f}%  {entry['std'] * 100:7.1f}%"
        )
    return "\n".join(lines)


def save_trace(config: TaskConfig, episode: EpisodeResult, states: list[EnvState]) -> dict:
    """Serializable episode trace: config, per-step states, actions, rewards."""
    return {
        "schema_version": SCHEMA_VERSION,
        "config": config.to_jsonable(),
        "states": [s.to_jsonable() for s in states],
        "actions": [a.to_jsonable() for a in episode.actions],
        "rewards": list(episode.rewards),
    }


def replay_trace(trace: dict) -> tuple[TaskConfig, list[EnvState]]:
    """Re-simulate a trace, verifying states and rewards match exactly.

    Raises ValueError on any divergence; returns the config and the
    re-simulated state sequence.
    """
    config = TaskConfig.from_jsonable(trace["config"])
    state = reset(config)
    states = [state]
    recorded_states = trace["states"]
    if state.to_jsonable() != recorded_states[0]:
        raise ValueError("trace initial state does not match reset")
    for k, (action_data, recorded_reward) in enumerate(
        zip(trace["actions"], trace["rewards"])
    ):
        action = Action.from_jsonable(action_data)
        result = step(state, action)
        state = result.state
        states.append(state)
        if result.reward != recorded_reward:
            raise ValueError(f"trace reward mismatch at step {k}")
        if state.to_jsonable() != recorded_states[k + 1]:
            raise ValueError(f"trace state mismatch at step {k}")
    return config, states
