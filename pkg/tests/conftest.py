"""Shared fixtures: canonical configs, miniature boards, sample banks."""

from __future__ import annotations

import pytest

from traptube.env import End, Orientation, Position, ToolPose, TubeSpec
from traptube.grid import SymbolMap
from traptube.rng import stream
from traptube.tasks import (
    ALL_TRANSFER_SETS,
    BASE_PALETTE,
    TaskConfig,
    TransferSet,
    base_config,
    sample_task,
    validate_config,
)


@pytest.fixture(scope="session")
def base():
    return base_config()


def mini6_config() -> TaskConfig:
    """6x6 board for exhaustive dynamics checks (deliberately unsolvable:
    the exit sits on the board edge so nothing can land beyond it)."""
    tube = TubeSpec(
        axis=Orientation.HORIZONTAL,
        interior_anchor=Position(2, 2),
        interior_length=3,
        lateral_thickness=1,
        trap_end=End.NEGATIVE,
        hole_lane=0,
    )
    return TaskConfig(
        tube=tube,
        agent_start=Position(0, 0),
        food_start=Position(2, 2),
        tool=ToolPose(Position(5, 0), Orientation.HORIZONTAL, 4),
        palette=BASE_PALETTE,
        symbols=SymbolMap.identity(),
        grid_size=6,
    )


def mini6_rich_config() -> TaskConfig:
    """Solvable 6x6 board where pushing, trapping, and exit pass-through
    are all reachable, so exhaustive comparisons cover the full rules."""
    tube = TubeSpec(
        axis=Orientation.HORIZONTAL,
        interior_anchor=Position(2, 3),
        interior_length=1,
        lateral_thickness=1,
        trap_end=End.NEGATIVE,
        hole_lane=0,
    )
    return TaskConfig(
        tube=tube,
        agent_start=Position(0, 0),
        food_start=Position(2, 3),
        tool=ToolPose(Position(4, 0), Orientation.HORIZONTAL, 2),
        palette=BASE_PALETTE,
        symbols=SymbolMap.identity(),
        grid_size=6,
    )


@pytest.fixture(scope="session")
def mini6_rich():
    return mini6_rich_config()


def mini6_trap_config() -> TaskConfig:
    """6x6 board where shoving the food into the trap is reachable: the
    tool starts right of the exit and can only push the food trapward."""
    tube = TubeSpec(
        axis=Orientation.HORIZONTAL,
        interior_anchor=Position(2, 2),
        interior_length=1,
        lateral_thickness=1,
        trap_end=End.NEGATIVE,
        hole_lane=0,
    )
    return TaskConfig(
        tube=tube,
        agent_start=Position(0, 0),
        food_start=Position(2, 2),
        tool=ToolPose(Position(2, 4), Orientation.HORIZONTAL, 2),
        palette=BASE_PALETTE,
        symbols=SymbolMap.identity(),
        grid_size=6,
    )


@pytest.fixture(scope="session")
def mini6():
    return mini6_config()


def vertical_tool_base() -> TaskConfig:
    """Base layout with a vertical tool: valid, reachable, but unsolvable
    (a crosswise tool can never enter the hole lane)."""
    cfg = base_config()
    return TaskConfig(
        tube=cfg.tube,
        agent_start=cfg.agent_start,
        food_start=cfg.food_start,
        tool=ToolPose(Position(1, 1), Orientation.VERTICAL, 4),
        palette=cfg.palette,
        symbols=cfg.symbols,
    )


def small_solvable_configs(count: int, seed: int, max_plan: int = 16) -> list[TaskConfig]:
    """Randomized short-horizon layouts around the base tube.

    Tool pre-staged near the trap-side pocket and the agent nearby, so
    optimal plans stay short enough for iterative-deepening cross-checks.
    """
    from traptube.planner import solve

    base = base_config()
    rng = stream(seed, "small-configs")
    configs: list[TaskConfig] = []
    attempts = 0
    while len(configs) < count:
        attempts += 1
        if attempts > 100 * count:
            raise RuntimeError("small-config generation is not converging")
        food = Position(6, rng.choice((6, 7)))
        anchor_col = rng.choice((0, 1, 2))
        tool = ToolPose(Position(6, anchor_col), Orientation.HORIZONTAL, 4)
        tool_cells = set(tool.cells())
        spots = [
            Position(r, c)
            for r in range(4, 9)
            for c in range(0, 6)
            if abs(r - 6) + abs(c - anchor_col) <= 4
        ]
        spots = [
            p
            for p in spots
            if p not in tool_cells
            and p not in set(base.tube.wall_cells())
            and p not in (base.tube.trap_cell, base.tube.exit_cell)
            and p != food
            and not (p.row == 6 and 5 <= p.col <= 7)
        ]
        agent = rng.choice(spots)
        cfg = TaskConfig(
            tube=base.tube,
            agent_start=agent,
            food_start=food,
            tool=tool,
            palette=BASE_PALETTE,
            symbols=SymbolMap.identity(),
        )
        if validate_config(cfg):
            continue
        plan = solve(cfg)
        if plan is None or plan.length > max_plan:
            continue
        configs.append(cfg)
    return configs


class SampleBank:
    """Lazily built, cached task samples shared across tests."""

    def __init__(self):
        self._cache: dict[tuple[str, int], list[TaskConfig]] = {}

    def tasks(self, transfer_set: TransferSet, count: int, seed_base: int = 0) -> list[TaskConfig]:
        key = (transfer_set.name, seed_base)
        existing = self._cache.setdefault(key, [])
        while len(existing) < count:
            existing.append(sample_task(transfer_set, seed_base + len(existing)))
        return existing[:count]


@pytest.fixture(scope="session")
def sample_bank():
    return SampleBank()


@pytest.fixture(scope="session")
def all_sets():
    return ALL_TRANSFER_SETS
