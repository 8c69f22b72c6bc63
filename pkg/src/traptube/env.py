"""Trap-tube dynamics: deterministic reset/step under the 16-action set.

The environment is a 12x12 (configurable) grid holding one agent, one
straight tool, one food item, and one tube. The tube is a walled rectangle
around an interior channel, open only at the two axial end caps of one
lane: the trap cap swallows the food, the exit cap lets it pass through to
the cell beyond. The agent walks on ground; walls, trap, exit, and tool
cells all block it. A grasp action pointing at an adjacent tool cell turns
the step into a rigid translation of agent plus tool; a tool cell landing
on the food pushes the food one cell in the move direction.

Transition rules, in order:

1. If the cell adjacent to the agent in the grasp direction is a tool
   cell, the step is a grasped translation, else a plain move.
2. Plain move: the destination must be in bounds and ground or food;
   moving onto the food collects it.
3. Grasped translation: every translated tool cell must land in bounds on
   ground, trap, exit (the tool spans holes), or food (triggering a push);
   the translated agent cell obeys plain-move legality. Cells vacated by
   the moving tool and agent count as free. Any violation blocks the whole
   translation.
4. Food push: onto ground, the food moves; onto the trap, it is trapped
   (removed, never recoverable); onto the exit, it passes through to the
   next cell in the move direction, which must be free ground or the whole
   translation blocks; onto anything else the translation blocks.
5. Reward 1 and termination when the agent's cell equals the food's cell;
   the step counter always advances, and the episode ends at the horizon.

Dynamics read only object categories, never colors or symbol maps, so
appearance transfers cannot change behavior.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from enum import Enum
from functools import lru_cache
from typing import TYPE_CHECKING

import numpy as np

from .grid import (
    CATEGORIES,
    DIRECTIONS,
    Direction,
    ObjectCategory,
    Position,
    render,
)

if TYPE_CHECKING:
    from .tasks import TaskConfig


class ConfigError(ValueError):
    """Task configuration violates layout constraints."""

    def __init__(self, violations: list[str]):
        super().__init__("; ".join(violations))
        self.violations = list(violations)


class EpisodeFinished(RuntimeError):
    """step() was called on a finished episode."""


class Orientation(Enum):
    HORIZONTAL = "Horizontal"
    VERTICAL = "Vertical"

    @classmethod
    def from_name(cls, name: str) -> "Orientation":
        for o in cls:
            if o.value == name:
                return o
        raise ValueError(f"unknown orientation {name!r}")


class End(Enum):
    """Axial end of the tube: Negative is the low row/col cap."""

    NEGATIVE = "Negative"
    POSITIVE = "Positive"

    @classmethod
    def from_name(cls, name: str) -> "End":
        for e in cls:
            if e.value == name:
                return e
        raise ValueError(f"unknown end {name!r}")


@dataclass(frozen=True)
class Action:
    grasp: Direction
    move: Direction

    def to_jsonable(self) -> dict[str, str]:
        return {"grasp": self.grasp.wire_name, "move": self.move.wire_name}

    @classmethod
    def from_jsonable(cls, data) -> "Action":
        if not isinstance(data, dict):
            raise ValueError("action must be an object with grasp and move")
        return cls(
            grasp=Direction.from_wire(data["grasp"]),
            move=Direction.from_wire(data["move"]),
        )


# Fixed enumeration order: grasp Up,Down,Left,Right x move Up,Down,Left,Right.
ACTIONS: tuple[Action, ...] = tuple(
    Action(g, m) for g in DIRECTIONS for m in DIRECTIONS
)
ACTION_INDEX = {a: i for i, a in enumerate(ACTIONS)}


@dataclass(frozen=True)
class ToolPose:
    """Straight tool: anchor is its minimum-row/minimum-col cell."""

    anchor: Position
    orientation: Orientation
    length: int

    def cells(self) -> tuple[Position, ...]:
        r, c = self.anchor.row, self.anchor.col
        if self.orientation is Orientation.HORIZONTAL:
            return tuple(Position(r, c + k) for k in range(self.length))
        return tuple(Position(r + k, c) for k in range(self.length))

    def to_jsonable(self) -> dict:
        return {
            "anchor": {"row": self.anchor.row, "col": self.anchor.col},
            "orientation": self.orientation.value,
            "length": self.length,
        }

    @classmethod
    def from_jsonable(cls, data: dict) -> "ToolPose":
        return cls(
            anchor=Position(data["anchor"]["row"], data["anchor"]["col"]),
            orientation=Orientation.from_name(data["orientation"]),
            length=int(data["length"]),
        )


@dataclass(frozen=True)
class TubeSpec:
    """Tube geometry: a walled rectangle with trap and exit end caps.

    The interior is ``lateral_thickness`` parallel lanes of
    ``interior_length`` cells; ``interior_anchor`` is the minimum-row/
    minimum-col interior cell. Wall cells form the closed rectangle around
    the interior except at the two cap cells of the hole lane: the trap
    holds the ``trap_end`` cap and the exit the opposite one.
    """

    axis: Orientation
    interior_anchor: Position
    interior_length: int
    lateral_thickness: int
    trap_end: End
    hole_lane: int

    def _hole_lane_base(self) -> Position:
        r, c = self.interior_anchor.row, self.interior_anchor.col
        if self.axis is Orientation.HORIZONTAL:
            return Position(r + self.hole_lane, c)
        return Position(r, c + self.hole_lane)

    @property
    def trap_cell(self) -> Position:
        base = self._hole_lane_base()
        if self.axis is Orientation.HORIZONTAL:
            neg = Position(base.row, base.col - 1)
            pos = Position(base.row, base.col + self.interior_length)
        else:
            neg = Position(base.row - 1, base.col)
            pos = Position(base.row + self.interior_length, base.col)
        return neg if self.trap_end is End.NEGATIVE else pos

    @property
    def exit_cell(self) -> Position:
        base = self._hole_lane_base()
        if self.axis is Orientation.HORIZONTAL:
            neg = Position(base.row, base.col - 1)
            pos = Position(base.row, base.col + self.interior_length)
        else:
            neg = Position(base.row - 1, base.col)
            pos = Position(base.row + self.interior_length, base.col)
        return pos if self.trap_end is End.NEGATIVE else neg

    def interior_cells(self) -> tuple[Position, ...]:
        r, c = self.interior_anchor.row, self.interior_anchor.col
        cells = []
        for lane in range(self.lateral_thickness):
            for k in range(self.interior_length):
                if self.axis is Orientation.HORIZONTAL:
                    cells.append(Position(r + lane, c + k))
                else:
                    cells.append(Position(r + k, c + lane))
        return tuple(cells)

    def rect_bounds(self) -> tuple[int, int, int, int]:
        """(row0, col0, row1, col1) of the wall rectangle, inclusive."""
        r, c = self.interior_anchor.row, self.interior_anchor.col
        if self.axis is Orientation.HORIZONTAL:
            return (r - 1, c - 1, r + self.lateral_thickness, c + self.interior_length)
        return (r - 1, c - 1, r + self.interior_length, c + self.lateral_thickness)

    def wall_cells(self) -> tuple[Position, ...]:
        r0, c0, r1, c1 = self.rect_bounds()
        interior = set(self.interior_cells())
        holes = {self.trap_cell, self.exit_cell}
        walls = []
        for r in range(r0, r1 + 1):
            for c in range(c0, c1 + 1):
                p = Position(r, c)
                if r in (r0, r1) or c in (c0, c1):
                    if p not in holes:
                        walls.append(p)
                elif p not in interior and p not in holes:
                    walls.append(p)
        return tuple(walls)

    def region_cells(self) -> frozenset[Position]:
        """Every cell of the wall rectangle, caps and interior included."""
        r0, c0, r1, c1 = self.rect_bounds()
        return frozenset(
            Position(r, c) for r in range(r0, r1 + 1) for c in range(c0, c1 + 1)
        )

    def to_jsonable(self) -> dict:
        return {
            "axis": self.axis.value,
            "interior_anchor": {
                "row": self.interior_anchor.row,
                "col": self.interior_anchor.col,
            },
            "interior_length": self.interior_length,
            "lateral_thickness": self.lateral_thickness,
            "trap_end": self.trap_end.value,
            "hole_lane": self.hole_lane,
        }

    @classmethod
    def from_jsonable(cls, data: dict) -> "TubeSpec":
        return cls(
            axis=Orientation.from_name(data["axis"]),
            interior_anchor=Position(
                data["interior_anchor"]["row"], data["interior_anchor"]["col"]
            ),
            interior_length=int(data["interior_length"]),
            lateral_thickness=int(data["lateral_thickness"]),
            trap_end=End.from_name(data["trap_end"]),
            hole_lane=int(data["hole_lane"]),
        )


@dataclass(frozen=True)
class EnvState:
    """Full simulation state. ``food is None`` means the food is trapped.

    ``end_on_trap`` ends the episode as soon as the food is trapped
    instead of running out the horizon; off by default.
    """

    agent: Position
    tool: ToolPose
    food: Position | None
    tube: TubeSpec
    step_count: int = 0
    done: bool = False
    last_reward: int = 0
    grid_size: int = 12
    horizon: int = 50
    end_on_trap: bool = False

    def to_jsonable(self) -> dict:
        food = (
            "trapped"
            if self.food is None
            else {"row": self.food.row, "col": self.food.col}
        )
        return {
            "agent": {"row": self.agent.row, "col": self.agent.col},
            "tool": self.tool.to_jsonable(),
            "food": food,
            "tube": self.tube.to_jsonable(),
            "step_count": self.step_count,
            "done": self.done,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_jsonable(), sort_keys=True, separators=(",", ":"))


@dataclass(frozen=True)
class StepResult:
    state: EnvState
    reward: int
    done: bool


TRAPPED = -1  # food code in the integer kernel


class StaticGeometry:
    """Precomputed lookup tables for one (tube, grid, tool shape) triple.

    Cells are flat indices ``row * n + col``. The kernel below works
    entirely on these indices so stepping never rebuilds occupancy.
    """

    __slots__ = (
        "n",
        "ncells",
        "wall",
        "agent_blocked",
        "trap_idx",
        "exit_idx",
        "tool_len",
        "tool_horizontal",
        "tool_span",
        "anchor_ok",
        "nbr",
        "deltas",
        "_mask_cache",
    )

    def __init__(self, tube: TubeSpec, grid_size: int, tool_len: int, horizontal: bool):
        n = grid_size
        self.n = n
        self.ncells = n * n
        wall = bytearray(self.ncells)
        for p in tube.wall_cells():
            wall[p.row * n + p.col] = 1
        self.wall = bytes(wall)
        self.trap_idx = tube.trap_cell.row * n + tube.trap_cell.col
        self.exit_idx = tube.exit_cell.row * n + tube.exit_cell.col
        agent_blocked = bytearray(self.wall)
        agent_blocked[self.trap_idx] = 1
        agent_blocked[self.exit_idx] = 1
        self.agent_blocked = bytes(agent_blocked)
        self.tool_len = tool_len
        self.tool_horizontal = horizontal
        # Offset between consecutive tool cells and total index span.
        step = 1 if horizontal else n
        self.tool_span = step * (tool_len - 1)
        # Per-direction neighbor tables; -1 marks out of bounds.
        deltas = {
            Direction.UP: (-1, 0),
            Direction.DOWN: (1, 0),
            Direction.LEFT: (0, -1),
            Direction.RIGHT: (0, 1),
        }
        self.nbr = []
        self.deltas = []
        for d in DIRECTIONS:
            dr, dc = deltas[d]
            table = [-1] * self.ncells
            for r in range(n):
                for c in range(n):
                    rr, cc = r + dr, c + dc
                    if 0 <= rr < n and 0 <= cc < n:
                        table[r * n + c] = rr * n + cc
            self.nbr.append(table)
            self.deltas.append(dr * n + dc)
        # Anchor validity: all tool cells in bounds and off the walls.
        anchor_ok = bytearray(self.ncells)
        for r in range(n):
            for c in range(n):
                if horizontal:
                    if c + tool_len > n:
                        continue
                    cells = [r * n + c + k for k in range(tool_len)]
                else:
                    if r + tool_len > n:
                        continue
                    cells = [(r + k) * n + c for k in range(tool_len)]
                if not any(self.wall[i] for i in cells):
                    anchor_ok[r * n + c] = 1
        self.anchor_ok = bytes(anchor_ok)
        self._mask_cache: dict[int, tuple[bytes, bytes]] = {}

    def is_tool(self, anchor: int, cell: int) -> bool:
        diff = cell - anchor
        if self.tool_horizontal:
            return 0 <= diff < self.tool_len and cell // self.n == anchor // self.n
        return 0 <= diff <= self.tool_span and diff % self.n == 0

    def tool_cells(self, anchor: int) -> list[int]:
        step = 1 if self.tool_horizontal else self.n
        return [anchor + k * step for k in range(self.tool_len)]

    def masks(self, anchor: int) -> tuple[bytes, bytes]:
        """(tool-cell mask, agent-blocked-including-tool mask) for an anchor.

        Cached per anchor; search loops index these instead of calling
        :meth:`is_tool` per cell.
        """
        cached = self._mask_cache.get(anchor)
        if cached is None:
            tool_mask = bytearray(self.ncells)
            for cell in self.tool_cells(anchor):
                tool_mask[cell] = 1
            blocked = bytearray(self.agent_blocked)
            for cell in self.tool_cells(anchor):
                blocked[cell] = 1
            cached = (bytes(tool_mask), bytes(blocked))
            self._mask_cache[anchor] = cached
        return cached


@lru_cache(maxsize=256)
def _geometry(tube: TubeSpec, grid_size: int, tool_len: int, horizontal: bool) -> StaticGeometry:
    return StaticGeometry(tube, grid_size, tool_len, horizontal)


def geometry_for(state: EnvState) -> StaticGeometry:
    return _geometry(
        state.tube,
        state.grid_size,
        state.tool.length,
        state.tool.orientation is Orientation.HORIZONTAL,
    )


def plain_move(
    geom: StaticGeometry, agent: int, anchor: int, food: int, move_idx: int
) -> tuple[int, int, int, bool]:
    """Agent-only move on flat cell indices; unchanged when blocked."""
    dest = geom.nbr[move_idx][agent]
    if dest < 0 or geom.agent_blocked[dest] or geom.is_tool(anchor, dest):
        return agent, anchor, food, False
    return dest, anchor, food, food >= 0 and dest == food


def grasped_move(
    geom: StaticGeometry, agent: int, anchor: int, food: int, move_idx: int
) -> tuple[int, int, int, bool]:
    """Rigid agent-plus-tool translation; unchanged when blocked.

    Cells vacated by the moving bodies count as free, so the agent may
    step into a cell the tool just left and vice versa.
    """
    # The leading tool cell must stay on the board; raw index arithmetic
    # would otherwise wrap horizontally between rows.
    lead = anchor if move_idx in (0, 2) else anchor + geom.tool_span
    if geom.nbr[move_idx][lead] < 0:
        return agent, anchor, food, False
    new_anchor = anchor + geom.deltas[move_idx]
    if not geom.anchor_ok[new_anchor]:
        return agent, anchor, food, False
    dest = geom.nbr[move_idx][agent]
    if dest < 0 or geom.agent_blocked[dest]:
        return agent, anchor, food, False

    new_food = food
    if food >= 0 and geom.is_tool(new_anchor, food):
        # A tool cell lands on the food: push it one cell onward.
        fd = geom.nbr[move_idx][food]
        if fd < 0 or geom.wall[fd] or geom.is_tool(new_anchor, fd):
            return agent, anchor, food, False
        if fd == geom.trap_idx:
            new_food = TRAPPED
        elif fd == geom.exit_idx:
            beyond = geom.nbr[move_idx][fd]
            if (
                beyond < 0
                or geom.agent_blocked[beyond]
                or geom.is_tool(new_anchor, beyond)
                or beyond == dest
            ):
                return agent, anchor, food, False
            new_food = beyond
        else:
            new_food = fd

    success = new_food >= 0 and dest == new_food
    return dest, new_anchor, new_food, success


def step_core(
    geom: StaticGeometry,
    agent: int,
    anchor: int,
    food: int,
    grasp_idx: int,
    move_idx: int,
) -> tuple[int, int, int, bool]:
    """One deterministic transition on flat cell indices.

    ``food`` is a cell index or ``TRAPPED``. Returns the new
    (agent, anchor, food, success) with positions unchanged on a blocked
    move. Success means the agent ended on the food's cell.
    """
    grasp_cell = geom.nbr[grasp_idx][agent]
    if grasp_cell >= 0 and geom.is_tool(anchor, grasp_cell):
        return grasped_move(geom, agent, anchor, food, move_idx)
    return plain_move(geom, agent, anchor, food, move_idx)


def _state_codes(state: EnvState) -> tuple[int, int, int]:
    n = state.grid_size
    agent = state.agent.row * n + state.agent.col
    anchor = state.tool.anchor.row * n + state.tool.anchor.col
    food = TRAPPED if state.food is None else state.food.row * n + state.food.col
    return agent, anchor, food


def check_layout(config: "TaskConfig") -> list[str]:
    """Structural layout violations of a task configuration.

    Purely geometric checks; reachability certification lives with the
    task validator.
    """
    violations: list[str] = []
    n = config.grid_size
    tube = config.tube

    def in_bounds(p: Position) -> bool:
        return 0 <= p.row < n and 0 <= p.col < n

    if tube.lateral_thickness < 1:
        violations.append("tube lateral_thickness must be >= 1")
    if tube.interior_length < 1:
        violations.append("tube interior_length must be >= 1")
    if not 0 <= tube.hole_lane < max(tube.lateral_thickness, 1):
        violations.append("tube hole_lane outside lane range")
    if violations:
        return violations

    r0, c0, r1, c1 = tube.rect_bounds()
    if r0 < 0 or c0 < 0 or r1 >= n or c1 >= n:
        violations.append("tube (walls and caps) extends out of bounds")
        return violations

    walls = set(tube.wall_cells())
    trap, exit_ = tube.trap_cell, tube.exit_cell
    tool_cells = set(config.tool.cells())

    if config.tool.length < 2:
        violations.append("tool length must be >= 2")
    for cell in config.tool.cells():
        if not in_bounds(cell):
            violations.append(f"tool cell {cell} out of bounds")
    if tool_cells & walls:
        violations.append("tool overlaps a tube wall")

    agent = config.agent_start
    if not in_bounds(agent):
        violations.append("agent start out of bounds")
    elif agent in walls or agent in (trap, exit_):
        violations.append("agent start on a blocking tube cell")
    if agent in tool_cells:
        violations.append("agent start overlaps the tool")

    food = config.food_start
    if not in_bounds(food):
        violations.append("food start out of bounds")
    elif food in walls or food in (trap, exit_):
        violations.append("food start on a blocking tube cell")
    if food in tool_cells:
        violations.append("food start overlaps the tool")
    if food == agent:
        violations.append("food start equals agent start")

    if config.horizon < 1:
        violations.append("horizon must be >= 1")
    return violations


def reset(config: "TaskConfig", end_on_trap: bool = False) -> EnvState:
    """Initial state for a task; raises :class:`ConfigError` on bad layout."""
    violations = check_layout(config)
    if violations:
        raise ConfigError(violations)
    return EnvState(
        agent=config.agent_start,
        tool=config.tool,
        food=config.food_start,
        tube=config.tube,
        step_count=0,
        done=False,
        last_reward=0,
        grid_size=config.grid_size,
        horizon=config.horizon,
        end_on_trap=end_on_trap,
    )


def step(state: EnvState, action: Action) -> StepResult:
    """Deterministic transition; raises :class:`EpisodeFinished` when done."""
    if state.done:
        raise EpisodeFinished("episode already finished")
    geom = geometry_for(state)
    agent, anchor, food = _state_codes(state)
    gi = DIRECTIONS.index(action.grasp)
    mi = DIRECTIONS.index(action.move)
    new_agent, new_anchor, new_food, success = step_core(geom, agent, anchor, food, gi, mi)
    n = state.grid_size
    step_count = state.step_count + 1
    reward = 1 if success else 0
    done = success or step_count >= state.horizon
    if state.end_on_trap and new_food == TRAPPED:
        done = True
    new_state = replace(
        state,
        agent=Position(new_agent // n, new_agent % n),
        tool=replace(state.tool, anchor=Position(new_anchor // n, new_anchor % n)),
        food=None if new_food == TRAPPED else Position(new_food // n, new_food % n),
        step_count=step_count,
        done=done,
        last_reward=reward,
    )
    return StepResult(state=new_state, reward=reward, done=done)


def is_success(state: EnvState) -> bool:
    return state.food is not None and state.agent == state.food


_CAT_CODE = {cat: i for i, cat in enumerate(CATEGORIES)}


def category_codes(state: EnvState) -> np.ndarray:
    """(n, n) uint8 grid of category codes with overlap priority applied."""
    n = state.grid_size
    codes = np.full((n, n), _CAT_CODE[ObjectCategory.GROUND], dtype=np.uint8)
    for p in state.tube.wall_cells():
        codes[p.row, p.col] = _CAT_CODE[ObjectCategory.TUBE_WALL]
    trap, exit_ = state.tube.trap_cell, state.tube.exit_cell
    codes[trap.row, trap.col] = _CAT_CODE[ObjectCategory.TRAP]
    codes[exit_.row, exit_.col] = _CAT_CODE[ObjectCategory.EXIT]
    if state.food is not None:
        codes[state.food.row, state.food.col] = _CAT_CODE[ObjectCategory.FOOD]
    for p in state.tool.cells():
        codes[p.row, p.col] = _CAT_CODE[ObjectCategory.TOOL]
    codes[state.agent.row, state.agent.col] = _CAT_CODE[ObjectCategory.AGENT]
    return codes


def occupancy(state: EnvState) -> list[list[ObjectCategory]]:
    """Category of every cell after overlap resolution."""
    codes = category_codes(state)
    return [[CATEGORIES[codes[r, c]] for c in range(state.grid_size)] for r in range(state.grid_size)]


class TrapTubeEnv:
    """Stateful wrapper bundling dynamics with observation rendering."""

    def __init__(self, config: "TaskConfig"):
        self.config = config
        self.state: EnvState | None = None

    def reset(self) -> np.ndarray:
        self.state = reset(self.config)
        return self.observe()

    def step(self, action: Action) -> tuple[np.ndarray, int, bool]:
        if self.state is None:
            raise RuntimeError("reset() before step()")
        result = step(self.state, action)
        self.state = result.state
        return self.observe(), result.reward, result.done

    def observe(self) -> np.ndarray:
        if self.state is None:
            raise RuntimeError("reset() before observe()")
        return render(self.state, self.config.palette, self.config.symbols)
