"""Exact breadth-first search over the deterministic dynamics.

States canonicalize to :class:`SearchKey` (agent cell, tool anchor and
orientation, food code); two states with equal keys have identical
futures because the transition reads only object categories, the tool's
shape never changes, and the step counter does not enter the dynamics.
The visited set stores keys packed into single integers,
``(agent * n^2 + anchor) * (n^2 + 1) + food + 1`` with food -1 when
trapped, so the reachable space on a 12x12 board tops out in the low
millions of small ints. The search expands the 16 actions in their fixed
enumeration order (grasp Up, Down, Left, Right crossed with move Up,
Down, Left, Right) using the same transition kernels the environment
uses, so the returned plan is deterministic and minimum-length.

A straight tool can only expel the food by entering the hole lane from
the trap side and pushing it out through the exit, which gives a cheap
necessary condition (the staging strip behind the food must exist and be
reachable in the tool's own translation graph). ``solve`` uses it to
reject hopeless layouts without exhausting the state space; it never
rejects a solvable one.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import TYPE_CHECKING

from .env import (
    ACTIONS,
    Action,
    EnvState,
    Orientation,
    Position,
    TRAPPED,
    geometry_for,
    grasped_move,
    is_success,
    reset,
)

if TYPE_CHECKING:
    from .tasks import TaskConfig


class CapExceeded(RuntimeError):
    """Reachable-state enumeration hit its cap; ``count`` holds the partial total."""

    def __init__(self, count: int):
        super().__init__(f"reachable states exceed cap (counted {count})")
        self.count = count


@dataclass(frozen=True)
class SearchKey:
    """Canonical dynamics-relevant identity of a state.

    ``food`` is its cell, or "trapped"/"collected". Equal keys guarantee
    identical transitions for all 16 actions.
    """

    agent: Position
    tool_anchor: Position
    tool_orientation: Orientation
    food: Position | str


def search_key(state: EnvState) -> SearchKey:
    if state.food is None:
        food: Position | str = "trapped"
    elif state.agent == state.food:
        food = "collected"
    else:
        food = state.food
    return SearchKey(
        agent=state.agent,
        tool_anchor=state.tool.anchor,
        tool_orientation=state.tool.orientation,
        food=food,
    )


@dataclass(frozen=True)
class Plan:
    """Action sequence that replays from reset to success."""

    actions: tuple[Action, ...]

    @property
    def length(self) -> int:
        return len(self.actions)

    def to_jsonable(self) -> dict:
        return {
            "actions": [a.to_jsonable() for a in self.actions],
            "length": self.length,
        }


def _push_direction(config: "TaskConfig") -> tuple[int, int]:
    """Unit (drow, dcol) pointing from the trap toward the exit."""
    from .env import End

    tube = config.tube
    sign = 1 if tube.trap_end is End.NEGATIVE else -1
    if tube.axis is Orientation.HORIZONTAL:
        return (0, sign)
    return (sign, 0)


def _provably_unsolvable(config: "TaskConfig", geom) -> bool:
    """Cheap necessary-condition screen; True only on certain dead layouts.

    The reasoning below assumes the generator's tool shape (length =
    interior length + 1, which can neither shift laterally inside the tube
    nor enter the lane crosswise); other shapes get no claim.
    """
    tube = config.tube
    n = config.grid_size
    if config.tool.length != tube.interior_length + 1:
        return False
    base = tube._hole_lane_base()
    if tube.axis is Orientation.HORIZONTAL:
        lane = {Position(base.row, base.col + k) for k in range(tube.interior_length)}
    else:
        lane = {Position(base.row + k, base.col) for k in range(tube.interior_length)}
    if config.food_start not in lane:
        return False  # food outside the tube: no claim, search decides

    # Only a tool aligned with the tube axis can ever contact the food.
    if config.tool.orientation is not tube.axis:
        return True

    dr, dc = _push_direction(config)
    length = config.tool.length
    food = config.food_start
    walls = set(tube.wall_cells())
    # The tool must stage directly behind the food, spanning back toward
    # (and over) the trap; every staging cell must exist off the walls.
    strip = [
        Position(food.row - dr * k, food.col - dc * k) for k in range(1, length + 1)
    ]
    for cell in strip:
        if not (0 <= cell.row < n and 0 <= cell.col < n) or cell in walls:
            return True
    # The food must have somewhere to land beyond the exit.
    exit_cell = tube.exit_cell
    beyond = Position(exit_cell.row + dr, exit_cell.col + dc)
    if not (0 <= beyond.row < n and 0 <= beyond.col < n):
        return True

    # The staging pose must be reachable in the tool's translation graph.
    # Anchors covering the food cell are forbidden: contacting the food on
    # the way can only shove it trapward, which shrinks the staging room
    # and never opens a new route into the trap-side pocket, so a
    # food-avoiding path is necessary for any solution.
    start = config.tool.anchor.row * n + config.tool.anchor.col
    target_cell = min(strip)
    target = target_cell.row * n + target_cell.col
    if not geom.anchor_ok[target]:
        return True
    food_idx = food.row * n + food.col
    seen = {start}
    queue = deque([start])
    moves = (-n, n, -1, 1)
    while queue:
        anchor = queue.popleft()
        if anchor == target:
            return False
        r, c = divmod(anchor, n)
        for mi, delta in enumerate(moves):
            if mi == 2 and c == 0:
                continue
            if mi == 3 and c == n - 1:
                continue
            nxt = anchor + delta
            if nxt < 0 or nxt >= n * n or nxt in seen:
                continue
            if geom.anchor_ok[nxt] and not geom.is_tool(nxt, food_idx):
                seen.add(nxt)
                queue.append(nxt)
    return True


def solve(config: "TaskConfig") -> Plan | None:
    """Minimum-length plan to success within the horizon, or None.

    Unsolvable is a value, not an error; invalid layouts raise
    ``ConfigError`` via reset.
    """
    state0 = reset(config)
    if is_success(state0):
        return Plan(actions=())
    geom = geometry_for(state0)
    if _provably_unsolvable(config, geom):
        return None
    n = config.grid_size
    ncells = n * n
    stride = ncells + 1
    agent0 = state0.agent.row * n + state0.agent.col
    anchor0 = state0.tool.anchor.row * n + state0.tool.anchor.col
    food0 = state0.food.row * n + state0.food.col

    nbr = geom.nbr
    masks = geom.masks
    gmove = grasped_move

    start = (agent0 * ncells + anchor0) * stride + food0 + 1
    parents: dict[int, tuple[int, int] | None] = {start: None}
    frontier = deque([(start, agent0, anchor0, food0)])
    goal: int | None = None

    # Every distinct successor of a state is produced by exactly one of
    # four plain moves or four grasped moves (a straight tool borders the
    # agent in at most one direction), so the 16 action slots collapse to
    # at most eight candidates. Each successor records the lowest action
    # index that produces it, preserving the fixed tie-break order.
    depth = 0
    while frontier and goal is None and depth < config.horizon:
        depth += 1
        for _ in range(len(frontier)):
            key, agent, anchor, food = frontier.popleft()
            tool_mask, blocked = masks(anchor)
            adj = -1
            for gi in range(4):
                cell = nbr[gi][agent]
                if cell >= 0 and tool_mask[cell]:
                    adj = gi
                    break
            anchor_key = anchor * stride
            candidates = []
            plain_base = 4 if adj == 0 else 0
            for mi in range(4):
                dest = nbr[mi][agent]
                if dest >= 0 and not blocked[dest]:
                    candidates.append(
                        (
                            plain_base + mi,
                            (dest * ncells) * stride + anchor_key + food + 1,
                            dest,
                            anchor,
                            food,
                            dest == food,
                        )
                    )
            if adj >= 0:
                grasp_base = adj * 4
                for mi in range(4):
                    na, nt, nf, success = gmove(geom, agent, anchor, food, mi)
                    if na == agent and nt == anchor and nf == food:
                        continue  # blocked: a self-loop never shortens a plan
                    candidates.append(
                        (
                            grasp_base + mi,
                            (na * ncells + nt) * stride + nf + 1,
                            na,
                            nt,
                            nf,
                            success,
                        )
                    )
                if adj == 0:
                    candidates.sort(key=lambda item: item[0])
            for ai, nkey, na, nt, nf, success in candidates:
                if nkey in parents:
                    continue
                parents[nkey] = (key, ai)
                if success:
                    goal = nkey
                    break
                if nf != TRAPPED:  # trapped food can never be recovered
                    frontier.append((nkey, na, nt, nf))
            if goal is not None:
                break
        if goal is not None:
            break

    if goal is None:
        return None
    actions: list[Action] = []
    key = goal
    while parents[key] is not None:
        key, ai = parents[key]
        actions.append(ACTIONS[ai])
    actions.reverse()
    return Plan(actions=tuple(actions))


def reachable(config: "TaskConfig", target: Position | None = None) -> bool:
    """Agent-only reachability with the tool treated as an obstacle.

    With no target: can the agent reach a cell adjacent to any tool cell
    (a grasping position)? With a target: can the agent reach that cell?
    The food cell is not traversable (stepping on it ends the episode).
    """
    n = config.grid_size
    walls = set(config.tube.wall_cells())
    blocked = walls | {config.tube.trap_cell, config.tube.exit_cell}
    tool_cells = set(config.tool.cells())
    food = config.food_start

    def adjacent_to_tool(p: Position) -> bool:
        return any(
            Position(p.row + dr, p.col + dc) in tool_cells
            for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1))
        )

    start = config.agent_start
    seen = {start}
    queue = deque([start])
    while queue:
        p = queue.popleft()
        if target is None and adjacent_to_tool(p):
            return True
        if target is not None and p == target:
            return True
        for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
            q = Position(p.row + dr, p.col + dc)
            if not (0 <= q.row < n and 0 <= q.col < n):
                continue
            if q in seen or q in blocked or q in tool_cells or q == food:
                continue
            seen.add(q)
            queue.append(q)
    return False


def enumerate_reachable(config: "TaskConfig", cap: int) -> int:
    """Exact count of distinct search keys reachable from reset.

    Counts graph reachability (the horizon does not truncate it); success
    states are terminal and counted but not expanded. Raises
    :class:`CapExceeded` once the count would pass ``cap``.
    """
    if cap < 1:
        raise ValueError("cap must be >= 1")
    state0 = reset(config)
    geom = geometry_for(state0)
    n = config.grid_size
    ncells = n * n
    stride = ncells + 1
    agent0 = state0.agent.row * n + state0.agent.col
    anchor0 = state0.tool.anchor.row * n + state0.tool.anchor.col
    food0 = TRAPPED if state0.food is None else state0.food.row * n + state0.food.col

    nbr = geom.nbr
    masks = geom.masks
    seen = {(agent0 * ncells + anchor0) * stride + food0 + 1}
    queue = deque([(agent0, anchor0, food0)])
    if is_success(state0):
        return 1
    while queue:
        agent, anchor, food = queue.popleft()
        tool_mask, blocked = masks(anchor)
        grasped = None
        for ai in range(16):
            gi, mi = ai >> 2, ai & 3
            cell = nbr[gi][agent]
            if cell >= 0 and tool_mask[cell]:
                if grasped is None:
                    grasped = [grasped_move(geom, agent, anchor, food, m) for m in range(4)]
                na, nt, nf, success = grasped[mi]
            else:
                dest = nbr[mi][agent]
                if dest < 0 or blocked[dest]:
                    continue
                na, nt, nf, success = dest, anchor, food, dest == food
            nkey = (na * ncells + nt) * stride + nf + 1
            if nkey in seen:
                continue
            if len(seen) >= cap:
                raise CapExceeded(cap)
            seen.add(nkey)
            if not success:
                queue.append((na, nt, nf))
    return len(seen)
