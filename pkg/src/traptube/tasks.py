"""Task configurations, the three transfer kernels, and the generator.

A task is one concrete trap-tube layout plus appearance: tube geometry,
agent/food/tool starts, a palette of on-manifold category colors, and a
symbol map. The three samplers alter independent slices of it:

* perceptual -- resamples geometry (tube shape/placement, food, tool,
  agent);
* structural -- resamples category colors on the sphere, keeping the
  agent and food colors fixed;
* symbolic  -- swaps the tool's appearance with a partner category.

``sample_task`` composes any subset of the three over the canonical base
task, rejecting draws until the layout validates and the planner
certifies a solution within the horizon, so every emitted task is
solvable by construction. Each kernel consumes its own named stream of
the task seed, so draws for one kernel never perturb another and sample
files are reproducible from the (seed, transfer set) pair alone.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

from .env import (
    End,
    Orientation,
    Position,
    ToolPose,
    TubeSpec,
    check_layout,
)
from .grid import (
    CATEGORIES,
    SWAPPABLE,
    ObjectCategory,
    Palette,
    SymbolMap,
    color_to_sphere_point,
    geodesic_distance,
    palette_from_jsonable,
    palette_to_jsonable,
    sphere_point_to_color,
)
from .rng import SplitMix64, stream

SCHEMA_VERSION = 1
GRID_SIZE = 12
HORIZON = 50

INTERIOR_LENGTHS = (3, 4, 5)
THICKNESSES = (1, 2)
MIN_COLOR_SEPARATION = 0.35  # radians on the appearance sphere
MAX_REJECTIONS = 10_000

# Categories whose appearance the structural kernel resamples, in draw order.
STRUCTURAL_CATEGORIES = (
    ObjectCategory.GROUND,
    ObjectCategory.TOOL,
    ObjectCategory.TUBE_WALL,
    ObjectCategory.TRAP,
    ObjectCategory.EXIT,
)

# Base appearance: seven points on the sphere, agent and food antipodal so
# structural resampling stays symmetric around the origin.
_SQ3 = 0.5773502691896258  # 1/sqrt(3)
BASE_SPHERE_POINTS = {
    ObjectCategory.GROUND: (_SQ3, _SQ3, _SQ3),
    ObjectCategory.AGENT: (0.0, 0.0, 1.0),
    ObjectCategory.FOOD: (0.0, 0.0, -1.0),
    ObjectCategory.TOOL: (1.0, 0.0, 0.0),
    ObjectCategory.TUBE_WALL: (-1.0, 0.0, 0.0),
    ObjectCategory.TRAP: (0.0, -1.0, 0.0),
    ObjectCategory.EXIT: (0.0, 1.0, 0.0),
}
BASE_PALETTE: Palette = {
    cat: sphere_point_to_color(p) for cat, p in BASE_SPHERE_POINTS.items()
}


class GenerationExhausted(RuntimeError):
    """Rejection sampling failed to produce an acceptable draw."""


@dataclass(frozen=True)
class TransferSet:
    """Subset of the three kernels; the empty set denotes the base task."""

    perceptual: bool = False
    structural: bool = False
    symbolic: bool = False

    @property
    def name(self) -> str:
        parts = []
        if self.perceptual:
            parts.append("P")
        if self.structural:
            parts.append("St")
        if self.symbolic:
            parts.append("Sy")
        return "+".join(parts) if parts else "base"

    @classmethod
    def parse(cls, text: str) -> "TransferSet":
        text = text.strip()
        if text in ("", "base"):
            return cls()
        flags = {"P": False, "St": False, "Sy": False}
        for token in text.replace("+", ",").split(","):
            token = token.strip()
            if token not in flags:
                raise ValueError(f"unknown transfer kernel {token!r}")
            flags[token] = True
        return cls(flags["P"], flags["St"], flags["Sy"])

    def __str__(self) -> str:
        return self.name


BASE_SET = TransferSet()
ALL_TRANSFER_SETS: tuple[TransferSet, ...] = (
    TransferSet(),
    TransferSet(perceptual=True),
    TransferSet(structural=True),
    TransferSet(symbolic=True),
    TransferSet(perceptual=True, structural=True),
    TransferSet(perceptual=True, symbolic=True),
    TransferSet(structural=True, symbolic=True),
    TransferSet(perceptual=True, structural=True, symbolic=True),
)


@dataclass(frozen=True)
class SeedProvenance:
    seed: int
    transfer_set: TransferSet

    def to_jsonable(self) -> dict:
        return {"seed": self.seed, "transfer_set": self.transfer_set.name}

    @classmethod
    def from_jsonable(cls, data) -> "SeedProvenance | None":
        if data is None:
            return None
        return cls(seed=int(data["seed"]), transfer_set=TransferSet.parse(data["transfer_set"]))


@dataclass(frozen=True)
class TaskConfig:
    """Complete, serializable description of one sampled task."""

    tube: TubeSpec
    agent_start: Position
    food_start: Position
    tool: ToolPose
    palette: Palette
    symbols: SymbolMap = SymbolMap.identity()
    horizon: int = HORIZON
    grid_size: int = GRID_SIZE
    seed_provenance: SeedProvenance | None = None

    def to_jsonable(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "grid_size": self.grid_size,
            "horizon": self.horizon,
            "tube": self.tube.to_jsonable(),
            "agent_start": {"row": self.agent_start.row, "col": self.agent_start.col},
            "food_start": {"row": self.food_start.row, "col": self.food_start.col},
            "tool": self.tool.to_jsonable(),
            "palette": palette_to_jsonable(self.palette),
            "symbols": {"partner": self.symbols.partner.value},
            "seed_provenance": (
                None if self.seed_provenance is None else self.seed_provenance.to_jsonable()
            ),
        }

    def to_json(self) -> str:
        """Canonical key-sorted JSON; byte-stable for identical configs."""
        return json.dumps(self.to_jsonable(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_jsonable(cls, data: dict) -> "TaskConfig":
        if data.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {data.get('schema_version')!r}")
        return cls(
            tube=TubeSpec.from_jsonable(data["tube"]),
            agent_start=Position(data["agent_start"]["row"], data["agent_start"]["col"]),
            food_start=Position(data["food_start"]["row"], data["food_start"]["col"]),
            tool=ToolPose.from_jsonable(data["tool"]),
            palette=palette_from_jsonable(data["palette"]),
            symbols=SymbolMap(ObjectCategory.from_name(data["symbols"]["partner"])),
            horizon=int(data["horizon"]),
            grid_size=int(data["grid_size"]),
            seed_provenance=SeedProvenance.from_jsonable(data.get("seed_provenance")),
        )

    @classmethod
    def from_json(cls, text: str) -> "TaskConfig":
        return cls.from_jsonable(json.loads(text))


_BASE_TUBE = TubeSpec(
    axis=Orientation.HORIZONTAL,
    interior_anchor=Position(6, 5),
    interior_length=3,
    lateral_thickness=1,
    trap_end=End.NEGATIVE,
    hole_lane=0,
)
_BASE_CONFIG = TaskConfig(
    tube=_BASE_TUBE,
    agent_start=Position(10, 1),
    food_start=Position(6, 5),
    tool=ToolPose(anchor=Position(2, 1), orientation=Orientation.HORIZONTAL, length=4),
    palette=BASE_PALETTE,
    symbols=SymbolMap.identity(),
)


def base_config() -> TaskConfig:
    """The canonical base task.

    Horizontal single-lane tube on row 6: trap cap (6,4), interior columns
    5-7, exit cap (6,8), walls on rows 5 and 7 spanning columns 4-8. Food
    starts on the interior cell adjacent to the trap; a length-4
    horizontal tool rests at (2,1); the agent starts at (10,1). The trap
    side leaves a four-cell pocket (columns 0-3 of row 6) so the tool can
    be worked in behind the food and pushed through, its rear passing over
    the trap while the agent pushes from just outside the cap.
    """
    return _BASE_CONFIG


def _geometry_ranges(
    axis: Orientation, interior_length: int, thickness: int, grid_size: int
) -> tuple[tuple[int, int], tuple[int, int]]:
    """Inclusive (row, col) anchor ranges keeping walls in bounds and one
    free cell beyond each cap."""
    n = grid_size
    if axis is Orientation.HORIZONTAL:
        rows = (1, n - 2 - thickness)
        cols = (2, n - 2 - interior_length)
    else:
        rows = (2, n - 2 - interior_length)
        cols = (1, n - 2 - thickness)
    return rows, cols


@dataclass(frozen=True)
class GeometrySample:
    tube: TubeSpec
    agent_start: Position
    food_start: Position
    tool: ToolPose


def _draw_geometry(rng: SplitMix64, grid_size: int) -> GeometrySample | None:
    """One geometry draw; None when the draw has no room to place pieces."""
    n = grid_size
    axis = rng.choice((Orientation.HORIZONTAL, Orientation.VERTICAL))
    interior_length = rng.choice(INTERIOR_LENGTHS)
    thickness = rng.choice(THICKNESSES)
    trap_end = rng.choice((End.NEGATIVE, End.POSITIVE))
    hole_lane = rng.randrange(thickness)
    (row_lo, row_hi), (col_lo, col_hi) = _geometry_ranges(axis, interior_length, thickness, n)
    if row_lo > row_hi or col_lo > col_hi:
        return None
    anchor = Position(
        row_lo + rng.randrange(row_hi - row_lo + 1),
        col_lo + rng.randrange(col_hi - col_lo + 1),
    )
    tube = TubeSpec(axis, anchor, interior_length, thickness, trap_end, hole_lane)

    base = tube._hole_lane_base()
    offset = rng.randrange(interior_length)
    if axis is Orientation.HORIZONTAL:
        food = Position(base.row, base.col + offset)
    else:
        food = Position(base.row + offset, base.col)

    region = tube.region_cells()
    tool_orientation = rng.choice((Orientation.HORIZONTAL, Orientation.VERTICAL))
    tool_length = interior_length + 1
    candidates = []
    for r in range(n):
        for c in range(n):
            pose = ToolPose(Position(r, c), tool_orientation, tool_length)
            cells = pose.cells()
            last = cells[-1]
            if last.row >= n or last.col >= n:
                continue
            if any(cell in region or cell == food for cell in cells):
                continue
            candidates.append(pose)
    if not candidates:
        return None
    tool = rng.choice(candidates)

    tool_cells = set(tool.cells())
    open_cells = [
        Position(r, c)
        for r in range(n)
        for c in range(n)
        if Position(r, c) not in region and Position(r, c) not in tool_cells
    ]
    if not open_cells:
        return None
    agent = rng.choice(open_cells)
    return GeometrySample(tube=tube, agent_start=agent, food_start=food, tool=tool)


def sample_perceptual(rng: SplitMix64, grid_size: int = GRID_SIZE) -> GeometrySample:
    """Geometry draw, rejected until the layout validates and the planner
    certifies a solution within the horizon."""
    from .planner import solve

    for _ in range(MAX_REJECTIONS):
        sample = _draw_geometry(rng, grid_size)
        if sample is None:
            continue
        candidate = TaskConfig(
            tube=sample.tube,
            agent_start=sample.agent_start,
            food_start=sample.food_start,
            tool=sample.tool,
            palette=BASE_PALETTE,
            symbols=SymbolMap.identity(),
            grid_size=grid_size,
        )
        if validate_config(candidate):
            continue
        if solve(candidate) is None:
            continue
        return sample
    raise GenerationExhausted(
        f"no solvable geometry after {MAX_REJECTIONS} draws"
    )


def _palette_separated(points: dict[ObjectCategory, tuple[float, float, float]]) -> bool:
    cats = list(points)
    for i in range(len(cats)):
        for j in range(i + 1, len(cats)):
            if geodesic_distance(points[cats[i]], points[cats[j]]) < MIN_COLOR_SEPARATION:
                return False
    return True


def sample_structural(rng: SplitMix64) -> Palette:
    """Palette with tool/trap/tube/exit/ground resampled on the sphere.

    Agent and food keep their base colors; draws are rejected until every
    pair of the seven category points sits at least
    ``MIN_COLOR_SEPARATION`` radians apart.
    """
    fixed = {
        ObjectCategory.AGENT: BASE_SPHERE_POINTS[ObjectCategory.AGENT],
        ObjectCategory.FOOD: BASE_SPHERE_POINTS[ObjectCategory.FOOD],
    }
    for _ in range(MAX_REJECTIONS):
        points = dict(fixed)
        for cat in STRUCTURAL_CATEGORIES:
            points[cat] = rng.unit_vector3()
        if not _palette_separated(points):
            continue
        return {cat: sphere_point_to_color(points[cat]) for cat in CATEGORIES}
    raise GenerationExhausted(f"no separated palette after {MAX_REJECTIONS} draws")


def sample_symbolic(rng: SplitMix64) -> SymbolMap:
    """Uniform swap partner from {Tool, Trap, TubeWall, Exit}."""
    return SymbolMap(rng.choice(SWAPPABLE))


def sample_task(transfer_set: TransferSet, seed: int, grid_size: int = GRID_SIZE) -> TaskConfig:
    """Task for a transfer set and seed; fields outside the set stay base.

    Kernel draws come from named streams ("perceptual", "structural",
    "symbolic") of ``seed``, so the same seed reproduces the same task and
    kernels never share draws.
    """
    base = base_config()
    if transfer_set.perceptual:
        geometry = sample_perceptual(stream(seed, "perceptual"), grid_size)
        tube, agent, food, tool = (
            geometry.tube,
            geometry.agent_start,
            geometry.food_start,
            geometry.tool,
        )
    else:
        tube, agent, food, tool = base.tube, base.agent_start, base.food_start, base.tool
    palette = (
        sample_structural(stream(seed, "structural"))
        if transfer_set.structural
        else BASE_PALETTE
    )
    symbols = (
        sample_symbolic(stream(seed, "symbolic"))
        if transfer_set.symbolic
        else SymbolMap.identity()
    )
    return TaskConfig(
        tube=tube,
        agent_start=agent,
        food_start=food,
        tool=tool,
        palette=palette,
        symbols=symbols,
        grid_size=grid_size,
        seed_provenance=SeedProvenance(seed=seed, transfer_set=transfer_set),
    )


def validate_config(config: TaskConfig) -> list[str]:
    """Every violated constraint, or an empty list when the config is valid.

    Covers the layout checks plus tool reachability: a path of agent-only
    moves must end adjacent to some tool cell.
    """
    violations = check_layout(config)
    if violations:
        return violations
    from .planner import reachable

    if not reachable(config):
        violations.append("tool is out of the agent's reach")
    return violations


def _on_manifold(color: tuple[float, float, float]) -> bool:
    try:
        color_to_sphere_point(color)
        return True
    except ValueError:
        return False


def _geometry_in_perceptual_support(config: TaskConfig) -> bool:
    tube = config.tube
    if tube.interior_length not in INTERIOR_LENGTHS:
        return False
    if tube.lateral_thickness not in THICKNESSES:
        return False
    if not 0 <= tube.hole_lane < tube.lateral_thickness:
        return False
    (row_lo, row_hi), (col_lo, col_hi) = _geometry_ranges(
        tube.axis, tube.interior_length, tube.lateral_thickness, config.grid_size
    )
    anchor = tube.interior_anchor
    if not (row_lo <= anchor.row <= row_hi and col_lo <= anchor.col <= col_hi):
        return False
    if config.tool.length != tube.interior_length + 1:
        return False
    base = tube._hole_lane_base()
    lane = {
        (
            Position(base.row, base.col + k)
            if tube.axis is Orientation.HORIZONTAL
            else Position(base.row + k, base.col)
        )
        for k in range(tube.interior_length)
    }
    if config.food_start not in lane:
        return False
    region = tube.region_cells()
    tool_cells = set(config.tool.cells())
    if tool_cells & region or config.food_start in tool_cells:
        return False
    if config.agent_start in region or config.agent_start in tool_cells:
        return False
    if config.agent_start == config.food_start:
        return False
    return True


def _palette_in_structural_support(palette: Palette) -> bool:
    for cat in (ObjectCategory.AGENT, ObjectCategory.FOOD):
        if palette[cat] != BASE_PALETTE[cat]:
            return False
    points = {}
    for cat in CATEGORIES:
        if not _on_manifold(palette[cat]):
            return False
        points[cat] = color_to_sphere_point(palette[cat])
    for i, a in enumerate(CATEGORIES):
        for b in CATEGORIES[i + 1 :]:
            if geodesic_distance(points[a], points[b]) < MIN_COLOR_SEPARATION - 1e-12:
                return False
    return True


def in_support(config: TaskConfig, transfer_set: TransferSet) -> bool:
    """Whether the config could have been produced for the transfer set.

    Fields governed by kernels in the set must satisfy that sampler's
    constraints; every other field must equal its base value.
    """
    base = base_config()
    if config.grid_size != base.grid_size or config.horizon != base.horizon:
        return False

    if transfer_set.perceptual:
        if not _geometry_in_perceptual_support(config):
            return False
    else:
        if (
            config.tube != base.tube
            or config.agent_start != base.agent_start
            or config.food_start != base.food_start
            or config.tool != base.tool
        ):
            return False

    if transfer_set.structural:
        if not _palette_in_structural_support(config.palette):
            return False
    else:
        if config.palette != base.palette:
            return False

    if transfer_set.symbolic:
        if config.symbols.partner not in SWAPPABLE:
            return False
    else:
        if not config.symbols.is_identity:
            return False
    return True


def strip_provenance(config: TaskConfig) -> TaskConfig:
    return replace(config, seed_provenance=None)
