"""Grid primitives: positions, directions, object categories, colors.

Coordinates are row-major with the origin at the top-left cell; row 0 is
the top image row. Cell appearance is a 3-channel color in [0, 1]^3, and
every category color lives on the image of the unit sphere under the
affine map ``(p + 1) / 2`` so that appearance resampling can move points
along a single consistent manifold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING

import numpy as np

if TYPE_CHECKING:
    from .env import EnvState

CellColor = tuple[float, float, float]
Palette = dict["ObjectCategory", CellColor]


class NotOnManifold(ValueError):
    """Color does not lie on the spherical appearance manifold."""


@dataclass(frozen=True, order=True)
class Position:
    row: int
    col: int

    def __iter__(self):
        return iter((self.row, self.col))


class Direction(Enum):
    UP = (-1, 0)
    DOWN = (1, 0)
    LEFT = (0, -1)
    RIGHT = (0, 1)

    @property
    def delta(self) -> tuple[int, int]:
        return self.value

    @property
    def opposite(self) -> "Direction":
        return _OPPOSITE[self]

    @property
    def wire_name(self) -> str:
        return self.name.title()

    @classmethod
    def from_wire(cls, name: str) -> "Direction":
        try:
            return cls[name.upper()]
        except (KeyError, AttributeError):
            raise ValueError(f"unknown direction {name!r}") from None


_OPPOSITE = {
    Direction.UP: Direction.DOWN,
    Direction.DOWN: Direction.UP,
    Direction.LEFT: Direction.RIGHT,
    Direction.RIGHT: Direction.LEFT,
}

DIRECTIONS = (Direction.UP, Direction.DOWN, Direction.LEFT, Direction.RIGHT)


class ObjectCategory(Enum):
    GROUND = "Ground"
    AGENT = "Agent"
    FOOD = "Food"
    TOOL = "Tool"
    TUBE_WALL = "TubeWall"
    TRAP = "Trap"
    EXIT = "Exit"

    @classmethod
    def from_name(cls, name: str) -> "ObjectCategory":
        for cat in cls:
            if cat.value == name:
                return cat
        raise ValueError(f"unknown object category {name!r}")


CATEGORIES = tuple(ObjectCategory)

# The four categories a symbol swap may pair the tool with.
SWAPPABLE = (
    ObjectCategory.TOOL,
    ObjectCategory.TRAP,
    ObjectCategory.TUBE_WALL,
    ObjectCategory.EXIT,
)


@dataclass(frozen=True)
class SymbolMap:
    """Appearance swap between the tool and one partner category.

    ``partner == TOOL`` is the identity map. The swap is bidirectional and
    affects rendering only; dynamics never consult it.
    """

    partner: ObjectCategory

    def __post_init__(self) -> None:
        if self.partner not in SWAPPABLE:
            raise ValueError(f"invalid symbol partner {self.partner}")

    @classmethod
    def identity(cls) -> "SymbolMap":
        return cls(ObjectCategory.TOOL)

    @property
    def is_identity(self) -> bool:
        return self.partner is ObjectCategory.TOOL


def sphere_point_to_color(p: tuple[float, float, float]) -> CellColor:
    """Map a unit vector to its color ``(p + 1) / 2``; bijective on the sphere."""
    norm = math.sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2])
    if abs(norm - 1.0) > 1e-9:
        raise ValueError(f"not a unit vector (norm {norm!r})")
    return ((p[0] + 1.0) / 2.0, (p[1] + 1.0) / 2.0, (p[2] + 1.0) / 2.0)


def color_to_sphere_point(c: CellColor) -> tuple[float, float, float]:
    """Exact inverse of :func:`sphere_point_to_color`.

    Raises :class:`NotOnManifold` when ``2c - 1`` is not a unit vector
    within 1e-6.
    """
    v = (2.0 * c[0] - 1.0, 2.0 * c[1] - 1.0, 2.0 * c[2] - 1.0)
    norm = math.sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
    if abs(norm - 1.0) > 1e-6:
        raise NotOnManifold(f"color {c!r} is off the sphere (norm {norm!r})")
    return (v[0] / norm, v[1] / norm, v[2] / norm)


def geodesic_distance(p: tuple[float, float, float], q: tuple[float, float, float]) -> float:
    """Great-circle distance in radians between two unit vectors."""
    dot = p[0] * q[0] + p[1] * q[1] + p[2] * q[2]
    return math.acos(max(-1.0, min(1.0, dot)))


def effective_palette(palette: Palette, symbols: SymbolMap) -> Palette:
    """Palette with the symbol swap applied to appearance."""
    if symbols.is_identity:
        return dict(palette)
    swapped = dict(palette)
    swapped[ObjectCategory.TOOL] = palette[symbols.partner]
    swapped[symbols.partner] = palette[ObjectCategory.TOOL]
    return swapped


def render(state: "EnvState", palette: Palette, symbols: SymbolMap) -> np.ndarray:
    """Render simulation state to an (n, n, 3) float tensor in [0, 1].

    Cell overlap resolves as Agent > Tool > Food > Trap/Exit/TubeWall >
    Ground; the symbol swap recolors tool and partner cells without
    touching the underlying categories.
    """
    from .env import category_codes

    colors = effective_palette(palette, symbols)
    lut = np.empty((len(CATEGORIES), 3), dtype=np.float64)
    for idx, cat in enumerate(CATEGORIES):
        lut[idx] = colors[cat]
    return lut[category_codes(state)]


def render_image(
    state: "EnvState", palette: Palette, symbols: SymbolMap, scale: int = 1
) -> bytes:
    """Binary PPM (P6) image of the rendered state.

    Each cell becomes a ``scale``x``scale`` pixel block; channels quantize
    as ``round(c * 255)``.
    """
    if scale < 1:
        raise ValueError("scale must be >= 1")
    img = render(state, palette, symbols)
    quantized = np.round(img * 255.0).astype(np.uint8)
    quantized = np.repeat(np.repeat(quantized, scale, axis=0), scale, axis=1)
    height, width = quantized.shape[:2]
    header = f"P6\n{width} {height}\n255\n".encode("ascii")
    return header + quantized.tobytes()


def palette_to_jsonable(palette: Palette) -> dict[str, list[float]]:
    return {cat.value: [float(x) for x in palette[cat]] for cat in CATEGORIES}


def palette_from_jsonable(data: dict[str, list[float]]) -> Palette:
    palette: Palette = {}
    for cat in CATEGORIES:
        c = data[cat.value]
        palette[cat] = (float(c[0]), float(c[1]), float(c[2]))
    return palette
