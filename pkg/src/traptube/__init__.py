"""Trap-tube tool-use gridworld with transfer-based task generation.

A deterministic 12x12 gridworld where an agent must grasp a stick tool,
work it into a walled tube from the trap side, and push a food item out
through the exit. Tasks are sampled by composing three transfer kernels
over a canonical base task: perceptual (geometry), structural (category
appearance on a spherical color manifold), and symbolic (the tool's
appearance swapped with another category). An exact breadth-first planner
certifies every generated task solvable, reference agents and an
evaluation harness measure solve rates per transfer set, and a
newline-delimited JSON protocol exposes the simulator to external
learners.
"""

from .env import (
    ACTIONS,
    Action,
    ConfigError,
    End,
    EnvState,
    EpisodeFinished,
    Orientation,
    StepResult,
    ToolPose,
    TrapTubeEnv,
    TubeSpec,
    is_success,
    occupancy,
    reset,
    step,
)
from .grid import (
    CellColor,
    Direction,
    NotOnManifold,
    ObjectCategory,
    Palette,
    Position,
    SymbolMap,
    color_to_sphere_point,
    render,
    render_image,
    sphere_point_to_color,
)
from .harness import (
    EpisodeResult,
    EvalReport,
    evaluate,
    experiment_eval,
    run_episode,
    run_episode_over_wire,
)
from .planner import (
    CapExceeded,
    Plan,
    SearchKey,
    enumerate_reachable,
    reachable,
    search_key,
    solve,
)
from .tasks import (
    ALL_TRANSFER_SETS,
    BASE_PALETTE,
    GenerationExhausted,
    TaskConfig,
    TransferSet,
    base_config,
    in_support,
    sample_structural,
    sample_symbolic,
    sample_task,
    validate_config,
)

__version__ = "0.1.0"
