"""Command-line surface.

Subcommands: gen (emit a task config), solve (emit a plan), play (run an
agent for one episode), eval (full evaluation report), render (task or
trace frame to PPM), replay (trace to PPM sequence), serve (protocol
endpoint). Data goes to stdout, diagnostics to stderr; exit code 0 on
success, 1 on domain errors (unsolvable, invalid config), 2 on usage
errors.
"""

from __future__ import annotations

import argparse
import datetime
import json
import sys
from pathlib import Path

from . import agents, harness, planner, protocol
from .env import ConfigError, reset
from .grid import render_image
from .tasks import (
    GenerationExhausted,
    TaskConfig,
    TransferSet,
    sample_task,
)

USAGE_ERROR = 2
DOMAIN_ERROR = 1


def _transfer_set(text: str) -> TransferSet:
    try:
        return TransferSet.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _load_config(path: str) -> TaskConfig:
    return TaskConfig.from_json(Path(path).read_text(encoding="utf-8"))


def _config_from_args(args) -> TaskConfig:
    if getattr(args, "config", None):
        return _load_config(args.config)
    return sample_task(args.set, args.seed)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def _emit_bytes(data: bytes, out: str | None) -> None:
    if out:
        Path(out).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()


def _make_agent(name: str, config: TaskConfig, agent_seed: int) -> agents.Agent:
    return harness.AGENT_FACTORIES[name](config, agent_seed)


def cmd_gen(args) -> int:
    config = sample_task(args.set, args.seed)
    _emit(config.to_json(), args.out)
    return 0


def cmd_solve(args) -> int:
    config = _config_from_args(args)
    plan = planner.solve(config)
    if plan is None:
        print("unsolvable within the horizon", file=sys.stderr)
        return DOMAIN_ERROR
    _emit(
        json.dumps(plan.to_jsonable(), sort_keys=True, separators=(",", ":")),
        args.out,
    )
    return 0


def cmd_play(args) -> int:
    config = _config_from_args(args)
    agent = _make_agent(args.agent, config, args.agent_seed)
    if args.via_wire:
        episode = harness.run_episode_over_wire(agent, task=config)
    elif args.trace_out:
        episode, states = harness.run_episode(config, agent, record_states=True)
        trace = harness.save_trace(config, episode, states)
        Path(args.trace_out).write_text(
            json.dumps(trace, sort_keys=True, separators=(",", ":")) + "\n",
            encoding="utf-8",
        )
    else:
        episode = harness.run_episode(config, agent)
    _emit(episode.to_json(), args.out)
    return 0


def cmd_eval(args) -> int:
    timestamp = None
    if args.timestamp:
        timestamp = datetime.datetime.now(datetime.timezone.utc).isoformat()
    report = harness.experiment_eval(
        harness.AGENT_FACTORIES[args.agent],
        trials=args.trials,
        n_tasks=args.n_tasks,
        seed=args.seed,
        agent_name=args.agent,
        any_success=args.any_success,
        timestamp=timestamp,
    )
    if args.format == "table":
        _emit(harness.format_report_table(report), args.out)
    else:
        _emit(report.to_json(), args.out)
    return 0


def cmd_render(args) -> int:
    config = _config_from_args(args)
    state = reset(config)
    if args.trace:
        trace = json.loads(Path(args.trace).read_text(encoding="utf-8"))
        _, states = harness.replay_trace(trace)
        if not 0 <= args.frame < len(states):
            print(f"trace has {len(states)} frames", file=sys.stderr)
            return DOMAIN_ERROR
        state = states[args.frame]
        config = TaskConfig.from_jsonable(trace["config"])
    data = render_image(state, config.palette, config.symbols, scale=args.scale)
    _emit_bytes(data, args.out)
    return 0


def cmd_replay(args) -> int:
    trace = json.loads(Path(args.trace).read_text(encoding="utf-8"))
    try:
        config, states = harness.replay_trace(trace)
    except ValueError as exc:
        print(f"replay mismatch: {exc}", file=sys.stderr)
        return DOMAIN_ERROR
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for k, state in enumerate(states):
        data = render_image(state, config.palette, config.symbols, scale=args.scale)
        (out_dir / f"frame_{k:03d}.ppm").write_bytes(data)
    summary = {
        "frames": len(states),
        "solved": bool(trace["rewards"] and trace["rewards"][-1] == 1),
        "steps": len(trace["actions"]),
    }
    print(json.dumps(summary, sort_keys=True, separators=(",", ":")))
    return 0


def cmd_serve(args) -> int:
    if args.stdio:
        protocol.serve_stdio()
        return 0
    host, _, port = args.listen.rpartition(":")
    protocol.serve_tcp(host or "127.0.0.1", int(port))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="traptube",
        description="Trap-tube tool-use gridworld: tasks, oracle planner, "
        "agent evaluation, and a wire protocol for external learners.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_task_source(p, require=False):
        p.add_argument("--config", help="task config JSON file")
        p.add_argument(
            "--set",
            type=_transfer_set,
            default=TransferSet(),
            help="transfer set, e.g. base, P, St,Sy or P,St,Sy",
        )
        p.add_argument("--seed", type=int, default=0, help="64-bit task seed")

    p = sub.add_parser("gen", help="sample a task config and emit its JSON")
    p.add_argument("--set", type=_transfer_set, default=TransferSet())
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("solve", help="emit the oracle plan for a task")
    add_task_source(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("play", help="run one agent episode")
    add_task_source(p)
    p.add_argument("--agent", choices=sorted(harness.AGENT_FACTORIES), default="random")
    p.add_argument("--agent-seed", type=int, default=0)
    wire_or_trace = p.add_mutually_exclusive_group()
    wire_or_trace.add_argument(
        "--via-wire",
        action="store_true",
        help="drive the episode through an in-process wire protocol session",
    )
    wire_or_trace.add_argument("--trace-out", help="write the full episode trace JSON here")
    p.add_argument("--out")
    p.set_defaults(func=cmd_play)

    p = sub.add_parser("eval", help="evaluate an agent over all transfer sets")
    p.add_argument("--agent", choices=sorted(harness.AGENT_FACTORIES), default="random")
    p.add_argument("--trials", type=_positive_int, default=5)
    p.add_argument("--n-tasks", type=_positive_int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("json", "table"), default="json")
    p.add_argument(
        "--any-success",
        action="store_true",
        help="aggregate solved-at-least-once per trial instead of solve rate",
    )
    p.add_argument(
        "--timestamp",
        action="store_true",
        help="include a wall-clock timestamp (breaks byte reproducibility)",
    )
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("render", help="render a task or trace frame to PPM")
    add_task_source(p)
    p.add_argument("--trace", help="episode trace JSON file")
    p.add_argument("--frame", type=int, default=0, help="trace frame index")
    p.add_argument("--scale", type=_positive_int, default=8)
    p.add_argument("--out")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("replay", help="verify a trace and emit its PPM frames")
    p.add_argument("--trace", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--scale", type=_positive_int, default=8)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("serve", help="serve the wire protocol")
    mode = p.add_mutually_exclusive_group(required=True)
    mode.add_argument("--stdio", action="store_true", help="one session on stdio")
    mode.add_argument("--listen", help="host:port TCP listener")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, GenerationExhausted, agents.AgentProtocolError) as exc:
        print(str(exc), file=sys.stderr)
        return DOMAIN_ERROR
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        print(str(exc), file=sys.stderr)
        return DOMAIN_ERROR


if __name__ == "__main__":
    sys.exit(main())
