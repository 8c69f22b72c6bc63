"""Newline-delimited JSON wire protocol for external learners.

One session drives one environment sequence over a byte stream (stdio or
one TCP connection). Frames are UTF-8 JSON, one per line.

Commands:
    {"cmd": "reset", "transfer_set": ["P", "St"], "seed": 7}
    {"cmd": "reset", "task": {...inline task config...}}
    {"cmd": "step", "grasp": "Up", "move": "Right"}
    {"cmd": "close"}

Responses:
    reset -> {"done": false, "observation": [...n*n*3 reals...], "step": 0}
    step  -> {"done": ..., "observation": [...], "reward": 0|1, "step": k}
    close -> {"closed": true}

Observations are the rendered tensor flattened row-major (row, then
column, then channel; 432 reals on the standard 12x12 grid), so remote
learners face the same perceptual problem as in-process ones. Any error
produces an {"error": code} frame and terminates the session. Sessions
are fully isolated: each owns its environment and shares nothing.
"""

from __future__ import annotations

import json
import socket
import socketserver
import sys
from typing import Callable, Iterable

from .env import Action, EpisodeFinished, TrapTubeEnv
from .tasks import TaskConfig, TransferSet, sample_task

PROTOCOL_VERSION = 1


def encode_frame(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def _observation_frame(observation, step_count: int, done: bool, reward: int | None) -> dict:
    frame = {
        "observation": [float(x) for x in observation.reshape(-1)],
        "step": step_count,
        "done": done,
    }
    if reward is not None:
        frame["reward"] = reward
    return frame


def _parse_transfer_set(value) -> TransferSet:
    if value is None:
        return TransferSet()
    if not isinstance(value, list) or not all(isinstance(x, str) for x in value):
        raise ValueError("transfer_set must be a list of kernel names")
    return TransferSet.parse(",".join(value)) if value else TransferSet()


class Session:
    """One protocol session: feed lines in, frames go to ``write``.

    ``handle_line`` returns False once the session is over (after a close
    command or any error frame).
    """

    def __init__(self, write: Callable[[str], None]):
        self._write = write
        self._env: TrapTubeEnv | None = None

    def _emit(self, payload: dict) -> None:
        self._write(encode_frame(payload))

    def _fail(self, code: str) -> bool:
        self._emit({"error": code})
        return False

    def handle_line(self, line: str) -> bool:
        line = line.strip()
        if not line:
            return True
        try:
            msg = json.loads(line)
        except json.JSONDecodeError:
            return self._fail("malformed_json")
        if not isinstance(msg, dict):
            return self._fail("malformed_json")
        cmd = msg.get("cmd")
        if cmd == "reset":
            return self._handle_reset(msg)
        if cmd == "step":
            return self._handle_step(msg)
        if cmd == "close":
            self._emit({"closed": True})
            return False
        return self._fail("unknown_command")

    def _handle_reset(self, msg: dict) -> bool:
        try:
            if "task" in msg:
                config = TaskConfig.from_jsonable(msg["task"])
            else:
                transfer_set = _parse_transfer_set(msg.get("transfer_set"))
                seed = msg.get("seed", 0)
                if not isinstance(seed, int):
                    raise ValueError("seed must be an integer")
                config = sample_task(transfer_set, seed)
        except (ValueError, KeyError, TypeError):
            return self._fail("invalid_task")
        self._env = TrapTubeEnv(config)
        obs = self._env.reset()
        self._emit(_observation_frame(obs, 0, False, None))
        return True

    def _handle_step(self, msg: dict) -> bool:
        if self._env is None or self._env.state is None:
            return self._fail("no_active_episode")
        try:
            action = Action.from_jsonable(msg)
        except (ValueError, KeyError, TypeError):
            return self._fail("malformed_action")
        try:
            obs, reward, done = self._env.step(action)
        except EpisodeFinished:
            return self._fail("episode_finished")
        self._emit(
            _observation_frame(obs, self._env.state.step_count, done, reward)
        )
        return True


def serve_lines(lines: Iterable[str], write: Callable[[str], None]) -> None:
    """Drive one session over an arbitrary line source."""
    session = Session(write)
    for line in lines:
        if not session.handle_line(line):
            break


def serve_stdio() -> None:
    """One session on standard input/output."""

    def write(frame: str) -> None:
        sys.stdout.write(frame + "\n")
        sys.stdout.flush()

    serve_lines(sys.stdin, write)


class _SessionHandler(socketserver.StreamRequestHandler):
    def handle(self) -> None:
        def write(frame: str) -> None:
            self.wfile.write(frame.encode("utf-8") + b"\n")
            self.wfile.flush()

        session = Session(write)
        for raw in self.rfile:
            try:
                line = raw.decode("utf-8")
            except UnicodeDecodeError:
                write(encode_frame({"error": "malformed_json"}))
                break
            if not session.handle_line(line):
                break


class _Server(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True


def serve_tcp(host: str, port: int) -> None:
    """Listen for connections, one isolated session per connection."""
    with _Server((host, port), _SessionHandler) as server:
        server.serve_forever()


class WireClient:
    """Client half of the protocol, for tests and local wire-driving."""

    def __init__(self, send: Callable[[str], str]):
        # ``send`` submits one command line and returns one response line.
        self._send = send

    def _roundtrip(self, payload: dict) -> dict:
        response = json.loads(self._send(encode_frame(payload)))
        if "error" in response:
            raise RuntimeError(f"wire error: {response['error']}")
        return response

    def reset(
        self,
        transfer_set: TransferSet | None = None,
        seed: int = 0,
        task: TaskConfig | None = None,
    ) -> dict:
        if task is not None:
            return self._roundtrip({"cmd": "reset", "task": task.to_jsonable()})
        names = [] if transfer_set is None else transfer_set.name.split("+")
        if names == ["base"]:
            names = []
        return self._roundtrip({"cmd": "reset", "transfer_set": names, "seed": seed})

    def step(self, action: Action) -> dict:
        payload = {"cmd": "step"}
        payload.update(action.to_jsonable())
        return self._roundtrip(payload)

    def close(self) -> dict:
        return json.loads(self._send(encode_frame({"cmd": "close"})))


def in_memory_client() -> WireClient:
    """Wire client wired straight into a fresh in-process session."""
    out: list[str] = []
    session = Session(out.append)

    def send(line: str) -> str:
        session.handle_line(line)
        return out.pop()

    return WireClient(send)


def tcp_client(host: str, port: int) -> tuple[WireClient, Callable[[], None]]:
    """Wire client over a TCP connection; returns (client, close_fn)."""
    sock = socket.create_connection((host, port))
    reader = sock.makefile("r", encoding="utf-8")

    def send(line: str) -> str:
        sock.sendall(line.encode("utf-8") + b"\n")
        response = reader.readline()
        if not response:
            raise RuntimeError("connection closed")
        return response

    def close() -> None:
        reader.close()
        sock.close()

    return WireClient(send), close
