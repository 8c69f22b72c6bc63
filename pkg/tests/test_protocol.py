"""Wire protocol: framing, sessions, isolation, remote equivalence."""

import json
import threading

import pytest

from traptube.agents import PlannerAgent, RandomAgent
from traptube.env import Action
from traptube.grid import Direction
from traptube.harness import run_episode, run_episode_over_wire
from traptube.protocol import Session, encode_frame, in_memory_client, tcp_client, _Server, _SessionHandler
from traptube.tasks import TransferSet, base_config, sample_task


def make_session():
    out = []
    session = Session(out.append)
    return session, out


def send(session, out, payload) -> dict:
    session.handle_line(encode_frame(payload) if isinstance(payload, dict) else payload)
    return json.loads(out[-1]) if out else {}


def test_reset_frame_schema():
    session, out = make_session()
    alive = session.handle_line('{"cmd":"reset","transfer_set":["P"],"seed":7}')
    assert alive
    frame = json.loads(out[-1])
    assert set(frame) == {"observation", "step", "done"}
    assert frame["step"] == 0 and frame["done"] is False
    assert len(frame["observation"]) == 432


def test_reset_base_then_step():
    session, out = make_session()
    send(session, out, {"cmd": "reset", "transfer_set": [], "seed": 0})
    frame = send(session, out, {"cmd": "step", "grasp": "Up", "move": "Right"})
    assert frame["reward"] == 0 and frame["step"] == 1 and frame["done"] is False
    assert len(frame["observation"]) == 432


def test_inline_task_reset(base):
    session, out = make_session()
    frame = send(session, out, {"cmd": "reset", "task": base.to_jsonable()})
    assert frame["done"] is False and len(frame["observation"]) == 432


def test_malformed_action_errors_and_closes():
    session, out = make_session()
    send(session, out, {"cmd": "reset", "transfer_set": [], "seed": 0})
    alive = session.handle_line('{"cmd":"step","grasp":"Up"}')
    assert not alive
    assert json.loads(out[-1]) == {"error": "malformed_action"}


def test_unknown_direction_is_malformed():
    session, out = make_session()
    send(session, out, {"cmd": "reset", "transfer_set": [], "seed": 0})
    frame = send(session, out, {"cmd": "step", "grasp": "North", "move": "Right"})
    assert frame == {"error": "malformed_action"}


def test_step_before_reset_errors():
    session, out = make_session()
    alive = session.handle_line('{"cmd":"step","grasp":"Up","move":"Up"}')
    assert not alive
    assert json.loads(out[-1]) == {"error": "no_active_episode"}


def test_malformed_json_errors():
    session, out = make_session()
    alive = session.handle_line("this is not json")
    assert not alive
    assert json.loads(out[-1]) == {"error": "malformed_json"}


def test_unknown_command_errors():
    session, out = make_session()
    alive = session.handle_line('{"cmd":"dance"}')
    assert not alive
    assert json.loads(out[-1]) == {"error": "unknown_command"}


def test_close_acknowledges():
    session, out = make_session()
    alive = session.handle_line('{"cmd":"close"}')
    assert not alive
    assert json.loads(out[-1]) == {"closed": True}


def test_frame_round_trip():
    payload = {"cmd": "step", "grasp": "Left", "move": "Down"}
    assert json.loads(encode_frame(payload)) == payload
    action = Action(Direction.LEFT, Direction.DOWN)
    assert Action.from_jsonable(json.loads(encode_frame(action.to_jsonable()))) == action


def test_session_isolation():
    s1, out1 = make_session()
    s2, out2 = make_session()
    send(s1, out1, {"cmd": "reset", "transfer_set": [], "seed": 0})
    send(s2, out2, {"cmd": "reset", "transfer_set": [], "seed": 0})
    # drive only session 1
    f1 = send(s1, out1, {"cmd": "step", "grasp": "Up", "move": "Right"})
    f2 = send(s2, out2, {"cmd": "step", "grasp": "Up", "move": "Up"})
    assert f1["step"] == 1 and f2["step"] == 1
    # session 2's observation is unaffected by session 1's move
    assert f1["observation"] != f2["observation"]


def test_episode_finished_over_wire(base):
    session, out = make_session()
    send(session, out, {"cmd": "reset", "task": base.to_jsonable()})
    agent = PlannerAgent(base)
    agent.begin_episode(base)
    last = None
    for action in agent.plan.actions:
        payload = {"cmd": "step"}
        payload.update(action.to_jsonable())
        last = send(session, out, payload)
    assert last["done"] is True and last["reward"] == 1
    frame = send(session, out, {"cmd": "step", "grasp": "Up", "move": "Up"})
    assert frame == {"error": "episode_finished"}


def test_remote_equals_local_random_agent():
    ts = TransferSet(symbolic=True)
    local = run_episode(sample_task(ts, 5), RandomAgent(123))
    remote = run_episode_over_wire(RandomAgent(123), transfer_set=ts, seed=5)
    assert remote.to_json() == local.to_json()


def test_remote_equals_local_planner_agent(base):
    local = run_episode(base, PlannerAgent(base))
    remote = run_episode_over_wire(PlannerAgent(base), task=base)
    assert remote.to_json() == local.to_json()


def test_tcp_server_round_trip(base):
    server = _Server(("127.0.0.1", 0), _SessionHandler)
    port = server.server_address[1]
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        client, close = tcp_client("127.0.0.1", port)
        frame = client.reset(transfer_set=TransferSet(), seed=0)
        assert frame["step"] == 0
        frame = client.step(Action(Direction.UP, Direction.RIGHT))
        assert frame["step"] == 1
        assert client.close() == {"closed": True}
        close()
    finally:
        server.shutdown()
        server.server_close()


def test_wire_client_in_memory_convenience():
    client = in_memory_client()
    frame = client.reset(transfer_set=TransferSet(), seed=0)
    assert frame["done"] is False
    with pytest.raises(RuntimeError):
        bad = in_memory_client()
        bad.step(Action(Direction.UP, Direction.UP))  # no reset -> error frame
