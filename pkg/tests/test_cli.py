"""Command-line surface: subcommands, exit codes, stream discipline."""

import json
import subprocess
import sys
from pathlib import Path

import pytest

from traptube.cli import main
from traptube.tasks import TransferSet, sample_task

GOLDENS = Path(__file__).parent / "goldens"


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_gen_golden_bytes(capsys):
    code, out, err = run_cli(capsys, "gen", "--set", "P,St,Sy", "--seed", "0")
    assert code == 0
    golden = (GOLDENS / "task_PStSy_seed0.json").read_text(encoding="utf-8")
    assert out == golden


def test_gen_unknown_kernel_is_usage_error(capsys):
    with pytest.raises(SystemExit) as err:
        main(["gen", "--set", "Q"])
    assert err.value.code == 2


def test_solve_base_emits_plan(capsys, tmp_path):
    cfg_path = tmp_path / "base.json"
    cfg_path.write_text(sample_task(TransferSet(), 0).to_json(), encoding="utf-8")
    code, out, err = run_cli(capsys, "solve", "--config", str(cfg_path))
    assert code == 0
    plan = json.loads(out)
    assert plan["length"] == len(plan["actions"]) > 0


def test_solve_unsolvable_exits_1(capsys, tmp_path):
    from conftest import vertical_tool_base

    cfg_path = tmp_path / "bad.json"
    cfg_path.write_text(vertical_tool_base().to_json(), encoding="utf-8")
    code, out, err = run_cli(capsys, "solve", "--config", str(cfg_path))
    assert code == 1
    assert out == ""
    assert "unsolvable" in err


def test_play_planner_emits_episode(capsys):
    code, out, err = run_cli(capsys, "play", "--agent", "planner", "--set", "base")
    assert code == 0
    episode = json.loads(out)
    assert episode["solved"] is True


def test_play_via_wire_matches_in_process(capsys):
    code, wired, _ = run_cli(
        capsys, "play", "--agent", "random", "--agent-seed", "9", "--set", "base", "--via-wire"
    )
    assert code == 0
    code, local, _ = run_cli(
        capsys, "play", "--agent", "random", "--agent-seed", "9", "--set", "base"
    )
    assert code == 0
    assert wired == local


def test_play_trace_and_replay(capsys, tmp_path):
    trace_path = tmp_path / "trace.json"
    out_dir = tmp_path / "frames"
    code, out, err = run_cli(
        capsys,
        "play",
        "--agent",
        "planner",
        "--set",
        "base",
        "--trace-out",
        str(trace_path),
    )
    assert code == 0
    code, out, err = run_cli(
        capsys, "replay", "--trace", str(trace_path), "--out-dir", str(out_dir), "--scale", "2"
    )
    assert code == 0
    summary = json.loads(out)
    assert summary["solved"] is True
    frames = sorted(out_dir.glob("frame_*.ppm"))
    assert len(frames) == summary["frames"]
    assert frames[0].read_bytes().startswith(b"P6\n24 24\n255\n")


def test_replay_rejects_tampered_trace(capsys, tmp_path):
    trace_path = tmp_path / "trace.json"
    run_cli(capsys, "play", "--agent", "planner", "--set", "base", "--trace-out", str(trace_path))
    doc = json.loads(trace_path.read_text(encoding="utf-8"))
    doc["rewards"][0] = 1
    trace_path.write_text(json.dumps(doc), encoding="utf-8")
    code, out, err = run_cli(capsys, "replay", "--trace", str(trace_path), "--out-dir", str(tmp_path / "x"))
    assert code == 1
    assert "mismatch" in err


def test_eval_json_deterministic(capsys):
    args = ["eval", "--agent", "random", "--trials", "1", "--n-tasks", "2", "--seed", "4"]
    code, out1, _ = run_cli(capsys, *args)
    assert code == 0
    code, out2, _ = run_cli(capsys, *args)
    assert out1 == out2
    report = json.loads(out1)
    assert len(report["per_set"]) == 8


def test_eval_table_format(capsys):
    code, out, _ = run_cli(
        capsys, "eval", "--agent", "planner", "--trials", "1", "--n-tasks", "1",
        "--seed", "0", "--format", "table",
    )
    assert code == 0
    assert "P+St+Sy" in out and "100.0%" in out


def test_eval_rejects_zero_tasks(capsys):
    with pytest.raises(SystemExit) as err:
        main(["eval", "--agent", "random", "--n-tasks", "0"])
    assert err.value.code == 2


def test_render_writes_ppm(capsys, tmp_path):
    out_path = tmp_path / "board.ppm"
    code, out, err = run_cli(
        capsys, "render", "--set", "base", "--scale", "4", "--out", str(out_path)
    )
    assert code == 0
    data = out_path.read_bytes()
    assert data == (GOLDENS / "base_render.ppm").read_bytes()


def test_missing_config_file_is_domain_error(capsys):
    code, out, err = run_cli(capsys, "solve", "--config", "/nonexistent/path.json")
    assert code == 1
    assert err


def test_serve_stdio_subprocess():
    lines = (
        '{"cmd":"reset","transfer_set":[],"seed":0}\n'
        '{"cmd":"step","grasp":"Up","move":"Right"}\n'
        '{"cmd":"close"}\n'
    )
    proc = subprocess.run(
        [sys.executable, "-m", "traptube.cli", "serve", "--stdio"],
        input=lines,
        capture_output=True,
        text=True,
        timeout=60,
    )
    assert proc.returncode == 0
    frames = [json.loads(line) for line in proc.stdout.strip().splitlines()]
    assert frames[0]["step"] == 0
    assert frames[1]["step"] == 1 and frames[1]["reward"] == 0
    assert frames[2] == {"closed": True}
