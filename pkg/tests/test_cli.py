import json
import subprocess
import sys
from fractions import Fraction

import pytest

from cpamm.cli import run
from cpamm.txn import load_trace, replay

EXAMPLE_TRACE = [
    {"atoms": {"0": {"0": "18", "1": "6"}, "1": {"0": "1", "1": "10"}}, "mints": {}, "amms": {}},
    {"kind": "create", "account": 0, "t0": 0, "t1": 1, "x0": "18/1", "x1": "6/1"},
    {"kind": "swap", "account": 1, "input": 1, "output": 0, "x": "6/1"},
]
EXAMPLE_STATE = {
    "atoms": {"1": {"1": "10/1"}},
    "mints": {"0": {"0-1": "18/1"}},
    "amms": {"0-1": ["18/1", "6/1"]},
}
ORACLE = {"prices": {"0": "3/1", "1": "4/1"}}


@pytest.fixture
def files(tmp_path):
    def write(name, rows):
        path = tmp_path / name
        if isinstance(rows, list):
            path.write_text("".join(json.dumps(r) + "\n" for r in rows))
        else:
            path.write_text(json.dumps(rows))
        return str(path)

    return write


def run_json(capsys, argv):
    code = run(argv)
    out = capsys.readouterr()
    return code, out


def test_replay_example(files, capsys):
    code, out = run_json(capsys, ["replay", files("t.jsonl", EXAMPLE_TRACE)])
    assert code == 0
    result = json.loads(out.out)
    assert result["steps"] == 2
    assert result["final"]["amms"] == {"0-1": ["9/1", "12/1"]}


def test_replay_gains_sum_to_delta(files, capsys):
    argv = ["--decimals", "3", "replay", files("t.jsonl", EXAMPLE_TRACE), "--oracle", files("o.json", ORACLE), "--gain", "1"]
    code, out = run_json(capsys, argv)
    assert code == 0
    result = json.loads(out.out)
    gains = [Fraction(g["exact"]) for g in result["gains"]]
    assert gains == [0, 3]
    assert sum(gains) == Fraction(result["total_gain"]["exact"]) == Fraction(result["networth_delta"]["exact"])
    assert result["total_gain"]["approx"] == "3.000"


def test_replay_gain_needs_oracle(files, capsys):
    code, out = run_json(capsys, ["replay", files("t.jsonl", EXAMPLE_TRACE), "--gain", "1"])
    assert code == 2


def test_replay_invalid_step(files, capsys):
    bad = EXAMPLE_TRACE[:2] + [{"kind": "swap", "account": 1, "input": 1, "output": 0, "x": "60/1"}]
    code, out = run_json(capsys, ["replay", files("t.jsonl", bad)])
    assert code == 1
    err = json.loads(out.err)
    assert err == {"error": "StepInvalid", "index": 1, "cause": "InsufficientBalance", "message": err["message"]}


def test_replay_states_out(files, capsys, tmp_path):
    states_path = tmp_path / "states.jsonl"
    code, _ = run_json(capsys, ["replay", files("t.jsonl", EXAMPLE_TRACE), "--states-out", str(states_path)])
    assert code == 0
    assert len(states_path.read_text().splitlines()) == 3


def test_replay_invalid_initial(files, capsys):
    rows = [EXAMPLE_STATE]
    code, out = run_json(capsys, ["replay", files("t.jsonl", rows)])
    assert code == 1
    assert json.loads(out.err)["error"] == "InvalidInitialState"


@pytest.mark.parametrize("content", ["not json\n", '{"kind": "swap"}\n', ""])
def test_replay_parse_errors(tmp_path, capsys, content):
    path = tmp_path / "bad.jsonl"
    path.write_text(content)
    code, out = run_json(capsys, ["replay", str(path)])
    assert code == 2
    assert json.loads(out.err)["error"] == "InputError"


def test_arb_example(files, capsys):
    argv = ["arb", "--state", files("s.json", EXAMPLE_STATE), "--oracle", files("o.json", ORACLE), "--pool", "0-1", "--account", "1"]
    code, out = run_json(capsys, argv)
    assert code == 0
    assert json.loads(out.out) == {
        "pool": "0-1", "direction": [1, 0], "x": "3/1", "y": "6/1", "gain": "6/1", "post_ratio": "3/4",
    }


def test_arb_aligned(files, capsys):
    oracle = {"prices": {"0": "1", "1": "3"}}
    argv = ["arb", "--state", files("s.json", EXAMPLE_STATE), "--oracle", files("o.json", oracle), "--pool", "1-0", "--account", "1"]
    code, out = run_json(capsys, argv)
    assert code == 0
    assert json.loads(out.out) == {"pool": "0-1", "direction": None}


def test_arb_lp_account_fails(files, capsys):
    argv = ["arb", "--state", files("s.json", EXAMPLE_STATE), "--oracle", files("o.json", ORACLE), "--pool", "0-1", "--account", "0"]
    code, out = run_json(capsys, argv)
    assert code == 1


def test_arb_missing_price(files, capsys):
    argv = ["arb", "--state", files("s.json", EXAMPLE_STATE), "--oracle", files("o.json", {"prices": {"0": "1"}}), "--pool", "0-1", "--account", "1"]
    assert run_json(capsys, argv)[0] == 2


def test_arb_requires_oracle(files, capsys):
    assert run_json(capsys, ["arb", "--state", files("s.json", EXAMPLE_STATE), "--pool", "0-1", "--account", "1"])[0] == 2


def test_gen_zero_steps(capsys):
    code, out = run_json(capsys, ["gen", "--steps", "0", "--seed", "3"])
    assert code == 0
    lines = out.out.splitlines()
    assert len(lines) == 1
    trace = load_trace(lines)
    assert trace.initial.valid_init()


def test_gen_then_replay(tmp_path, capsys):
    path = tmp_path / "g.jsonl"
    for seed in range(5):
        assert run(["gen", "--seed", str(seed), "--steps", "30", "--accounts", "3", "--tokens", "4", "-o", str(path)]) == 0
        assert run(["replay", str(path)]) == 0
    capsys.readouterr()


def test_gen_config_file(files, capsys):
    cfg = files("cfg.json", {"seed": 1, "n_steps": 3, "amount_range": ["1/2", "10"]})
    code, out = run_json(capsys, ["gen", "--config", cfg])
    assert code == 0
    assert len(out.out.splitlines()) == 4
    assert run(["gen", "--config", files("bad.json", {"n_tokens": 1})]) == 2


def test_gen_stalled(files, capsys):
    cfg = files("cfg.json", {"n_steps": 1, "tx_weights": {"swap": 1}, "max_retries": 5})
    code, out = run_json(capsys, ["gen", "--config", cfg])
    assert code == 1
    assert json.loads(out.err)["error"] == "GenerationStalled"


def test_check_trace_file(files, capsys):
    code, out = run_json(capsys, ["check", "--trace", files("t.jsonl", EXAMPLE_TRACE)])
    assert code == 0
    lines = out.out.splitlines()
    assert json.loads(lines[0]) == {"states_checked": 3, "violations": []}
    assert lines[1].startswith("OK")


def test_check_reports_violation(files, capsys):
    rows = [{"atoms": {"0": {"0": "1"}}, "mints": {}, "amms": {"0-1": ["1", "1"]}}]
    code, out = run_json(capsys, ["check", "--trace", files("t.jsonl", rows)])
    assert code == 1
    assert json.loads(out.err)["error"] == "PropertyViolation"


def test_check_generated_parallel(capsys):
    code, out = run_json(capsys, ["check", "--traces", "4", "--jobs", "2", "--steps", "20"])
    assert code == 0
    assert json.loads(out.out.splitlines()[0])["states_checked"] == 4 * 21


def test_lemmas(files, capsys):
    code, out = run_json(capsys, ["lemmas", "--traces", "2", "--steps", "10", "--grid", "100"])
    assert code == 0
    code, out = run_json(capsys, ["lemmas", "--steps", "10", "--grid", "100", "--oracle", files("o.json", {"prices": {"0": "1", "1": "2", "2": "3"}})])
    assert code == 0
    assert run_json(capsys, ["lemmas", "--grid", "1"])[0] == 2


@pytest.mark.parametrize("argv", [[], ["bogus"], ["replay"], ["gen", "--steps", "x"], ["--decimals", "-1", "gen"]])
def test_usage_errors(argv, capsys):
    assert run(argv) == 2


def test_module_entry_point(files):
    proc = subprocess.run(
        [sys.executable, "-m", "cpamm", "replay", files("t.jsonl", EXAMPLE_TRACE)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["final"]["amms"]["0-1"] == ["9/1", "12/1"]
