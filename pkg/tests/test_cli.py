"""The polis command line: argument wiring, exit codes, and the
simulate / analyze / replay pipeline driven through main()."""

import json

import pytest

from polis.cli import build_parser, main
from polis.logio import read_log


# -- parser wiring ----------------------------------------------------------


def test_parser_knows_all_four_verbs():
    parser = build_parser()
    for argv in (
        ["simulate", "c_star", "--out", "x"],
        ["evolve", "--out", "x"],
        ["analyze", "some.jsonl"],
        ["replay", "some.jsonl"],
    ):
        args = parser.parse_args(argv)
        assert args.command == argv[0]


def test_simulate_defaults():
    args = build_parser().parse_args(["simulate", "hhh", "--out", "logs"])
    assert args.constitution == "hhh"
    assert args.episodes == 30
    assert args.seed == 42
    assert args.label is None


def test_evolve_defaults():
    args = build_parser().parse_args(["evolve", "--out", "run"])
    assert args.mutator == "mock"
    assert args.initial is None
    assert not args.no_episode_logs


def test_missing_command_is_a_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        build_parser().parse_args([])
    assert exc.value.code == 2


def test_simulate_requires_an_output_directory():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["simulate", "c_star"])


def test_unknown_mutator_is_a_usage_error():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["evolve", "--out", "x", "--mutator", "quantum"])


# -- the pipeline through main() --------------------------------------------


@pytest.fixture(scope="module")
def simulated(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli-logs")
    code = main(
        ["simulate", "c_star", "--episodes", "3", "--seed", "400", "--out", str(out)]
    )
    assert code == 0
    return out


def test_simulate_reports_and_writes_logs(simulated, capsys):
    code = main(
        [
            "simulate",
            "hhh",
            "--episodes",
            "2",
            "--seed",
            "400",
            "--out",
            str(simulated),
        ]
    )
    captured = capsys.readouterr()
    assert code == 0
    assert "hhh: 2 episodes" in captured.out
    assert "mean score" in captured.out
    assert len(list(simulated.glob("hhh-*.jsonl"))) == 2


def test_analyze_prints_the_report(simulated, capsys, tmp_path):
    code = main(["analyze", str(simulated), "--out", str(tmp_path)])
    captured = capsys.readouterr()
    assert code == 0
    assert "Score by constitution" in captured.out
    assert f"report written to {tmp_path}" in captured.out
    payload = json.loads((tmp_path / "report.json").read_text())
    assert "c_star" in payload["labels"]


def test_replay_verifies_the_batch(simulated, capsys):
    code = main(["replay", str(simulated)])
    captured = capsys.readouterr()
    assert code == 0
    assert "FAIL" not in captured.out
    lines = [l for l in captured.out.splitlines() if l.startswith("ok")]
    assert len(lines) == len(list(simulated.glob("*.jsonl")))


def test_replay_fails_loudly_on_a_tampered_log(simulated, tmp_path, capsys):
    source = sorted(simulated.glob("c_star-*.jsonl"))[0]
    text = source.read_text()
    assert '"GATHER"' in text
    (tmp_path / "bad.jsonl").write_text(
        text.replace('"GATHER"', '"REST"', 1), encoding="utf-8"
    )
    code = main(["replay", str(tmp_path / "bad.jsonl")])
    captured = capsys.readouterr()
    assert code == 1
    assert "FAIL" in captured.out
    assert "0/1 logs verified" in captured.out


def test_evolve_runs_end_to_end(tmp_path, capsys):
    out = tmp_path / "run"
    code = main(
        [
            "evolve",
            "--out",
            str(out),
            "--iterations",
            "2",
            "--seed",
            "7",
            "--initial",
            "c_star",
            "--no-episode-logs",
        ]
    )
    captured = capsys.readouterr()
    assert code == 0
    assert "best g" in captured.out or "best c_star" in captured.out
    assert (out / "best.yaml").exists()
    best = json.loads((out / "best.json").read_text())
    assert best["iterations_run"] <= 2
    assert not (out / "episodes").exists()


def test_simulate_config_world_section_applies(tmp_path):
    config = tmp_path / "run.yaml"
    config.write_text("world:\n  horizon: 12\n  overseer_interval: 6\n")
    out = tmp_path / "logs"
    code = main(
        [
            "simulate",
            "zero_sum",
            "--episodes",
            "1",
            "--seed",
            "9",
            "--out",
            str(out),
            "--config",
            str(config),
        ]
    )
    assert code == 0
    (path,) = out.glob("*.jsonl")
    log = read_log(str(path)).log
    assert log.config.horizon == 12
    assert len(log.turns) == 12


# -- exit codes -------------------------------------------------------------


def test_bad_constitution_name_exits_2(tmp_path, capsys):
    code = main(["simulate", "not_a_baseline", "--out", str(tmp_path)])
    captured = capsys.readouterr()
    assert code == 2
    assert "error:" in captured.err


def test_bad_config_file_exits_2(tmp_path, capsys):
    config = tmp_path / "run.yaml"
    config.write_text("mystery:\n  x: 1\n")
    code = main(
        ["simulate", "c_star", "--out", str(tmp_path / "logs"), "--config", str(config)]
    )
    assert code == 2
    assert "unknown sections" in capsys.readouterr().err


def test_missing_log_path_exits_2(tmp_path, capsys):
    code = main(["replay", str(tmp_path / "nothing.jsonl")])
    assert code == 2
    assert "no such log path" in capsys.readouterr().err


def test_unwritable_output_exits_1(tmp_path, capsys):
    blocker = tmp_path / "blocker"
    blocker.write_text("a file, not a directory")
    code = main(
        ["simulate", "c_star", "--episodes", "1", "--out", str(blocker)]
    )
    assert code == 1
    assert "error:" in capsys.readouterr().err
