import csv
import io
import json
import subprocess
import sys

import pytest

from gausshardy.cli import build_parser, main
from gausshardy.experiments import SUBCOMMANDS


def _run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_every_subcommand_has_a_parser():
    parser = build_parser()
    for name, actions in SUBCOMMANDS.items():
        for action in actions:
            ns = parser.parse_args([name, action])
            assert (ns.subcommand, ns.action) == (name, action)


def test_json_round_trip(capsys):
    code, out, err = _run(["mehler", "check"], capsys)
    assert code == 0 and "done in" in err
    data = json.loads(out)
    assert data["experiment"] == "mehler check"
    assert data["meta"]["partial"] is False and "runtime_ms" not in data["meta"]
    assert data["meta"]["max_relative_discrepancy"] < 1e-10
    assert all(r["relative_discrepancy"] < 1e-10 for r in data["rows"])


def test_timing_flag(capsys):
    code, out, _ = _run(["mehler", "stochastic", "--timing"], capsys)
    assert code == 0 and json.loads(out)["meta"]["runtime_ms"] >= 0


def test_csv_output(tmp_path, capsys):
    path = tmp_path / "ex.csv"
    assert _run(["tree", "exactness", "--format", "csv", "--out", str(path)], capsys)[0] == 0
    raw = path.read_bytes()
    assert b"\r\n" not in raw and raw.endswith(b"\n")
    rows = list(csv.DictReader(io.StringIO(raw.decode())))
    assert {"kernel", "quantity", "direct", "reorganized", "rel_diff"} <= set(rows[0])
    assert max(float(r["rel_diff"]) for r in rows) < 1e-12


@pytest.mark.parametrize("argv", [
    ["tree", "sums", "--kernel", "bogus"],
    ["impow", "kernel", "--r", "-1"],
    ["mehler", "check", "--threads", "0"],
])
def test_invalid_parameters_exit_2(argv, capsys):
    code, out, err = _run(argv, capsys)
    assert code == 2 and out == "" and "invalid parameters" in err


def test_argparse_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["mehler", "nonsense"])
    assert exc.value.code == 2
    capsys.readouterr()


def test_unwritable_output_exit_1(tmp_path, capsys):
    target = tmp_path / "missing" / "out.json"
    code, _, err = _run(["mehler", "stochastic", "--out", str(target)], capsys)
    assert code == 1 and "cannot write" in err


def test_convergence_failure_exit_3(capsys):
    code, out, err = _run(["iinf", "scan", "--kernel", "mehler", "--tol", "1e-17"], capsys)
    assert code == 3 and "did not converge" in err
    data = json.loads(out)
    assert data["meta"]["partial"] is True


@pytest.mark.parametrize("argv", [
    ["impow", "kernel"],
    ["tree", "equivalence"],
    ["hardy", "bmo", "--grid", "41"],
    ["isoperimetric", "shell"],
])
def test_thread_count_does_not_change_bytes(argv, tmp_path, capsys):
    blobs = []
    for threads in ("1", "8"):
        path = tmp_path / f"out{threads}.json"
        assert _run(argv + ["--threads", threads, "--out", str(path)], capsys)[0] == 0
        blobs.append(path.read_bytes())
    assert blobs[0] == blobs[1]


def test_thread_env_variable(tmp_path):
    def run(env_threads):
        env = {"GAUSSHARDY_THREADS": env_threads, "PATH": "/usr/bin:/bin"}
        return subprocess.run([sys.executable, "-m", "gausshardy.cli", "tree", "sums"],
                              capture_output=True, env=env, timeout=300)
    one, eight, bad = run("1"), run("8"), run("-2")
    assert one.returncode == eight.returncode == 0
    assert one.stdout == eight.stdout
    assert bad.returncode == 2
