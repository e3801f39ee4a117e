import json
import subprocess
import sys
from importlib import resources

import jsonschema
import pytest

from photonq import cli

SUBCOMMANDS = [
    "hom", "g2", "double-slit", "bb84", "teleport", "repeater", "ns-gate", "cz-gate",
    "fusion", "cluster-mbqc", "noon-scaling", "squeeze", "micrometer",
]
FAST_ARGS = {
    "g2": ["--shots", "2000"],
    "double-slit": ["--shots", "5000"],
    "bb84": ["--pulses", "5000"],
    "teleport": ["--shots", "5000"],
    "repeater": ["--shots", "5000"],
    "cluster-mbqc": ["--shots", "5"],
    "noon-scaling": ["--repetitions", "50", "--n-max", "3"],
    "squeeze": ["--shots", "500"],
}


def schema():
    text = resources.files("photonq").joinpath("schemas/report.schema.json").read_text()
    return json.loads(text)


def run_to_file(tmp_path, name, argv):
    path = tmp_path / name
    assert cli.main(argv + ["--output", str(path)]) == 0
    return path.read_bytes()


@pytest.mark.parametrize("sub", SUBCOMMANDS)
def test_byte_reproducible_and_schema_valid(sub, tmp_path):
    argv = [sub, "--seed", "7"] + FAST_ARGS.get(sub, [])
    first = run_to_file(tmp_path, "a", argv + ["--format", "json"])
    second = run_to_file(tmp_path, "b", argv + ["--format", "json"])
    assert first == second
    report = json.loads(first)
    jsonschema.validate(report, schema())
    assert report["experiment"] == sub
    assert "wall_time_s" not in report
    csv_a = run_to_file(tmp_path, "c", argv + ["--format", "csv"])
    csv_b = run_to_file(tmp_path, "d", argv + ["--format", "csv"])
    assert csv_a == csv_b
    lines = csv_a.decode().splitlines()
    assert lines[0].startswith("# params") and "," in lines[1]


def test_different_seeds_differ(tmp_path):
    a = run_to_file(tmp_path, "a", ["bb84", "--pulses", "2000", "--seed", "1"])
    b = run_to_file(tmp_path, "b", ["bb84", "--pulses", "2000", "--seed", "2"])
    assert a != b


def test_subprocess_matches_in_process(tmp_path):
    argv = ["repeater", "--shots", "3000", "--seed", "11"]
    out = subprocess.run([sys.executable, "-m", "photonq"] + argv, capture_output=True, check=True).stdout
    assert out == run_to_file(tmp_path, "r", argv)


def test_hom_example_csv(capsys):
    assert cli.main(["hom", "--tau-max", "3", "--tau-steps", "61", "--seed", "7"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[1] == "tau,coincidence"
    rows = [tuple(map(float, line.split(","))) for line in lines[2:]]
    assert len(rows) == 61
    assert abs(dict(rows)[0.0]) < 1e-12
    assert rows[0][1] == pytest.approx(0.5, abs=1e-3)


def test_bb84_example_qber(capsys):
    assert cli.main(["bb84", "--pulses", "100000", "--eve", "intercept-resend", "--seed", "1"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert abs(report["results"]["qber"] - 0.25) < 0.03


def test_timing_is_opt_in(capsys):
    cli.main(["repeater", "--shots", "100", "--timing"])
    report = json.loads(capsys.readouterr().out)
    assert report["wall_time_s"] >= 0
    jsonschema.validate(report, schema())


def test_truncation_residual_reported(capsys):
    cli.main(["g2", "--shots", "100", "--mean", "4", "--cutoff", "10", "--format", "json"])
    report = json.loads(capsys.readouterr().out)
    assert report["truncation"] > 0


def test_catalog(capsys):
    assert cli.main(["list"]) == 0
    catalog = json.loads(capsys.readouterr().out)
    assert [e["name"] for e in catalog] == SUBCOMMANDS
    for entry in catalog:
        assert entry["ref"]
        assert "seed" in entry["parameters"]
        assert entry["parameters"]["seed"]["type"] == "u64"


@pytest.mark.parametrize("sub", SUBCOMMANDS)
def test_help_exits_zero(sub, capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main([sub, "--help"])
    assert exc.value.code == 0


@pytest.mark.parametrize(
    "argv",
    [["nonsense"], ["hom", "--bogus", "1"], ["bb84", "--seed", "-1"], ["bb84", "--seed", str(2**64)],
     ["fusion", "--type", "III"], ["hom", "--shots", "0"]],
)
def test_argument_errors_exit_nonzero(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(argv)
    assert exc.value.code != 0


@pytest.mark.parametrize(
    "argv",
    [["hom", "--tau-c", "0"], ["bb84", "--sample-fraction", "1.5"], ["squeeze", "--r", "3"],
     ["repeater", "--swap-success", "0"], ["micrometer", "--thickness", "-1"]],
)
def test_out_of_range_values_exit_one(argv, capsys):
    assert cli.main(argv) == 1
    assert "error" in capsys.readouterr().err


def test_convergence_error_exit_code(monkeypatch, capsys):
    def boom():
        raise cli.compute.ConvergenceError("no solution")

    monkeypatch.setattr(cli.compute, "solve_ns_coefficients", boom)
    assert cli.main(["ns-gate"]) == 3


def test_max_seed_accepted(tmp_path):
    run_to_file(tmp_path, "s", ["repeater", "--shots", "100", "--seed", str(2**64 - 1)])


def test_mbqc_earlier_runs_do_not_depend_on_shots(capsys):
    cli.main(["cluster-mbqc", "--shots", "3", "--seed", "4"])
    small = json.loads(capsys.readouterr().out)["results"]["outcome_counts"]
    from photonq.compute import mbqc_single_qubit
    from photonq.seeding import run_generator

    runs = ["".join(map(str, mbqc_single_qubit(0.3, 0.7, -0.4, seed=run_generator(4, i)).outcomes)) for i in range(3)]
    assert sum(small.values()) == 3
    assert sorted(runs) == sorted(k for k, v in small.items() for _ in range(v))
