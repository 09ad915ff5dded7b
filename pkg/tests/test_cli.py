"""End-to-end CLI behaviour: outputs, exit codes, manifests, replay."""

import csv

import numpy as np
import pytest

from tickrng.cli import main
from tickrng.formats import read_bits, read_events, read_manifest


def run(capsys, *argv) -> tuple[int, str, str]:
    rc = main(list(argv))
    captured = capsys.readouterr()
    return rc, captured.out, captured.err


# ------------------------------------------------------------------- bias


def test_bias_zero_intensity_is_fair(capsys):
    rc, out, _ = run(capsys, "bias", "--dist", "poisson", "--mu-eta", "0")
    assert rc == 0
    lines = dict(line.split(None, 1) for line in out.strip().splitlines())
    assert lines["P_EVEN"] == "0.500000"
    assert lines["P_ODD"] == "0.500000"
    assert lines["predicted_balance"] == "1.000000"


def test_bias_thermal_closed_form(capsys):
    rc, out, _ = run(capsys, "bias", "--dist", "thermal", "--mu-eta", "0.5")
    assert rc == 0
    lines = dict(line.split(None, 1) for line in out.strip().splitlines())
    assert lines["P_EVEN"] == "0.400000"  # 1 / (mu*eta + 2)


def test_bias_monte_carlo_agrees_with_the_analytic_split(capsys):
    rc, out, _ = run(
        capsys, "bias", "--dist", "thermal", "--mu-eta", "0.5",
        "--mc-events", "20000", "--seed", "5",
    )
    assert rc == 0
    lines = dict(line.split(None, 1) for line in out.strip().splitlines())
    assert abs(float(lines["mc_even_fraction"]) - 0.4) < 3 * (0.4 * 0.6 / 20000) ** 0.5
    assert lines["mc_seed"] == "5"


def test_bias_requires_exactly_one_intensity(capsys):
    rc, _, err = run(capsys, "bias", "--dist", "poisson")
    assert rc == 1
    assert "usage error" in err
    rc, _, err = run(capsys, "bias", "--mu", "1.0", "--mu-eta", "0.5")
    assert rc == 1


# --------------------------------------------------------------- simulate


def test_simulate_writes_events_and_manifest(capsys, tmp_path):
    out = tmp_path / "events.txt"
    rc, stdout, _ = run(
        capsys, "simulate", "--mu", "0.5", "--events", "1000", "--seed", "42",
        "--out", str(out),
    )
    assert rc == 0
    assert "wrote 1000 events" in stdout
    stream = read_events(out)
    assert len(stream) == 1000
    manifest = read_manifest(tmp_path / "events.txt.manifest.json")
    assert manifest.subcommand == "simulate"
    assert manifest.generator["algorithm"] == "PCG64"
    assert manifest.generator["seed"] == 42
    assert manifest.parameters["mu"] == 0.5
    assert "first_interval" in manifest.conventions


def test_simulate_guard_error_exits_two(capsys, tmp_path):
    rc, _, err = run(
        capsys, "simulate", "--mu", "0", "--events", "10", "--out", str(tmp_path / "x"),
    )
    assert rc == 2
    assert "error" in err


def test_simulate_bad_profile_is_a_usage_error(capsys, tmp_path):
    rc, _, err = run(
        capsys, "simulate", "--mode", "gated", "--slots-per-gate", "2",
        "--profile", "sometimes", "--mu", "0.5", "--events", "10",
        "--out", str(tmp_path / "x"),
    )
    assert rc == 1
    assert "usage error" in err


# ---------------------------------------------------------------- extract


def test_extract_hand_example(capsys, tmp_path):
    events = tmp_path / "events.txt"
    events.write_text("3\n5\n10\n")
    out = tmp_path / "bits.txt"
    rc, stdout, _ = run(capsys, "extract", "--events", str(events), "--out", str(out))
    assert rc == 0
    assert "wrote 3 bits" in stdout
    assert out.read_text() == "101\n"


def test_extract_missing_file_exits_two(capsys, tmp_path):
    rc, _, err = run(
        capsys, "extract", "--events", str(tmp_path / "absent.txt"),
        "--out", str(tmp_path / "bits.txt"),
    )
    assert rc == 2
    assert "data error" in err


def test_extract_corrupt_file_names_the_line(capsys, tmp_path):
    events = tmp_path / "events.txt"
    events.write_text("5\n3\n")
    rc, _, err = run(
        capsys, "extract", "--events", str(events), "--out", str(tmp_path / "bits.txt"),
    )
    assert rc == 2
    assert "line 2" in err


def test_extract_mod4_interleaves_basis_then_key(capsys, tmp_path):
    events = tmp_path / "events.txt"
    events.write_text("1\n2\n9\n")  # intervals 1, 1, 7 -> pairs (0,1) (0,1) (1,1)
    out = tmp_path / "pairs.txt"
    rc, _, _ = run(
        capsys, "extract", "--events", str(events), "--modulus", "mod4", "--out", str(out),
    )
    assert rc == 0
    assert out.read_text() == "010111\n"


def test_extract_binary_events_round_trip(capsys, tmp_path):
    events = tmp_path / "events.bin"
    rc, _, _ = run(
        capsys, "simulate", "--mu", "0.7", "--events", "500", "--seed", "8",
        "--format", "binary", "--out", str(events),
    )
    assert rc == 0
    out = tmp_path / "bits.bin"
    rc, _, _ = run(
        capsys, "extract", "--events", str(events), "--events-format", "binary",
        "--bits-format", "packed", "--out", str(out),
    )
    assert rc == 0
    assert len(read_bits(out, fmt="packed")) == 500


# ------------------------------------------------------------------- test


def test_battery_on_all_zeros_fails_with_exit_three(capsys, tmp_path):
    bits = tmp_path / "zeros.txt"
    bits.write_text("0" * 1_000_000 + "\n")
    report = tmp_path / "report.csv"
    rc, stdout, _ = run(
        capsys, "test", "--bits", str(bits), "--out", str(report),
    )
    assert rc == 3
    assert "Frequency" in stdout
    with report.open() as fh:
        rows = {row["test_id"]: row for row in csv.DictReader(fh)}
    assert rows["Frequency"]["pass"] == "0"
    assert float(rows["Frequency"]["p_value"]) < 0.01


def test_battery_pipeline_passes_on_simulator_output(capsys, tmp_path):
    events = tmp_path / "events.txt"
    bits = tmp_path / "bits.txt"
    report = tmp_path / "report.csv"
    rc, _, _ = run(
        capsys, "simulate", "--mode", "gated", "--slots-per-gate", "2",
        "--mu", "0.5", "--events", "40000", "--seed", "301", "--out", str(events),
    )
    assert rc == 0
    rc, _, _ = run(capsys, "extract", "--events", str(events), "--debias", "--out", str(bits))
    assert rc == 0
    rc, stdout, _ = run(
        capsys, "test", "--bits", str(bits), "--run-len", "20000", "--out", str(report),
    )
    assert rc == 0
    assert "Frequency            pass 2/2" in stdout
    assert "Universal            n/a" in stdout
    with report.open() as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 26  # 13 procedures x 2 runs
    assert {row["test_id"] for row in rows} == {
        "Frequency", "BlockFrequency", "CusumForward", "CusumReverse", "Runs",
        "LongestRuns", "Rank", "DFFT", "Universal", "ApproximateEntropy",
        "Serial1", "Serial2", "LinearComplexity",
    }
    for row in rows:
        if row["p_value"] == "NA":
            assert row["pass"] == "NA"
        else:
            assert (float(row["p_value"]) >= 0.01) == (row["pass"] == "1")


def test_battery_rejects_bad_alpha(capsys, tmp_path):
    bits = tmp_path / "bits.txt"
    bits.write_text("01" * 100 + "\n")
    rc, _, err = run(capsys, "test", "--bits", str(bits), "--alpha", "2", "--run-len", "100")
    assert rc == 1
    assert "usage error" in err


# --------------------------------------------------------------- protocol


def test_protocol_summary_lines(capsys, tmp_path):
    out = tmp_path / "protocol.txt"
    rc, stdout, _ = run(
        capsys, "protocol", "--protocol", "bbm92", "--gates", "20000",
        "--mu", "0.5", "--error", "0.05", "--seed", "9", "--out", str(out),
    )
    assert rc == 0
    values = dict(line.split("=", 1) for line in stdout.strip().splitlines())
    assert values["protocol"] == "bbm92"
    assert values["coincidences"] == values["pair_gates"]  # lossless run
    qber = float(values["qber"])
    assert 0.03 < qber < 0.07
    assert out.read_text() == stdout
    manifest = read_manifest(tmp_path / "protocol.txt.manifest.json")
    assert manifest.subcommand == "protocol"


@pytest.mark.parametrize("name", ["bb84", "bb84-heralded"])
def test_protocol_variants_run(capsys, name):
    rc, stdout, _ = run(
        capsys, "protocol", "--protocol", name, "--gates", "10000",
        "--mu", "0.5", "--seed", "11",
    )
    assert rc == 0
    values = dict(line.split("=", 1) for line in stdout.strip().splitlines())
    assert values["protocol"] == name
    assert int(values["sifted_length"]) <= int(values["coincidences"])


def test_protocol_guard_exits_two(capsys):
    rc, _, err = run(
        capsys, "protocol", "--protocol", "bbm92", "--gates", "100",
        "--mu", "0", "--eta", "0", "--seed", "1",
    )
    assert rc == 2
    assert "error" in err


# -------------------------------------------------------------------- eve


def test_eve_sweep_table(capsys):
    rc, stdout, _ = run(
        capsys, "eve", "--r-values", "1,2", "--events", "20000",
        "--mu", "0.5", "--seed", "7",
    )
    assert rc == 0
    lines = stdout.strip().splitlines()
    assert lines[0] == "slots_per_gate,advantage"
    assert lines[1] == "1,0.500000"
    r2 = float(lines[2].split(",")[1])
    assert abs(r2) < 3 * 0.5 / 20000**0.5


def test_eve_rejects_bad_r_values(capsys):
    rc, _, err = run(capsys, "eve", "--r-values", "1,zero", "--mu", "0.5")
    assert rc == 1
    assert "usage error" in err


# ----------------------------------------------------------------- replay


def test_replay_reproduces_simulate_bit_exactly(capsys, tmp_path):
    first = tmp_path / "a" / "events.txt"
    first.parent.mkdir()
    rc, _, _ = run(
        capsys, "simulate", "--mu", "0.5", "--events", "2000", "--seed", "77",
        "--out", str(first),
    )
    assert rc == 0
    replay_dir = tmp_path / "b"
    rc, stdout, _ = run(
        capsys, "replay", str(first) + ".manifest.json", "--out-dir", str(replay_dir),
    )
    assert rc == 0
    assert (replay_dir / "events.txt").read_bytes() == first.read_bytes()


def test_replay_reproduces_a_whole_pipeline(capsys, tmp_path):
    events = tmp_path / "events.txt"
    bits = tmp_path / "bits.txt"
    run(capsys, "simulate", "--mode", "gated", "--slots-per-gate", "2", "--mu", "0.4",
        "--events", "3000", "--seed", "13", "--out", str(events))
    run(capsys, "extract", "--events", str(events), "--modulus", "mod4", "--debias",
        "--out", str(bits))
    replay_dir = tmp_path / "again"
    rc, _, _ = run(capsys, "replay", str(bits) + ".manifest.json", "--out-dir", str(replay_dir))
    assert rc == 0
    assert (replay_dir / "bits.txt").read_bytes() == bits.read_bytes()


def test_replay_missing_manifest_exits_two(capsys, tmp_path):
    rc, _, err = run(
        capsys, "replay", str(tmp_path / "nope.manifest.json"), "--out-dir", str(tmp_path),
    )
    assert rc == 2


# ------------------------------------------------------------- exit codes


def test_unknown_subcommand_is_a_usage_error(capsys):
    rc, _, err = run(capsys, "frobnicate")
    assert rc == 1
    assert "usage error" in err


def test_missing_subcommand_is_a_usage_error(capsys):
    rc, _, err = run(capsys)
    assert rc == 1


def test_missing_required_argument_is_a_usage_error(capsys, tmp_path):
    rc, _, err = run(capsys, "simulate", "--mu", "0.5", "--out", str(tmp_path / "x"))
    assert rc == 1
    assert "usage error" in err


def test_help_and_version_exit_zero(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--help"])
    assert exc.value.code == 0
    capsys.readouterr()
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0


def test_unwritable_output_exits_two(capsys, tmp_path):
    rc, _, err = run(
        capsys, "simulate", "--mu", "0.5", "--events", "10",
        "--out", str(tmp_path / "missing-dir" / "x.txt"),
    )
    assert rc == 2
    assert "data error" in err
