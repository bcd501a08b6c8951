"""Command-line behavior: exit codes, determinism, manifests, replay."""

import json
import re

import numpy as np
import pytest

from eccrng.bitio import load_manifest, manifest_path_for, read_bit_file
from eccrng.cli import main
from eccrng.stats import parse_report


def run(*argv):
    return main(list(argv))


def test_generate_is_deterministic(tmp_path):
    a = tmp_path / "a.bits"
    b = tmp_path / "b.bits"
    assert run("generate", "--preset", "data-b", "--bits", "10000", "--seed", "7",
               "--output", str(a)) == 0
    assert run("generate", "--preset", "data-b", "--bits", "10000", "--seed", "7",
               "--output", str(b)) == 0
    assert a.read_bytes() == b.read_bytes()
    bits = read_bit_file(str(a), bit_count=10000)
    assert bits.size == 10000
    assert float(bits.mean()) == pytest.approx(0.276, abs=0.02)


def test_generate_source_flags_are_exclusive(tmp_path):
    out = str(tmp_path / "x.bits")
    assert run("generate", "--bits", "10", "--output", out) == 1
    assert run("generate", "--preset", "data-a", "--bernoulli", "0.5",
               "--bits", "10", "--output", out) == 1
    assert run("generate", "--bernoulli", "1.5", "--bits", "10", "--output", out) == 1


def test_generate_markov_and_current_sources(tmp_path):
    out = tmp_path / "m.bits"
    assert run("generate", "--markov", "0.5,0.2", "--bits", "5000",
               "--output", str(out)) == 0
    assert read_bit_file(str(out), bit_count=5000).size == 5000
    assert run("generate", "--markov", "0.9,-0.5", "--bits", "10",
               "--output", str(out)) == 1  # infeasible pair
    out2 = tmp_path / "c.bits"
    assert run("generate", "--current", "100", "--t-write", "30",
               "--bits", "5000", "--output", str(out2)) == 0
    bits = read_bit_file(str(out2), bit_count=5000)
    assert float(bits.mean()) == pytest.approx(0.5, abs=0.03)


def test_seed_env_var_is_default_flag_wins(tmp_path, monkeypatch):
    env_file = tmp_path / "env.bits"
    flag_file = tmp_path / "flag.bits"
    explicit = tmp_path / "explicit.bits"
    monkeypatch.setenv("ECCRNG_SEED", "55")
    assert run("generate", "--bernoulli", "0.5", "--bits", "4000",
               "--output", str(env_file)) == 0
    assert run("generate", "--bernoulli", "0.5", "--bits", "4000", "--seed", "3",
               "--output", str(flag_file)) == 0
    monkeypatch.delenv("ECCRNG_SEED")
    assert run("generate", "--bernoulli", "0.5", "--bits", "4000", "--seed", "55",
               "--output", str(explicit)) == 0
    assert env_file.read_bytes() == explicit.read_bytes()
    assert flag_file.read_bytes() != env_file.read_bytes()


def test_seed_env_var_must_be_integer(tmp_path, monkeypatch):
    monkeypatch.setenv("ECCRNG_SEED", "pi")
    assert run("generate", "--bernoulli", "0.5", "--bits", "10",
               "--output", str(tmp_path / "x.bits")) == 1


def test_postprocess_pipeline_and_order(tmp_path):
    raw = tmp_path / "raw.bits"
    assert run("generate", "--bernoulli", "0.5", "--bits", "9920", "--seed", "1",
               "--output", str(raw)) == 0
    out1 = tmp_path / "le.bits"
    assert run("postprocess", str(raw), "--lfsr", "3,1,0", "--ecc", "31,16,3",
               "--output", str(out1)) == 0
    m1 = load_manifest(manifest_path_for(str(out1)))
    assert m1.output_bits == (9920 // 31) * 16
    assert m1.params["stages"] == ["lfsr(3,1,0)", "ecc(31,16,3)"]

    out2 = tmp_path / "el.bits"
    assert run("postprocess", str(raw), "--ecc", "31,16,3", "--lfsr", "3,1,0",
               "--output", str(out2)) == 0
    m2 = load_manifest(manifest_path_for(str(out2)))
    assert m2.params["stages"] == ["ecc(31,16,3)", "lfsr(3,1,0)"]
    assert out1.read_bytes() != out2.read_bytes()  # order matters


def test_postprocess_requires_stages_and_known_codes(tmp_path):
    raw = tmp_path / "raw.bits"
    run("generate", "--bernoulli", "0.5", "--bits", "1000", "--seed", "1",
        "--output", str(raw))
    assert run("postprocess", str(raw), "--output", str(tmp_path / "o.bits")) == 1
    assert run("postprocess", str(raw), "--ecc", "33,11,2",
               "--output", str(tmp_path / "o.bits")) == 1
    assert run("postprocess", str(raw), "--lfsr", "banana",
               "--output", str(tmp_path / "o.bits")) == 1


def test_postprocess_rejection_stage(tmp_path):
    raw = tmp_path / "raw.bits"
    run("generate", "--bernoulli", "0.276", "--bits", "20000", "--seed", "2",
        "--output", str(raw))
    out = tmp_path / "vn.bits"
    assert run("postprocess", str(raw), "--rejection", "--output", str(out)) == 0
    m = load_manifest(manifest_path_for(str(out)))
    assert m.params["stages"] == ["rejection"]
    assert 0.15 < m.output_bits / 20000 < 0.25


def test_missing_input_is_io_error(tmp_path):
    assert run("postprocess", str(tmp_path / "nope.bits"), "--rejection",
               "--output", str(tmp_path / "o.bits")) == 2
    assert run("test", str(tmp_path / "nope.bits")) == 2


def test_unwritable_output_is_io_error(tmp_path):
    raw = tmp_path / "raw.bits"
    run("generate", "--bernoulli", "0.5", "--bits", "1000", "--seed", "1",
        "--output", str(raw))
    assert run("postprocess", str(raw), "--rejection",
               "--output", str(tmp_path / "no" / "dir" / "o.bits")) == 2


def test_battery_command_exit_codes(tmp_path, capsys):
    raw = tmp_path / "biased.bits"
    run("generate", "--preset", "data-b", "--bits", "150000", "--seed", "3",
        "--output", str(raw))
    # too short without the override
    assert run("test", str(raw)) == 1
    assert run("test", str(raw), "--allow-short") == 3  # biased stream fails
    report = parse_report((tmp_path / "biased.bits.report").read_text())
    assert report["verdict"] == "Fail"

    clean = tmp_path / "clean.bits"
    run("postprocess", str(raw), "--lfsr", "3,1,0", "--ecc", "31,16,3",
        "--output", str(clean))
    capsys.readouterr()
    assert run("test", str(clean), "--allow-short") == 0
    out = capsys.readouterr().out
    assert "verdict Pass" in out
    report = parse_report((tmp_path / "clean.bits.report").read_text())
    assert report["verdict"] == "Pass"
    assert report["test_count"] == 9


def test_battery_report_path_and_manifest(tmp_path):
    raw = tmp_path / "r.bits"
    run("generate", "--bernoulli", "0.5", "--bits", "120000", "--seed", "9",
        "--output", str(raw))
    report_path = tmp_path / "custom.report"
    assert run("test", str(raw), "--allow-short", "--report", str(report_path)) in (0, 3)
    assert report_path.exists()
    m = load_manifest(manifest_path_for(str(report_path)))
    assert m.command == "test"
    assert m.input_path == str(raw)


def test_battery_rejects_bad_alpha(tmp_path):
    raw = tmp_path / "r.bits"
    run("generate", "--bernoulli", "0.5", "--bits", "2000", "--seed", "9",
        "--output", str(raw))
    assert run("test", str(raw), "--allow-short", "--alpha", "2.0") == 1


def test_speed_table(capsys):
    assert run("speed", "--read-ns", "10", "--clocks-per-bit", "4") == 0
    out = capsys.readouterr().out
    assert "estimated_mhz 25" in out
    assert re.search(r"rtn-reference-a\s+2\b", out)
    assert re.search(r"rtn-reference-b\s+0\.2\b", out)
    assert run("speed", "--read-ns", "0") == 1
    assert run("speed", "--clocks-per-bit", "0") == 1


def test_calibrate_command(tmp_path, capsys):
    assert run("calibrate", "--t-write", "30", "--target", "0.276") == 0
    out = capsys.readouterr().out
    current = float(re.search(r"current_ua ([-\d.]+)", out).group(1))
    prob = float(re.search(r"curve_probability ([\d.]+)", out).group(1))
    assert prob == pytest.approx(0.276, abs=1e-6)
    assert current < 100.0  # below the 30 ns midpoint for a sub-half target
    artifact = tmp_path / "cal.txt"
    assert run("calibrate", "--empirical", "--target", "0.5",
               "--output", str(artifact)) == 0
    assert artifact.exists()
    assert run("calibrate", "--t-write", "17") == 1  # no such model


def test_bench_self_check_and_shares(tmp_path, capsys):
    out_file = tmp_path / "bench.txt"
    assert run("bench", "--bits", "50000", "--output", str(out_file)) == 0
    text = capsys.readouterr().out
    assert "routes_agree=true" in text
    shares = [float(s) for s in re.findall(r"share=([\d.]+)%", text)]
    assert shares and sum(shares) <= 100.5
    assert "throughput_mbit_s" in text
    assert out_file.read_text() == text


def test_bench_rejects_bad_source():
    assert run("bench", "--bits", "100", "--source", "quantum:1") == 1


def test_manifest_replay_reproduces_bytes(tmp_path, monkeypatch):
    first = tmp_path / "one"
    second = tmp_path / "two"
    first.mkdir()
    second.mkdir()
    monkeypatch.chdir(first)
    assert run("generate", "--preset", "data-c", "--bits", "30000", "--seed", "5",
               "--output", "cap.bits") == 0
    argv = json.loads((first / "cap.bits.manifest.json").read_text())["argv"]
    monkeypatch.chdir(second)
    assert run(*argv) == 0
    assert (first / "cap.bits").read_bytes() == (second / "cap.bits").read_bytes()


def test_ascii_encoding_flows_through(tmp_path):
    raw = tmp_path / "a.txt"
    assert run("generate", "--bernoulli", "0.5", "--bits", "600", "--seed", "8",
               "--encoding", "ascii", "--output", str(raw)) == 0
    text = raw.read_text()
    assert set(text) <= {"0", "1", "\n"}
    out = tmp_path / "b.bits"
    # encoding is sniffed (and recorded in the manifest) on the way back in
    assert run("postprocess", str(raw), "--lfsr", "2,1,0", "--output", str(out)) == 0
    m = load_manifest(manifest_path_for(str(out)))
    assert m.params["input_encoding"] == "ascii"
    assert m.output_bits == 600
