"""Battery tests: frozen reference P-values, cross-library checks, verdict rules."""

import math

import numpy as np
import pytest

import mpmath as mp
from scipy.special import erfc, gammaincc

from eccrng.source import bernoulli_stream
from eccrng.stats import (
    EmptyBatteryError,
    approximate_entropy_test,
    block_frequency_test,
    cumulative_sums_test,
    longest_run_test,
    monobit_test,
    parse_report,
    render_report,
    run_battery,
    runs_test,
    serial_test,
    spectral_test,
)

mp.mp.dps = 30


# --- reference vectors (10-bit textbook examples, frozen from a 30-digit
# mpmath evaluation of the published formulas) ---

def test_monobit_reference_vector():
    r = monobit_test("1011010101", min_length=10)
    assert r.p_values[0] == pytest.approx(0.527089256866, rel=1e-9)
    assert r.passed


def test_runs_reference_vector():
    r = runs_test("1001101011", min_length=10)
    assert r.p_values[0] == pytest.approx(0.147232255364, rel=1e-9)
    assert r.params["v"] == 7


def test_block_frequency_reference_vector():
    r = block_frequency_test("0110011010", block_size=3, min_length=10)
    assert r.p_values[0] == pytest.approx(0.801251956901, rel=1e-9)


# --- special functions against an independent high-precision route ---

def test_erfc_matches_mpmath():
    for x in np.linspace(0.05, 6.0, 24):
        want = float(mp.erfc(mp.mpf(float(x))))
        assert erfc(x) == pytest.approx(want, rel=1e-10)


def test_gammaincc_matches_mpmath():
    for a in (0.5, 1.0, 1.5, 2.0, 4.0, 8.0):
        for x in (0.05, 0.3, 1.0, 2.5, 7.0, 15.0):
            want = float(mp.gammainc(a, x, mp.inf, regularized=True))
            assert gammaincc(a, x) == pytest.approx(want, rel=1e-10)


# --- structural behavior on crafted inputs ---

def test_monobit_alternating_is_perfectly_balanced():
    r = monobit_test("10" * 100)
    assert r.p_values[0] == 1.0


def test_runs_rejects_alternating():
    r = runs_test("10" * 100)
    assert r.p_values[0] < 1e-12
    assert r.passed is False


def test_runs_precondition_short_circuits():
    bits = np.concatenate([np.ones(180, dtype=np.uint8), np.zeros(20, dtype=np.uint8)])
    r = runs_test(bits)
    assert r.p_values == (0.0,)
    assert r.passed is False
    assert r.params["precondition_failed"]


def test_serial_uniform_patterns_score_one():
    # all four overlapping 2-bit patterns appear equally often
    r = serial_test("0011" * 64)
    assert r.p_values == (1.0, 1.0)


def test_approximate_entropy_catches_periodicity():
    r = approximate_entropy_test("0011" * 64)
    assert r.p_values[0] < 1e-12


def test_spectral_catches_periodicity():
    r = spectral_test("10" * 1000)
    assert r.p_values[0] < 0.01
    assert r.passed is False


def test_cumulative_sums_forward_backward_agree_on_palindrome():
    bits = "0110100110010110"  # reads the same reversed
    f = cumulative_sums_test(bits, min_length=16)
    b = cumulative_sums_test(bits, reverse=True, min_length=16)
    assert f.p_values == b.p_values


def test_cumulative_sums_matches_mpmath_route():
    bits = bernoulli_stream(0.5, 77, 2000)
    r = cumulative_sums_test(bits)
    x = bits.astype(np.int64) * 2 - 1
    z = int(np.abs(np.cumsum(x)).max())
    n = bits.size
    sq = mp.sqrt(n)
    phi = lambda v: mp.ncdf(v)
    t1 = mp.mpf(0)
    for k in range(math.floor((-n / z + 1) / 4), math.floor((n / z - 1) / 4) + 1):
        t1 += phi((4 * k + 1) * z / sq) - phi((4 * k - 1) * z / sq)
    t2 = mp.mpf(0)
    for k in range(math.floor((-n / z - 3) / 4), math.floor((n / z - 1) / 4) + 1):
        t2 += phi((4 * k + 3) * z / sq) - phi((4 * k + 1) * z / sq)
    want = float(1 - t1 + t2)
    assert r.p_values[0] == pytest.approx(want, rel=1e-9)


def test_longest_run_chi_square_matches_hand_binning():
    # 16 blocks of 8: half all-ones (longest run 8 -> top class), half
    # alternating (longest run 1 -> bottom class)
    blocks = ["11111111"] * 8 + ["01010101"] * 8
    bits = "".join(blocks)
    r = longest_run_test(bits)
    assert r.params["block_size"] == 8
    probs = (0.2148, 0.3672, 0.2305, 0.1875)
    counts = (8.0, 0.0, 0.0, 8.0)
    chi2 = sum((c - 16 * p) ** 2 / (16 * p) for c, p in zip(counts, probs))
    want = float(mp.gammainc(mp.mpf(3) / 2, chi2 / 2, mp.inf, regularized=True))
    assert r.p_values[0] == pytest.approx(want, rel=1e-9)


def test_longest_run_tier_selection():
    rng = np.random.default_rng(8)
    assert longest_run_test(rng.integers(0, 2, 128, dtype=np.uint8)).params["block_size"] == 8
    assert longest_run_test(rng.integers(0, 2, 6272, dtype=np.uint8)).params["block_size"] == 128
    assert (
        longest_run_test(rng.integers(0, 2, 750_000, dtype=np.uint8)).params["block_size"]
        == 10_000
    )


def test_serial_validates_pattern_length():
    with pytest.raises(ValueError):
        serial_test("01" * 100, pattern_length=1)
    with pytest.raises(ValueError):
        approximate_entropy_test("01" * 100, pattern_length=0)


def test_short_input_skips():
    r = monobit_test(np.zeros(50, dtype=np.uint8))
    assert r.skipped
    assert r.p_values == ()
    assert "50" in r.skip_reason


def test_block_frequency_rejects_bad_block_size():
    with pytest.raises(ValueError):
        block_frequency_test("01" * 100, block_size=0)


# --- battery verdict and report plumbing ---

def test_battery_shape_and_verdict_on_good_bits():
    bits = bernoulli_stream(0.5, 99, 200_000)
    report = run_battery(bits)
    names = [r.test_name for r in report.results]
    assert names == [
        "monobit",
        "block_frequency",
        "runs",
        "longest_run",
        "cumulative_sums_forward",
        "cumulative_sums_backward",
        "serial",
        "approximate_entropy",
        "spectral",
    ]
    assert report.input_bits == 200_000
    assert report.verdict == "Pass"
    assert report.failure_count <= 2
    assert report.passed


def test_battery_counting_rule():
    bits = bernoulli_stream(0.4, 100, 200_000)  # grossly biased
    strict = run_battery(bits)
    assert strict.failure_count > 2
    assert strict.verdict == "Fail"
    lenient = run_battery(bits, fail_threshold=9)
    assert lenient.failure_count == strict.failure_count
    assert lenient.verdict == "Pass"


def test_battery_validation():
    bits = bernoulli_stream(0.5, 1, 5000)
    with pytest.raises(ValueError):
        run_battery(bits, alpha=0.0)
    with pytest.raises(ValueError):
        run_battery(bits, fail_threshold=-1)


def test_battery_skips_are_neither_pass_nor_fail():
    # 120 bits: runs the short-input tests, skips the ones needing more
    bits = bernoulli_stream(0.5, 2, 120)
    report = run_battery(bits)
    skipped = {r.test_name for r in report.results if r.skipped}
    assert skipped == {"block_frequency", "longest_run", "spectral"}
    ran = {r.test_name for r in report.results if not r.skipped}
    assert "monobit" in ran and "serial" in ran


def test_battery_empty_raises():
    with pytest.raises(EmptyBatteryError):
        run_battery(np.ones(10, dtype=np.uint8))


def test_report_round_trip():
    bits = bernoulli_stream(0.5, 3, 131_072)
    report = run_battery(bits)
    text = render_report(report)
    meta = parse_report(text)
    assert meta["battery_report_version"] == "1"
    assert meta["input_bits"] == report.input_bits
    assert meta["alpha"] == report.alpha
    assert meta["failure_count"] == report.failure_count
    assert meta["p_value_failures"] == report.p_value_failures
    assert meta["verdict"] == report.verdict
    assert len(meta["tests"]) == len(report.results)
    for rec, r in zip(meta["tests"], report.results):
        assert rec["test_name"] == r.test_name
        assert rec["passed"] == r.passed
        assert rec["p_values"] == pytest.approx(list(r.p_values), rel=1e-4)


def test_report_records_skips():
    report = run_battery(bernoulli_stream(0.5, 4, 500))
    meta = parse_report(render_report(report))
    skipped = [t for t in meta["tests"] if t["skipped"]]
    assert skipped
    for t in skipped:
        assert "p_values" not in t
