"""Statistical test battery for bit streams (SP 800-22 style).

Eight test families: monobit, block frequency, runs, longest run of ones,
cumulative sums (both directions), serial, approximate entropy, spectral.
Each produces one or more P-values; a test passes when all of its P-values
reach the significance level.  The battery verdict counts failed tests:
Pass means no more than fail_threshold of them failed.  A test whose
preconditions are not met (input too short) is reported as skipped, which
is neither a pass nor a fail.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc, gammaincc, ndtr

__all__ = [
    "EmptyBatteryError",
    "TestResult",
    "BatteryReport",
    "monobit_test",
    "block_frequency_test",
    "runs_test",
    "longest_run_test",
    "cumulative_sums_test",
    "serial_test",
    "approximate_entropy_test",
    "spectral_test",
    "extended_tests",
    "run_battery",
    "render_report",
    "parse_report",
]

DEFAULT_ALPHA = 0.01
DEFAULT_FAIL_THRESHOLD = 2
DEFAULT_BLOCK_SIZE = 128
DEFAULT_PATTERN_LENGTH = 2
BATTERY_MIN_BITS = 1_000_000


class EmptyBatteryError(ValueError):
    """Input too short for every test in the battery."""


@dataclass(frozen=True, eq=False)
class TestResult:
    test_name: str
    p_values: tuple[float, ...]
    passed: bool | None  # None = skipped
    params: dict = field(default_factory=dict)
    skip_reason: str | None = None

    @property
    def skipped(self) -> bool:
        return self.passed is None


def _result(name: str, p_values, alpha: float, params: dict | None = None) -> TestResult:
    pv = tuple(float(max(0.0, min(1.0, p))) for p in p_values)
    return TestResult(name, pv, min(pv) >= alpha, params or {})


def _skip(name: str, reason: str, params: dict | None = None) -> TestResult:
    return TestResult(name, (), None, params or {}, reason)


def _as_bits(bits) -> np.ndarray:
    from .gf2 import as_bit_array

    return as_bit_array(bits)


def monobit_test(bits, alpha: float = DEFAULT_ALPHA, min_length: int = 100) -> TestResult:
    """Overall balance of ones and zeros: P = erfc(|S| / sqrt(2n))."""
    b = _as_bits(bits)
    n = b.size
    if n < min_length:
        return _skip("monobit", f"need at least {min_length} bits, got {n}")
    s = 2 * int(b.sum()) - n
    p = float(erfc(abs(s) / math.sqrt(2.0 * n)))
    return _result("monobit", [p], alpha)


def block_frequency_test(
    bits,
    alpha: float = DEFAULT_ALPHA,
    block_size: int = DEFAULT_BLOCK_SIZE,
    min_length: int = 100,
) -> TestResult:
    """Per-block balance: chi^2 of block ones-fractions against 1/2."""
    if block_size < 1:
        raise ValueError(f"block size must be >= 1, got {block_size}")
    b = _as_bits(bits)
    n = b.size
    params = {"block_size": block_size}
    if n < min_length:
        return _skip("block_frequency", f"need at least {min_length} bits, got {n}", params)
    nblocks = n // block_size
    if nblocks == 0:
        return _skip("block_frequency", f"no complete {block_size}-bit block in {n} bits", params)
    props = b[: nblocks * block_size].reshape(nblocks, block_size).mean(axis=1)
    chi2 = 4.0 * block_size * float(((props - 0.5) ** 2).sum())
    p = float(gammaincc(nblocks / 2.0, chi2 / 2.0))
    return _result("block_frequency", [p], alpha, params)


def runs_test(bits, alpha: float = DEFAULT_ALPHA, min_length: int = 100) -> TestResult:
    """Alternation count against the expectation for the observed bias.

    Applicable only when the ones-fraction is within 2/sqrt(n) of 1/2;
    outside that band the result is a fail with P = 0.
    """
    b = _as_bits(bits)
    n = b.size
    if n < min_length:
        return _skip("runs", f"need at least {min_length} bits, got {n}")
    pi = float(b.mean())
    tau = 2.0 / math.sqrt(n)
    if abs(pi - 0.5) >= tau:
        return TestResult("runs", (0.0,), False, {"precondition_failed": True, "pi": pi})
    v = 1 + int(np.count_nonzero(b[1:] != b[:-1]))
    num = abs(v - 2.0 * n * pi * (1.0 - pi))
    den = 2.0 * math.sqrt(2.0 * n) * pi * (1.0 - pi)
    p = float(erfc(num / den))
    return _result("runs", [p], alpha, {"pi": pi, "v": v})


# Longest-run reference tables: (minimum n, block size M, class edges, class
# probabilities).  The first class is <= edges[0], the last is >= edges[-1].
_LONGEST_RUN_TABLES = (
    (750_000, 10_000, (10, 11, 12, 13, 14, 15, 16),
     (0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727)),
    (6_272, 128, (4, 5, 6, 7, 8, 9),
     (0.1174, 0.2430, 0.2493, 0.1752, 0.1027, 0.1124)),
    (128, 8, (1, 2, 3, 4),
     (0.2148, 0.3672, 0.2305, 0.1875)),
)


def _longest_run_per_block(blocks: np.ndarray) -> np.ndarray:
    m = blocks.shape[1]
    idx = np.arange(m, dtype=np.int64)
    lastzero = np.where(blocks == 0, idx, np.int64(-1))
    np.maximum.accumulate(lastzero, axis=1, out=lastzero)
    return (idx - lastzero).max(axis=1)


def longest_run_test(bits, alpha: float = DEFAULT_ALPHA) -> TestResult:
    """Distribution of the longest run of ones inside fixed-size blocks."""
    b = _as_bits(bits)
    n = b.size
    for min_n, block_size, edges, probs in _LONGEST_RUN_TABLES:
        if n >= min_n:
            break
    else:
        return _skip("longest_run", f"need at least 128 bits, got {n}")
    nblocks = n // block_size
    blocks = b[: nblocks * block_size].reshape(nblocks, block_size)
    longest = _longest_run_per_block(blocks)
    clipped = np.clip(longest, edges[0], edges[-1])
    counts = np.array([(clipped == e).sum() for e in edges], dtype=np.float64)
    expected = nblocks * np.asarray(probs)
    chi2 = float(((counts - expected) ** 2 / expected).sum())
    dof = len(edges) - 1
    p = float(gammaincc(dof / 2.0, chi2 / 2.0))
    return _result("longest_run", [p], alpha, {"block_size": block_size, "blocks": nblocks})


def cumulative_sums_test(
    bits, alpha: float = DEFAULT_ALPHA, reverse: bool = False, min_length: int = 100
) -> TestResult:
    """Maximum excursion of the +/-1 random walk (forward or backward)."""
    b = _as_bits(bits)
    n = b.size
    name = "cumulative_sums_backward" if reverse else "cumulative_sums_forward"
    if n < min_length:
        return _skip(name, f"need at least {min_length} bits, got {n}")
    x = b.astype(np.int64) * 2 - 1
    if reverse:
        x = x[::-1]
    z = int(np.abs(np.cumsum(x)).max())
    sqn = math.sqrt(n)
    k1 = np.arange(math.floor((-n / z + 1) / 4), math.floor((n / z - 1) / 4) + 1)
    k2 = np.arange(math.floor((-n / z - 3) / 4), math.floor((n / z - 1) / 4) + 1)
    term1 = float((ndtr((4 * k1 + 1) * z / sqn) - ndtr((4 * k1 - 1) * z / sqn)).sum())
    term2 = float((ndtr((4 * k2 + 3) * z / sqn) - ndtr((4 * k2 + 1) * z / sqn)).sum())
    p = 1.0 - term1 + term2
    return _result(name, [p], alpha, {"z": z})


def _pattern_counts(b: np.ndarray, m: int) -> np.ndarray:
    """Counts of the 2^m overlapping patterns with circular wrap-around."""
    n = b.size
    ext = np.concatenate([b, b[: m - 1]]) if m > 1 else b
    ext = ext.astype(np.int64)
    vals = np.zeros(n, dtype=np.int64)
    for j in range(m):
        vals = (vals << 1) | ext[j : j + n]
    return np.bincount(vals, minlength=1 << m)


def _psi_sq(b: np.ndarray, m: int) -> float:
    if m == 0:
        return 0.0
    n = b.size
    counts = _pattern_counts(b, m).astype(np.float64)
    return float((1 << m) / n * (counts**2).sum() - n)


def serial_test(
    bits,
    alpha: float = DEFAULT_ALPHA,
    pattern_length: int = DEFAULT_PATTERN_LENGTH,
    min_length: int = 100,
) -> TestResult:
    """Uniformity of overlapping m-bit patterns; two P-values (first and
    second difference of the psi^2 statistics)."""
    m = pattern_length
    if m < 2:
        raise ValueError(f"pattern length must be >= 2, got {m}")
    b = _as_bits(bits)
    n = b.size
    params = {"pattern_length": m}
    if n < max(min_length, 1 << (m + 1)):
        return _skip("serial", f"need at least {max(min_length, 1 << (m + 1))} bits, got {n}", params)
    psi_m = _psi_sq(b, m)
    psi_m1 = _psi_sq(b, m - 1)
    psi_m2 = _psi_sq(b, m - 2)
    # the differences are non-negative in exact arithmetic; clamp float dust
    d1 = max(psi_m - psi_m1, 0.0)
    d2 = max(psi_m - 2.0 * psi_m1 + psi_m2, 0.0)
    p1 = float(gammaincc(2 ** (m - 2), d1 / 2.0))
    p2 = float(gammaincc(2 ** (m - 3), d2 / 2.0))
    return _result("serial", [p1, p2], alpha, params)


def approximate_entropy_test(
    bits,
    alpha: float = DEFAULT_ALPHA,
    pattern_length: int = DEFAULT_PATTERN_LENGTH,
    min_length: int = 100,
) -> TestResult:
    """Entropy rate of overlapping patterns versus the i.i.d. expectation."""
    m = pattern_length
    if m < 1:
        raise ValueError(f"pattern length must be >= 1, got {m}")
    b = _as_bits(bits)
    n = b.size
    params = {"pattern_length": m}
    if n < max(min_length, 1 << (m + 2)):
        return _skip(
            "approximate_entropy",
            f"need at least {max(min_length, 1 << (m + 2))} bits, got {n}",
            params,
        )

    def phi(mm: int) -> float:
        counts = _pattern_counts(b, mm).astype(np.float64)
        pi = counts[counts > 0] / n
        return float((pi * np.log(pi)).sum())

    apen = phi(m) - phi(m + 1)
    chi2 = max(2.0 * n * (math.log(2.0) - apen), 0.0)
    p = float(gammaincc(1 << (m - 1), chi2 / 2.0))
    return _result("approximate_entropy", [p], alpha, params)


def spectral_test(bits, alpha: float = DEFAULT_ALPHA, min_length: int = 1000) -> TestResult:
    """DFT peak count below the 95% threshold versus its expectation."""
    b = _as_bits(bits)
    n = b.size
    if n < min_length:
        return _skip("spectral", f"need at least {min_length} bits, got {n}")
    x = b.astype(np.float64) * 2.0 - 1.0
    mags = np.abs(np.fft.rfft(x))[: n // 2]
    threshold = math.sqrt(math.log(1.0 / 0.05) * n)
    n0 = 0.95 * n / 2.0
    n1 = int((mags < threshold).sum())
    d = (n1 - n0) / math.sqrt(n * 0.95 * 0.05 / 4.0)
    p = float(erfc(abs(d) / math.sqrt(2.0)))
    return _result("spectral", [p], alpha, {"below_threshold": n1})


def extended_tests(bits, params: dict | None = None, alpha: float = DEFAULT_ALPHA) -> list[TestResult]:
    """The battery members beyond the three basic frequency tests."""
    params = params or {}
    m = params.get("pattern_length", DEFAULT_PATTERN_LENGTH)
    return [
        longest_run_test(bits, alpha),
        cumulative_sums_test(bits, alpha, reverse=False),
        cumulative_sums_test(bits, alpha, reverse=True),
        serial_test(bits, alpha, pattern_length=m),
        approximate_entropy_test(bits, alpha, pattern_length=m),
        spectral_test(bits, alpha),
    ]


@dataclass(frozen=True, eq=False)
class BatteryReport:
    results: tuple[TestResult, ...]
    input_bits: int
    alpha: float
    fail_threshold: int
    failure_count: int       # tests with passed == False
    p_value_failures: int    # individual P-values below alpha
    verdict: str             # "Pass" | "Fail"

    @property
    def passed(self) -> bool:
        return self.verdict == "Pass"


def run_battery(
    bits,
    alpha: float = DEFAULT_ALPHA,
    fail_threshold: int = DEFAULT_FAIL_THRESHOLD,
    block_size: int = DEFAULT_BLOCK_SIZE,
    pattern_length: int = DEFAULT_PATTERN_LENGTH,
) -> BatteryReport:
    """Run all test families and apply the counting verdict.

    Pass means at most fail_threshold tests failed.  Skipped tests count
    neither way.  Raises EmptyBatteryError when nothing could run.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    if fail_threshold < 0:
        raise ValueError(f"fail threshold must be >= 0, got {fail_threshold}")
    b = _as_bits(bits)
    results = [
        monobit_test(b, alpha),
        block_frequency_test(b, alpha, block_size=block_size),
        runs_test(b, alpha),
    ]
    results.extend(extended_tests(b, {"pattern_length": pattern_length}, alpha))
    if all(r.skipped for r in results):
        raise EmptyBatteryError(f"{b.size} bits is below the minimum of every battery test")
    failure_count = sum(1 for r in results if r.passed is False)
    p_value_failures = sum(1 for r in results for p in r.p_values if p < alpha)
    verdict = "Pass" if failure_count <= fail_threshold else "Fail"
    return BatteryReport(
        tuple(results), b.size, alpha, fail_threshold, failure_count, p_value_failures, verdict
    )


# --- report serialization: line oriented, fixed field names ---

def render_report(report: BatteryReport) -> str:
    """Machine-readable battery report (one record per line)."""
    lines = [
        "battery_report_version 1",
        f"input_bits {report.input_bits}",
        f"alpha {report.alpha:g}",
        f"fail_threshold {report.fail_threshold}",
        f"test_count {len(report.results)}",
    ]
    for r in report.results:
        if r.skipped:
            lines.append(f"test_name={r.test_name} skipped=true reason={r.skip_reason!r}")
            continue
        pv = ",".join(f"{p:.6g}" for p in r.p_values)
        passed = "true" if r.passed else "false"
        lines.append(f"test_name={r.test_name} p_values={pv} passed={passed}")
    lines.append(f"failure_count {report.failure_count}")
    lines.append(f"p_value_failures {report.p_value_failures}")
    lines.append(f"verdict {report.verdict}")
    return "\n".join(lines) + "\n"


def parse_report(text: str) -> dict:
    """Inverse of render_report, for tooling and tests."""
    meta: dict = {"tests": []}
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("test_name="):
            rec: dict = {}
            for tok in line.split():
                key, _, val = tok.partition("=")
                rec[key] = val
            if "p_values" in rec:
                rec["p_values"] = [float(p) for p in rec["p_values"].split(",") if p]
            rec["skipped"] = rec.get("skipped") == "true"
            if not rec["skipped"]:
                rec["passed"] = rec.get("passed") == "true"
            meta["tests"].append(rec)
        else:
            key, _, val = line.partition(" ")
            meta[key] = val
    for intkey in ("input_bits", "fail_threshold", "test_count", "failure_count", "p_value_failures"):
        if intkey in meta:
            meta[intkey] = int(meta[intkey])
    if "alpha" in meta:
        meta["alpha"] = float(meta["alpha"])
    return meta
