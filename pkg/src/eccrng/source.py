"""Simulated entropy sources.

The physical picture: a magnetic tunnel junction is reset, then hit with a
write pulse whose amplitude sits near the 50% switching point; whether it
switched is one raw bit.  The switching probability follows a logistic
curve in the pulse current, centered at i50 with a width set by
slope_scale, and shorter write pulses give shallower curves.  Because the
reset always succeeds, successive bits are independent, so the simulated
device stream is Bernoulli at the operating probability.  A two-state
Markov source is included to model real captures with residual lag-1
correlation.
"""

from __future__ import annotations

import importlib.resources
from dataclasses import dataclass

import numpy as np
from scipy.special import expit

__all__ = [
    "CalibrationError",
    "SwitchingModel",
    "SourceConfig",
    "PRESETS",
    "load_switching_models",
    "default_switching_models",
    "switching_probability",
    "calibrate_current",
    "calibrate_current_empirical",
    "bernoulli_stream",
    "markov_stream",
    "mtj_stream",
    "generate_stream",
]


class CalibrationError(RuntimeError):
    """Raised when current calibration cannot reach the target probability."""


@dataclass(frozen=True)
class SwitchingModel:
    """Logistic switching-probability model for one write-pulse width."""

    t_write_ns: float
    i50_ua: float          # current at P = 0.5, microamps
    slope_scale_ua: float  # logistic width, microamps

    def __post_init__(self):
        if self.slope_scale_ua <= 0:
            raise ValueError(f"slope_scale must be positive, got {self.slope_scale_ua}")
        if self.t_write_ns <= 0:
            raise ValueError(f"t_write must be positive, got {self.t_write_ns}")


# Operating points for the three shipped capture profiles:
# name -> (ones probability, write pulse ns)
PRESETS: dict[str, tuple[float, float]] = {
    "data-a": (0.511, 30.0),
    "data-b": (0.276, 30.0),
    "data-c": (0.363, 10.0),
}


def switching_probability(model: SwitchingModel, current_ua: float) -> float:
    """P(switch) = logistic((I - i50) / slope_scale); exact 0.5 at i50."""
    return float(expit((current_ua - model.i50_ua) / model.slope_scale_ua))


def _parse_model_text(text: str, origin: str) -> dict[float, SwitchingModel]:
    fields: dict[float, dict[str, float]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{origin}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        try:
            val = float(value.strip())
        except ValueError:
            raise ValueError(f"{origin}:{lineno}: bad numeric value in {raw!r}") from None
        if "." not in key or not key.startswith("t"):
            raise ValueError(f"{origin}:{lineno}: keys look like t<ns>.<field>, got {key!r}")
        tpart, _, fieldname = key.partition(".")
        try:
            t_write = float(tpart[1:])
        except ValueError:
            raise ValueError(f"{origin}:{lineno}: bad pulse width in key {key!r}") from None
        if fieldname not in ("i50_ua", "slope_scale_ua"):
            raise ValueError(f"{origin}:{lineno}: unknown field {fieldname!r}")
        fields.setdefault(t_write, {})[fieldname] = val
    models = {}
    for t_write, vals in sorted(fields.items()):
        missing = {"i50_ua", "slope_scale_ua"} - set(vals)
        if missing:
            raise ValueError(f"{origin}: t{t_write:g} is missing {sorted(missing)}")
        models[t_write] = SwitchingModel(t_write, vals["i50_ua"], vals["slope_scale_ua"])
    if not models:
        raise ValueError(f"{origin}: no switching models defined")
    return models


def load_switching_models(path: str | None = None) -> dict[float, SwitchingModel]:
    """Read switching models from a key=value file; None loads the shipped defaults."""
    if path is None:
        text = importlib.resources.files("eccrng").joinpath("switching.cfg").read_text()
        origin = "switching.cfg"
    else:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
        origin = path
    return _parse_model_text(text, origin)


def default_switching_models() -> dict[float, SwitchingModel]:
    return load_switching_models(None)


def calibrate_current(
    model: SwitchingModel,
    target: float = 0.5,
    tol: float = 1e-9,
    max_iter: int = 200,
) -> float:
    """Bisection on the analytic curve for the current hitting P = target."""
    if not 0.0 < target < 1.0:
        raise ValueError(f"target probability must lie in (0, 1), got {target}")
    if tol <= 0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    span = 60.0 * model.slope_scale_ua  # logistic is fully saturated 60 widths out
    lo = model.i50_ua - span
    hi = model.i50_ua + span
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        p = switching_probability(model, mid)
        if abs(p - target) <= tol:
            return mid
        if p < target:
            lo = mid
        else:
            hi = mid
    raise CalibrationError(
        f"no current within tol={tol} of target {target} after {max_iter} bisections"
    )


def calibrate_current_empirical(
    model: SwitchingModel,
    target: float = 0.5,
    tol: float = 5e-3,
    seed: int = 0,
    batch_bits: int = 100_000,
    max_iter: int = 64,
) -> float:
    """Feedback calibration against measured batches instead of the curve.

    Each step generates a fresh seeded batch at the trial current, compares
    the ones-fraction with the target and narrows the current bracket.  The
    tolerance has to be generous next to the batch noise (about
    1/sqrt(batch_bits)) or the loop cannot settle.
    """
    if not 0.0 < target < 1.0:
        raise ValueError(f"target probability must lie in (0, 1), got {target}")
    if tol <= 0:
        raise ValueError(f"tolerance must be positive, got {tol}")
    if batch_bits < 1:
        raise ValueError(f"batch_bits must be >= 1, got {batch_bits}")
    span = 60.0 * model.slope_scale_ua
    lo = model.i50_ua - span
    hi = model.i50_ua + span
    for step in range(max_iter):
        mid = 0.5 * (lo + hi)
        batch = mtj_stream(model, mid, seed=np.random.SeedSequence([seed, step]), length=batch_bits)
        frac = float(batch.mean())
        if abs(frac - target) <= tol:
            return mid
        if frac < target:
            lo = mid
        else:
            hi = mid
    raise CalibrationError(
        f"measured fraction never came within tol={tol} of {target} after {max_iter} batches; "
        f"tol is likely below the batch noise floor"
    )


def bernoulli_stream(p: float, seed, length: int) -> np.ndarray:
    """length i.i.d. bits with P(1) = p, deterministic per seed."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability must lie in [0, 1], got {p}")
    if length < 0:
        raise ValueError(f"length must be non-negative, got {length}")
    rng = np.random.default_rng(seed)
    return (rng.random(length) < p).astype(np.uint8)


def markov_stream(p: float, rho: float, seed, length: int) -> np.ndarray:
    """Stationary two-state Markov bits: P(1) = p, lag-1 autocorrelation rho.

    Transition probabilities a = P(1->1) = p + rho(1-p) and
    b = P(0->1) = p(1-rho) give exactly the requested moments.  Generation
    draws alternating geometric sojourns, which is fast and exact (the
    chain is memoryless inside a run).
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability must lie in [0, 1], got {p}")
    if not -1.0 < rho < 1.0:
        raise ValueError(f"autocorrelation must lie in (-1, 1), got {rho}")
    if length < 0:
        raise ValueError(f"length must be non-negative, got {length}")
    out = np.empty(length, dtype=np.uint8)
    if p == 0.0 or p == 1.0:
        out.fill(int(p))
        return out
    a = p + rho * (1.0 - p)
    b = p * (1.0 - rho)
    if not (0.0 <= a <= 1.0 and 0.0 <= b <= 1.0):
        raise ValueError(f"no two-state chain has p={p} with rho={rho}")
    if length == 0:
        return out
    rng = np.random.default_rng(seed)
    leave1 = 1.0 - a  # run-of-ones termination probability
    leave0 = b
    cur = 1 if rng.random() < p else 0
    filled = 0
    mean_pair = 1.0 / leave1 + 1.0 / leave0
    while filled < length:
        need = length - filled
        pairs = max(8, int(need / mean_pair) + 8)
        lens = np.empty(2 * pairs, dtype=np.int64)
        vals = np.empty(2 * pairs, dtype=np.uint8)
        lens[0::2] = rng.geometric(leave1 if cur else leave0, size=pairs)
        lens[1::2] = rng.geometric(leave0 if cur else leave1, size=pairs)
        vals[0::2] = cur
        vals[1::2] = 1 - cur
        csum = np.cumsum(lens)
        cut = int(np.searchsorted(csum, need))
        if cut < lens.size:
            lens = lens[: cut + 1].copy()
            lens[-1] -= int(csum[cut]) - need
            seg = np.repeat(vals[: cut + 1], lens)
            out[filled:] = seg
            filled = length
        else:
            seg = np.repeat(vals, lens)
            out[filled : filled + seg.size] = seg
            filled += seg.size
            # every drawn run was consumed whole, so the next run alternates
            cur = 1 - int(vals[-1])
    return out


def mtj_stream(model: SwitchingModel, current_ua: float, seed, length: int) -> np.ndarray:
    """Simulated reset-then-write capture: independent bits at the curve probability.

    Reset always succeeds in this model, so the stream is distributed exactly
    like bernoulli_stream(switching_probability(model, current), seed, length).
    """
    return bernoulli_stream(switching_probability(model, current_ua), seed, length)


@dataclass(frozen=True)
class SourceConfig:
    """Declarative source description used by the command-line layer."""

    kind: str  # "bernoulli" | "markov" | "mtj"
    seed: int
    length: int
    p: float | None = None
    rho: float | None = None
    model: SwitchingModel | None = None
    current_ua: float | None = None

    def __post_init__(self):
        if self.kind not in ("bernoulli", "markov", "mtj"):
            raise ValueError(f"unknown source kind {self.kind!r}")


def generate_stream(config: SourceConfig) -> np.ndarray:
    if config.kind == "bernoulli":
        return bernoulli_stream(config.p, config.seed, config.length)
    if config.kind == "markov":
        return markov_stream(config.p, config.rho, config.seed, config.length)
    return mtj_stream(config.model, config.current_ua, config.seed, config.length)
