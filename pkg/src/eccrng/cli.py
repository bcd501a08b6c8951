"""Command-line interface.

Subcommands: generate (simulated captures), postprocess (whitening
pipelines), test (statistical battery), calibrate (operating current),
speed (array read-rate estimate), bench (throughput measurement).

Exit codes: 0 success (and battery Pass), 1 usage error, 2 I/O error,
3 battery Fail.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np

from . import __version__
from . import bitio, stats
from .codes import code_registry, lookup_code
from .source import (
    PRESETS,
    CalibrationError,
    SourceConfig,
    calibrate_current,
    calibrate_current_empirical,
    generate_stream,
    load_switching_models,
    markov_stream,
    switching_probability,
)
from .whiten import (
    DEFAULT_INJECTION,
    EccStage,
    LfsrSpec,
    LfsrStage,
    PipelineSpec,
    RejectionStage,
    run_pipeline,
)

SEED_ENV_VAR = "ECCRNG_SEED"

# Published throughput reference points for the speed table (MHz).
SPEED_REFERENCES = (
    ("rtn-reference-a", 2.0),
    ("rtn-reference-b", 0.2),
)


class UsageError(Exception):
    pass


class CliIoError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


class _StageAction(argparse.Action):
    """Append (kind, value) to a shared list so stage order survives parsing."""

    def __call__(self, parser, namespace, values, option_string=None):
        stages = getattr(namespace, "stages", None)
        if stages is None:
            stages = []
            setattr(namespace, "stages", stages)
        stages.append((self.dest, values))


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV_VAR}={raw!r} is not an integer seed") from None


def _resolve_seed(args) -> int:
    return args.seed if args.seed is not None else _default_seed()


def _parse_taps(text: str) -> LfsrSpec:
    try:
        taps = tuple(int(t) for t in text.split(","))
        return LfsrSpec(taps)
    except ValueError as exc:
        raise UsageError(f"bad tap list {text!r}: {exc}") from None


def _parse_code(text: str):
    try:
        n, k, t = (int(v) for v in text.split(","))
    except ValueError:
        raise UsageError(f"bad code spec {text!r}: expected N,K,T") from None
    try:
        return lookup_code(n, k, t)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _build_stages(args) -> PipelineSpec:
    raw = getattr(args, "stages", None)
    if not raw:
        raise UsageError("no pipeline stages given (use --rejection, --lfsr, --ecc)")
    built = []
    for kind, value in raw:
        if kind == "rejection":
            built.append(RejectionStage())
        elif kind == "lfsr":
            built.append(
                LfsrStage(_parse_taps(value), seed=args.lfsr_seed, injection=args.injection)
            )
        else:
            built.append(EccStage(_parse_code(value), route=args.route))
    return PipelineSpec(tuple(built))


def _stage_label(stage) -> str:
    if isinstance(stage, RejectionStage):
        return "rejection"
    if isinstance(stage, LfsrStage):
        return "lfsr(%s)" % ",".join(str(t) for t in stage.spec.taps)
    return "ecc(%d,%d,%d)" % (stage.code.n, stage.code.k, stage.code.t)


def _read_input(args) -> tuple[np.ndarray, str]:
    path = args.input
    try:
        encoding = args.input_encoding
        if encoding == "auto":
            manifest = bitio.manifest_for_file(path)
            if manifest is not None and manifest.encoding in (bitio.PACKED, bitio.ASCII):
                encoding = manifest.encoding
            else:
                encoding = bitio.sniff_encoding(path)
        bit_count = args.bits
        if bit_count is None and encoding == bitio.PACKED:
            manifest = bitio.manifest_for_file(path)
            if manifest is not None:
                bit_count = manifest.output_bits
        bits = bitio.read_bit_file(path, encoding, bit_count, args.bit_order)
    except OSError as exc:
        raise CliIoError(f"cannot read {path}: {exc.strerror or exc}") from None
    except ValueError as exc:
        raise CliIoError(f"cannot read {path}: {exc}") from None
    return bits, encoding


def _write_output(args, argv, command, bits, params, input_info=None) -> None:
    path = args.output
    try:
        payload = bitio.write_bit_file(path, bits, args.encoding, bitio.MSB_FIRST)
    except OSError as exc:
        raise CliIoError(f"cannot write {path}: {exc.strerror or exc}") from None
    manifest = bitio.RunManifest(
        command=command,
        argv=list(argv),
        params=params,
        output_path=path,
        output_sha256=bitio.sha256_hex(payload),
        output_bits=int(bits.size),
        encoding=args.encoding,
        input_path=input_info[0] if input_info else None,
        input_sha256=input_info[1] if input_info else None,
        tool_version=__version__,
    )
    bitio.write_manifest(manifest)


def _write_text_artifact(path, argv, command, text, params, input_info=None) -> None:
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise CliIoError(f"cannot write {path}: {exc.strerror or exc}") from None
    manifest = bitio.RunManifest(
        command=command,
        argv=list(argv),
        params=params,
        output_path=path,
        output_sha256=bitio.sha256_hex(text.encode("utf-8")),
        output_bits=0,
        encoding="text",
        input_path=input_info[0] if input_info else None,
        input_sha256=input_info[1] if input_info else None,
        tool_version=__version__,
    )
    bitio.write_manifest(manifest)


def _resolve_source(args, seed: int) -> tuple[SourceConfig, dict]:
    """Build a SourceConfig from generate-style flags; returns (config, params)."""
    chosen = [
        name
        for name, val in (
            ("preset", args.preset),
            ("bernoulli", args.bernoulli),
            ("markov", args.markov),
            ("current", args.current),
        )
        if val is not None
    ]
    if len(chosen) != 1:
        raise UsageError("choose exactly one source: --preset, --bernoulli, --markov or --current")
    kind = chosen[0]
    if kind == "preset":
        if args.preset not in PRESETS:
            raise UsageError(f"unknown preset {args.preset!r}; available: {', '.join(sorted(PRESETS))}")
        p, t_write = PRESETS[args.preset]
        model = _load_model(args.model_config, t_write)
        current = calibrate_current(model, target=p, tol=1e-12)
        cfg = SourceConfig("mtj", seed, args.bits, model=model, current_ua=current)
        params = {"source": f"preset:{args.preset}", "p": p, "t_write_ns": t_write,
                  "current_ua": current, "seed": seed}
        return cfg, params
    if kind == "bernoulli":
        p = _parse_prob(args.bernoulli, "--bernoulli")
        return (
            SourceConfig("bernoulli", seed, args.bits, p=p),
            {"source": f"bernoulli:{p:g}", "seed": seed},
        )
    if kind == "markov":
        parts = args.markov.split(",")
        if len(parts) != 2:
            raise UsageError("--markov expects P,RHO")
        p = _parse_prob(parts[0], "--markov")
        try:
            rho = float(parts[1])
        except ValueError:
            raise UsageError(f"bad autocorrelation {parts[1]!r}") from None
        try:
            cfg = SourceConfig("markov", seed, args.bits, p=p, rho=rho)
            # zero-length dry run surfaces infeasible (p, rho) pairs as usage errors
            markov_stream(p, rho, 0, 0)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        return cfg, {"source": f"markov:{p:g},{rho:g}", "seed": seed}
    # explicit operating current through the switching model
    try:
        current = float(args.current)
    except ValueError:
        raise UsageError(f"bad current {args.current!r}") from None
    model = _load_model(args.model_config, args.t_write)
    cfg = SourceConfig("mtj", seed, args.bits, model=model, current_ua=current)
    return cfg, {"source": f"mtj:{current:g}uA", "t_write_ns": args.t_write, "seed": seed}


def _parse_prob(text: str, flag: str) -> float:
    try:
        p = float(text)
    except ValueError:
        raise UsageError(f"{flag}: bad probability {text!r}") from None
    if not 0.0 <= p <= 1.0:
        raise UsageError(f"{flag}: probability must lie in [0, 1], got {p}")
    return p


def _load_model(config_path, t_write):
    try:
        models = load_switching_models(config_path)
    except OSError as exc:
        raise CliIoError(f"cannot read model config: {exc}") from None
    except ValueError as exc:
        raise CliIoError(str(exc)) from None
    if t_write not in models:
        avail = ", ".join(f"{t:g}" for t in sorted(models))
        raise UsageError(f"no switching model for t_write={t_write:g} ns (have: {avail})")
    return models[t_write]


def cmd_generate(args, argv) -> int:
    if args.bits is None or args.bits < 0:
        raise UsageError("--bits must be a non-negative integer")
    seed = _resolve_seed(args)
    cfg, params = _resolve_source(args, seed)
    bits = generate_stream(cfg)
    params["bits"] = int(bits.size)
    _write_output(args, argv, "generate", bits, params)
    ones = float(bits.mean()) if bits.size else 0.0
    print(f"generate: wrote {bits.size} bits to {args.output} (ones fraction {ones:.4f})")
    return 0


def cmd_postprocess(args, argv) -> int:
    pipeline = _build_stages(args)
    bits, in_encoding = _read_input(args)
    in_sha = bitio.sha256_hex(bitio.pack_bits(bits))
    out = run_pipeline(pipeline, bits)
    params = {
        "stages": [_stage_label(s) for s in pipeline.stages],
        "lfsr_seed": args.lfsr_seed,
        "injection": args.injection,
        "route": args.route,
        "input_encoding": in_encoding,
        "input_bits": int(bits.size),
    }
    _write_output(args, argv, "postprocess", out, params, (args.input, in_sha))
    chain = " -> ".join(_stage_label(s) for s in pipeline.stages)
    print(f"postprocess: {bits.size} bits -> {out.size} bits via {chain}; wrote {args.output}")
    return 0


def cmd_test(args, argv) -> int:
    if not 0.0 < args.alpha < 1.0:
        raise UsageError(f"--alpha must lie in (0, 1), got {args.alpha}")
    if args.fail_threshold < 0:
        raise UsageError("--fail-threshold must be >= 0")
    bits, _ = _read_input(args)
    if bits.size < stats.BATTERY_MIN_BITS and not args.allow_short:
        raise UsageError(
            f"input has {bits.size} bits; the battery wants at least "
            f"{stats.BATTERY_MIN_BITS} (pass --allow-short to run anyway)"
        )
    try:
        report = stats.run_battery(
            bits,
            alpha=args.alpha,
            fail_threshold=args.fail_threshold,
            block_size=args.block_size,
            pattern_length=args.pattern_length,
        )
    except stats.EmptyBatteryError as exc:
        raise UsageError(str(exc)) from None
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    text = stats.render_report(report)
    sys.stdout.write(text)
    report_path = args.report or (args.input + ".report")
    in_sha = bitio.sha256_hex(bitio.pack_bits(bits))
    _write_text_artifact(
        report_path,
        argv,
        "test",
        text,
        {
            "alpha": args.alpha,
            "fail_threshold": args.fail_threshold,
            "block_size": args.block_size,
            "pattern_length": args.pattern_length,
            "input_bits": int(bits.size),
        },
        (args.input, in_sha),
    )
    return 0 if report.passed else 3


def cmd_calibrate(args, argv) -> int:
    model = _load_model(args.model_config, args.t_write)
    try:
        if args.empirical:
            seed = _resolve_seed(args)
            current = calibrate_current_empirical(
                model,
                target=args.target,
                tol=args.tol if args.tol is not None else 5e-3,
                seed=seed,
                batch_bits=args.batch_bits,
            )
        else:
            current = calibrate_current(
                model, target=args.target, tol=args.tol if args.tol is not None else 1e-9
            )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    except CalibrationError as exc:
        print(f"calibrate: failed: {exc}", file=sys.stderr)
        return 1
    p = switching_probability(model, current)
    mode = "empirical" if args.empirical else "analytic"
    text = (
        f"calibrate ({mode}): t_write={model.t_write_ns:g} ns target={args.target:g}\n"
        f"current_ua {current:.6f}\n"
        f"curve_probability {p:.9f}\n"
    )
    sys.stdout.write(text)
    if args.output:
        _write_text_artifact(
            args.output,
            argv,
            "calibrate",
            text,
            {"t_write_ns": model.t_write_ns, "target": args.target, "mode": mode},
        )
    return 0


def cmd_speed_estimate(args, argv) -> int:
    if args.read_ns <= 0:
        raise UsageError(f"--read-ns must be positive, got {args.read_ns}")
    if args.clocks_per_bit < 1:
        raise UsageError(f"--clocks-per-bit must be >= 1, got {args.clocks_per_bit}")
    mhz = 1000.0 / (args.read_ns * args.clocks_per_bit)
    rows = [("mram-ecc (this estimate)", mhz)] + [(n, v) for n, v in SPEED_REFERENCES]
    lines = [
        f"speed: read {args.read_ns:g} ns/bit, {args.clocks_per_bit} clocks/bit",
        f"estimated_mhz {mhz:g}",
        "",
        f"{'design':<28s} {'MHz':>8s}",
    ]
    for name, value in rows:
        lines.append(f"{name:<28s} {value:>8g}")
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if args.output:
        _write_text_artifact(
            args.output,
            argv,
            "speed",
            text,
            {"read_ns": args.read_ns, "clocks_per_bit": args.clocks_per_bit, "mhz": mhz},
        )
    return 0


def _bench_source_config(args, seed: int) -> tuple[SourceConfig, str]:
    spec = args.source
    if spec in PRESETS:
        p, t_write = PRESETS[spec]
        model = _load_model(args.model_config, t_write)
        current = calibrate_current(model, target=p, tol=1e-12)
        return SourceConfig("mtj", seed, args.bits, model=model, current_ua=current), f"preset:{spec}"
    kind, _, rest = spec.partition(":")
    if kind == "bernoulli" and rest:
        return SourceConfig("bernoulli", seed, args.bits, p=_parse_prob(rest, "--source")), spec
    if kind == "markov" and rest:
        parts = rest.split(",")
        if len(parts) == 2:
            p = _parse_prob(parts[0], "--source")
            try:
                rho = float(parts[1])
            except ValueError:
                raise UsageError(f"--source: bad autocorrelation {parts[1]!r}") from None
            return SourceConfig("markov", seed, args.bits, p=p, rho=rho), spec
    raise UsageError(
        f"bad --source {spec!r}; use a preset name, bernoulli:P or markov:P,RHO"
    )


def cmd_bench(args, argv) -> int:
    if args.bits < 1:
        raise UsageError("--bits must be >= 1")
    seed = _resolve_seed(args)
    cfg, source_label = _bench_source_config(args, seed)
    if getattr(args, "stages", None):
        pipeline = _build_stages(args)
    else:
        # documented default composition: whitening register into the strongest
        # mid-length compressor
        pipeline = PipelineSpec(
            (LfsrStage(LfsrSpec((3, 1, 0)), seed=args.lfsr_seed), EccStage(lookup_code(31, 16, 3)))
        )

    lines = ["bench_version 1", f"source {source_label} seed={seed} bits={args.bits}"]
    t0 = time.perf_counter()
    bits = generate_stream(cfg)
    gen_seconds = time.perf_counter() - t0
    timings = [("generate", gen_seconds, args.bits, bits.size)]

    from .codes import compress_stream_matrix, compress_stream_shiftreg
    from .whiten import lfsr_whiten, von_neumann

    selfchecks = []
    cur = bits
    for stage in pipeline.stages:
        label = _stage_label(stage)
        t0 = time.perf_counter()
        if isinstance(stage, RejectionStage):
            out = von_neumann(cur)
        elif isinstance(stage, LfsrStage):
            out = lfsr_whiten(stage.spec, stage.seed, cur, stage.injection)
        else:
            out = compress_stream_matrix(stage.code, cur)
        seconds = time.perf_counter() - t0
        timings.append((label, seconds, cur.size, out.size))
        if isinstance(stage, EccStage):
            t0 = time.perf_counter()
            alt = compress_stream_shiftreg(stage.code, cur)
            alt_seconds = time.perf_counter() - t0
            match = bool(np.array_equal(out, alt))
            selfchecks.append((label, match, seconds, alt_seconds, cur.size))
        cur = out

    total = sum(s for _, s, _, _ in timings)
    for label, seconds, bits_in, bits_out in timings:
        share = 100.0 * seconds / total if total > 0 else 0.0
        rate = bits_in / seconds / 1e6 if seconds > 0 else float("inf")
        lines.append(
            f"stage={label} seconds={seconds:.4f} bits_in={bits_in} bits_out={bits_out} "
            f"share={share:.1f}% mbit_s={rate:.2f}"
        )
    for label, match, mat_s, alt_s, bits_in in selfchecks:
        alt_rate = bits_in / alt_s / 1e6 if alt_s > 0 else float("inf")
        lines.append(
            f"selfcheck={label} routes_agree={'true' if match else 'false'} "
            f"matrix_seconds={mat_s:.4f} shiftreg_seconds={alt_s:.4f} shiftreg_mbit_s={alt_rate:.2f}"
        )
    lines.append(f"total_seconds {total:.4f}")
    end_rate = cur.size / total / 1e6 if total > 0 else float("inf")
    lines.append(f"output_bits {cur.size}")
    lines.append(f"throughput_mbit_s {end_rate:.3f}")
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if any(not ok for _, ok, _, _, _ in selfchecks):
        print("bench: compressor routes disagreed", file=sys.stderr)
        return 1
    if args.output:
        _write_text_artifact(
            args.output, argv, "bench",
            text, {"source": source_label, "seed": seed, "bits": args.bits},
        )
    return 0


def _add_input_flags(p: _Parser) -> None:
    p.add_argument("input", help="input bit file")
    p.add_argument("--input-encoding", choices=["auto", bitio.PACKED, bitio.ASCII], default="auto")
    p.add_argument("--bits", type=int, default=None,
                   help="bit count of a packed input (default: sidecar manifest, else 8x file size)")
    p.add_argument("--bit-order", choices=[bitio.MSB_FIRST, bitio.LSB_FIRST], default=bitio.MSB_FIRST,
                   help="bit order inside packed input bytes (default msb)")


def _add_stage_flags(p: _Parser) -> None:
    p.add_argument("--rejection", dest="rejection", action=_StageAction, nargs=0,
                   help="von Neumann pairwise rejection stage (repeatable, order matters)")
    p.add_argument("--lfsr", dest="lfsr", action=_StageAction, metavar="TAPS",
                   help="LFSR whitening stage, taps like 3,1,0 (repeatable, order matters)")
    p.add_argument("--ecc", dest="ecc", action=_StageAction, metavar="N,K,T",
                   help="code compression stage, e.g. 31,16,3 (repeatable, order matters)")
    p.add_argument("--lfsr-seed", type=int, default=1, help="register preload for --lfsr stages")
    p.add_argument("--injection", choices=["feedback", "output-xor"], default=DEFAULT_INJECTION)
    p.add_argument("--route", choices=["matrix", "shiftreg"], default="matrix",
                   help="compression evaluation route for --ecc stages")


def build_parser() -> _Parser:
    parser = _Parser(prog="eccrng", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"eccrng {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="simulate an entropy-source capture")
    g.add_argument("--preset", choices=sorted(PRESETS), default=None,
                   help="capture profile (operating probability + pulse width)")
    g.add_argument("--bernoulli", metavar="P", default=None, help="i.i.d. source at P(1)=P")
    g.add_argument("--markov", metavar="P,RHO", default=None,
                   help="correlated source with lag-1 autocorrelation RHO")
    g.add_argument("--current", metavar="UA", default=None,
                   help="drive the switching model at this current (microamps)")
    g.add_argument("--t-write", type=float, default=30.0, help="write pulse ns for --current")
    g.add_argument("--model-config", default=None, help="switching-model file (default: shipped)")
    g.add_argument("--bits", type=int, required=True, help="number of bits to generate")
    g.add_argument("--seed", type=int, default=None,
                   help=f"RNG seed (default: ${SEED_ENV_VAR} or 0)")
    g.add_argument("--output", required=True)
    g.add_argument("--encoding", choices=[bitio.PACKED, bitio.ASCII], default=bitio.PACKED)
    g.set_defaults(func=cmd_generate)

    p = sub.add_parser("postprocess", help="run whitening stages over a bit file")
    _add_input_flags(p)
    _add_stage_flags(p)
    p.add_argument("--output", required=True)
    p.add_argument("--encoding", choices=[bitio.PACKED, bitio.ASCII], default=bitio.PACKED)
    p.set_defaults(func=cmd_postprocess)

    t = sub.add_parser("test", help="statistical battery with counting verdict")
    _add_input_flags(t)
    t.add_argument("--alpha", type=float, default=stats.DEFAULT_ALPHA)
    t.add_argument("--fail-threshold", type=int, default=stats.DEFAULT_FAIL_THRESHOLD)
    t.add_argument("--block-size", type=int, default=stats.DEFAULT_BLOCK_SIZE)
    t.add_argument("--pattern-length", type=int, default=stats.DEFAULT_PATTERN_LENGTH)
    t.add_argument("--allow-short", action="store_true",
                   help="run on fewer than the recommended bits")
    t.add_argument("--report", default=None, help="report path (default INPUT.report)")
    t.set_defaults(func=cmd_test)

    c = sub.add_parser("calibrate", help="find the current for a target probability")
    c.add_argument("--t-write", type=float, default=30.0)
    c.add_argument("--target", type=float, default=0.5)
    c.add_argument("--tol", type=float, default=None,
                   help="default 1e-9 analytic, 5e-3 empirical")
    c.add_argument("--empirical", action="store_true",
                   help="calibrate against measured batches instead of the curve")
    c.add_argument("--batch-bits", type=int, default=100_000)
    c.add_argument("--seed", type=int, default=None)
    c.add_argument("--model-config", default=None)
    c.add_argument("--output", default=None, help="also write the result as a text artifact")
    c.set_defaults(func=cmd_calibrate)

    s = sub.add_parser("speed", help="array read-rate estimate")
    s.add_argument("--read-ns", type=float, default=10.0)
    s.add_argument("--clocks-per-bit", type=int, default=4)
    s.add_argument("--output", default=None)
    s.set_defaults(func=cmd_speed_estimate)

    b = sub.add_parser("bench", help="measure pipeline throughput")
    _add_stage_flags(b)
    b.add_argument("--source", default="bernoulli:0.5",
                   help="preset name, bernoulli:P or markov:P,RHO")
    b.add_argument("--model-config", default=None)
    b.add_argument("--bits", type=int, default=1_000_000)
    b.add_argument("--seed", type=int, default=None)
    b.add_argument("--output", default=None)
    b.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args, argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except CliIoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
