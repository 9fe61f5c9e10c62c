"""Command-line front end: simulate, train, assess, bench.

Exit codes: 0 success, 2 configuration/usage errors, 3 trace or data
errors, 4 model errors, 5 sink unavailable.

Every flag can also come from a config file (`--config pipeline.cfg`)
holding one `key = value` pair per line with `#` comments; explicit
flags override file values.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from vaeguard.errors import (
    CorruptModelFile,
    EmptyBatch,
    EmptyDataset,
    ForeignEvent,
    InsufficientData,
    InvalidConfig,
    MalformedRecord,
    NotFittedError,
    OutOfOrderTimestamp,
    SchemaMismatch,
    SinkUnavailable,
    UnknownContainer,
)
from vaeguard.events import read_trace_file, write_trace_file
from vaeguard.pipeline import (
    PipelineConfig,
    assess_trace,
    bench,
    summarize_trace,
)
from vaeguard.scenarios import (
    SCENARIOS,
    ScenarioConfig,
    default_cpuminer_schedule,
    flood_attack_windows,
)
from vaeguard.sinks import FileSink, HttpBulkSink
from vaeguard.summarize import FEATURE_DIM, vectors_to_matrix
from vaeguard.thresholds import HeuristicThreshold, fit_threshold_ksigma
from vaeguard.vae import TrainConfig, load_model, save_model

logger = logging.getLogger(__name__)

_DEFAULT_DURATIONS = {"baseline": 3600.0, "cpuminer": 900.0, "httpflood": 1500.0}

_CONFIG_ERRORS = (InvalidConfig, ValueError)
_DATA_ERRORS = (
    MalformedRecord,
    OutOfOrderTimestamp,
    ForeignEvent,
    EmptyDataset,
    InsufficientData,
    UnknownContainer,
    EmptyBatch,
    OSError,
)
_MODEL_ERRORS = (CorruptModelFile, SchemaMismatch, NotFittedError)


def _parse_hidden_units(text: str) -> tuple[int, ...]:
    try:
        units = tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise InvalidConfig(f"bad hidden-units {text!r}") from exc
    if not units:
        raise InvalidConfig("hidden-units must name at least one layer")
    return units


def _load_config_flags(path: str) -> list[str]:
    """Turn `key = value` lines into flag tokens prepended to argv."""
    flags: list[str] = []
    for line_no, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise InvalidConfig(f"{path}:{line_no}: expected key = value")
        key, _, value = line.partition("=")
        flag = "--" + key.strip().replace("_", "-")
        flags.extend([flag, value.strip()])
    return flags


def _expand_config(argv: list[str]) -> list[str]:
    if "--config" not in argv:
        return argv
    position = argv.index("--config")
    if position + 1 >= len(argv):
        raise InvalidConfig("--config requires a file path")
    config_flags = _load_config_flags(argv[position + 1])
    remainder = argv[:position] + argv[position + 2 :]
    if not remainder:
        raise InvalidConfig("--config needs a subcommand")
    # insert after the subcommand so explicit flags still win
    return [remainder[0], *config_flags, *remainder[1:]]


def _add_interval_flag(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--interval-len", type=float, default=30.0, help="summarizer window seconds"
    )


def _add_train_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--epochs", type=int, default=100)
    parser.add_argument("--learning-rate", type=float, default=1e-4)
    parser.add_argument("--beta1", type=float, default=0.9)
    parser.add_argument("--beta2", type=float, default=0.999)
    parser.add_argument("--adam-epsilon", type=float, default=1e-8)
    parser.add_argument("--batch-size", type=int, default=16)
    parser.add_argument("--kl-weight", type=float, default=1.0)
    parser.add_argument("--accumulation-target", type=int, default=120)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--hidden-units", type=str, default="16,16,16")
    parser.add_argument("--latent-dim", type=int, default=10)
    parser.add_argument("--k", type=float, default=3.0, help="k-sigma threshold multiplier")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vaeguard",
        description="Container stability assessment and adaptive forensic publishing",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="generate a synthetic trace")
    p_sim.add_argument("--scenario", choices=sorted(SCENARIOS), required=True)
    p_sim.add_argument("--duration", type=float, default=None, help="seconds")
    p_sim.add_argument("--seed", type=int, default=7)
    p_sim.add_argument("--container", type=str, default="web-0")
    p_sim.add_argument("--rate", type=float, default=1.0, help="requests per second")
    p_sim.add_argument("--flood-factor", type=float, default=100.0)
    p_sim.add_argument("--out", type=str, required=True)
    p_sim.set_defaults(func=cmd_simulate)

    p_train = sub.add_parser("train", help="train a stability model from a trace")
    p_train.add_argument("--trace", type=str, required=True)
    p_train.add_argument("--model-out", type=str, required=True)
    p_train.add_argument("--container", type=str, default=None)
    p_train.add_argument("--curve-out", type=str, default=None)
    _add_interval_flag(p_train)
    _add_train_flags(p_train)
    p_train.set_defaults(func=cmd_train)

    p_assess = sub.add_parser("assess", help="score a trace against a model")
    p_assess.add_argument("--trace", type=str, required=True)
    p_assess.add_argument("--model", type=str, required=True)
    p_assess.add_argument("--k", type=float, default=None, help="override k-sigma")
    p_assess.add_argument(
        "--heuristic-threshold", type=float, default=None, help="fixed threshold override"
    )
    p_assess.add_argument("--out", type=str, default=None, help="verdict records file")
    _add_interval_flag(p_assess)
    p_assess.set_defaults(func=cmd_assess)

    p_bench = sub.add_parser(
        "bench", help="compare standard vs adaptive publishing costs"
    )
    p_bench.add_argument("--trace", type=str, required=True)
    p_bench.add_argument("--model", type=str, required=True)
    p_bench.add_argument("--out-dir", type=str, required=True)
    p_bench.add_argument("--report-out", type=str, default=None)
    p_bench.add_argument("--k", type=float, default=None)
    p_bench.add_argument("--heuristic-threshold", type=float, default=None)
    p_bench.add_argument(
        "--endpoint", type=str, default=None, help="publish to HTTP bulk endpoint"
    )
    p_bench.add_argument("--bulk-batch-size", type=int, default=500)
    p_bench.add_argument("--latent-index", type=str, default="stability-latent")
    p_bench.add_argument("--forensics-index", type=str, default="stability-forensics")
    _add_interval_flag(p_bench)
    p_bench.set_defaults(func=cmd_bench)

    return parser


def cmd_simulate(args) -> int:
    duration = args.duration
    if duration is None:
        duration = _DEFAULT_DURATIONS[args.scenario]
    schedule = ()
    if args.scenario == "cpuminer":
        schedule = default_cpuminer_schedule(duration)
    config = ScenarioConfig(
        seed=args.seed,
        duration_s=duration,
        container_id=args.container,
        base_request_rate=args.rate,
        phase_schedule=schedule,
        flood_factor=args.flood_factor,
    )
    events = SCENARIOS[args.scenario](config)
    count = write_trace_file(events, args.out)
    print(f"wrote {count} events to {args.out}")
    if args.scenario == "httpflood":
        windows = flood_attack_windows(duration)
        print(f"attack windows: {len(windows)}")
    if args.scenario == "cpuminer":
        for start, end, label in schedule:
            print(f"phase {label}: [{start:.0f}, {end:.0f}) s")
    return 0


def _single_container_summaries(summaries: dict, requested: str | None):
    if requested is not None:
        if requested not in summaries:
            raise InvalidConfig(
                f"container {requested!r} not present; trace has {sorted(summaries)}"
            )
        return requested, summaries[requested]
    if len(summaries) != 1:
        raise InvalidConfig(
            f"trace has containers {sorted(summaries)}; select one with --container"
        )
    ((container, rows),) = summaries.items()
    return container, rows


def cmd_train(args) -> int:
    events = read_trace_file(args.trace)
    summaries = summarize_trace(events, args.interval_len)
    container, rows = _single_container_summaries(summaries, args.container)
    vectors = [vector for _, _, vector in rows]
    config = PipelineConfig(
        interval_len=args.interval_len,
        train=TrainConfig(
            learning_rate=args.learning_rate,
            beta1=args.beta1,
            beta2=args.beta2,
            epsilon=args.adam_epsilon,
            epochs=args.epochs,
            batch_size=args.batch_size,
            kl_weight=args.kl_weight,
            accumulation_target=args.accumulation_target,
            seed=args.seed,
        ),
        hidden_units=_parse_hidden_units(args.hidden_units),
        latent_dim=args.latent_dim,
        threshold_k=args.k,
    )
    detector = config.detector()
    detector.container_id = container
    detector.fit(vectors_to_matrix(vectors))
    save_model(detector, args.model_out)

    curve = detector.curve_
    table_lines = ["epoch\trecon\tkl"]
    for epoch, (recon, kl) in enumerate(
        zip(curve.recon_per_epoch, curve.kl_per_epoch), 1
    ):
        table_lines.append(f"{epoch}\t{recon!r}\t{kl!r}")
    table = "\n".join(table_lines)
    if args.curve_out:
        Path(args.curve_out).write_text(table + "\n", encoding="utf-8")
    print(table)
    print(
        f"trained {container} on {len(vectors)} intervals:"
        f" settled recon {curve.settled_error!r},"
        f" error mean {curve.error_mean!r}, sd {curve.error_sd!r},"
        f" threshold {detector.threshold_!r} (k={args.k})"
    )
    print(f"model bundle written to {args.model_out}")
    return 0


def _policy_from_args(args, detector):
    if args.heuristic_threshold is not None:
        return HeuristicThreshold(args.heuristic_threshold)
    if args.k is not None:
        detector.set_threshold_k(args.k)
    return None


def cmd_assess(args) -> int:
    events = read_trace_file(args.trace)
    detector = load_model(args.model, expected_dim=FEATURE_DIM)
    policy = _policy_from_args(args, detector)
    config = PipelineConfig(interval_len=args.interval_len)
    summaries = summarize_trace(events, args.interval_len)
    records = assess_trace(summaries, detector, config, policy_override=policy)

    out_handle = open(args.out, "w", encoding="utf-8", newline="\n") if args.out else None
    try:
        unstable = 0
        scored = 0
        for record in records:
            if out_handle:
                out_handle.write(record.to_json() + "\n")
            if record.stable is None:
                verdict = "no-model"
            elif record.stable:
                verdict = "stable"
            else:
                verdict = "UNSTABLE"
                unstable += 1
            if record.recon_error is not None:
                scored += 1
                print(
                    f"{record.container} interval {record.interval:4d}"
                    f" recon={record.recon_error:.6g}"
                    f" threshold={record.threshold:.6g} {verdict} mode={record.mode}"
                )
    finally:
        if out_handle:
            out_handle.close()

    print(f"assessed {scored} intervals: {unstable} unstable at configured policy")
    # sweep the conventional multipliers for context
    sweep = []
    for k in (1.0, 3.0, 5.0):
        threshold = fit_threshold_ksigma(detector.curve_, k).threshold
        count = sum(
            1
            for record in records
            if record.recon_error is not None and record.recon_error > threshold
        )
        sweep.append(f"k={k:g}: {count}")
    print("unstable intervals by k-sigma policy: " + ", ".join(sweep))
    return 0


def cmd_bench(args) -> int:
    events = read_trace_file(args.trace)
    detector = load_model(args.model, expected_dim=FEATURE_DIM)
    policy = _policy_from_args(args, detector)
    config = PipelineConfig(
        interval_len=args.interval_len,
        bulk_batch_size=args.bulk_batch_size,
        latent_index=args.latent_index,
        forensics_index=args.forensics_index,
    )
    summaries = summarize_trace(events, args.interval_len)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.endpoint:
        standard_sink = HttpBulkSink(args.endpoint, batch_size=args.bulk_batch_size)
        adaptive_sink = HttpBulkSink(args.endpoint, batch_size=args.bulk_batch_size)
    else:
        standard_sink = FileSink(out_dir / "standard.ndjson")
        adaptive_sink = FileSink(out_dir / "adaptive.ndjson")
    try:
        report = bench(
            summaries, detector, config, standard_sink, adaptive_sink, policy
        )
    finally:
        standard_sink.close()
        adaptive_sink.close()

    print(report.format_table())
    if args.report_out:
        Path(args.report_out).write_text(report.to_json() + "\n", encoding="utf-8")
        print(f"report written to {args.report_out}")
    return 0


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        argv = _expand_config(argv)
    except InvalidConfig as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except _MODEL_ERRORS as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return 4
    except SinkUnavailable as exc:
        print(f"sink error: {exc}", file=sys.stderr)
        return 5
    except _DATA_ERRORS as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except _CONFIG_ERRORS as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
