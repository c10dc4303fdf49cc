"""Command-line entry point.

Subcommands:

``run <config.json>``
    Run the Monte Carlo experiment described by a config file and write
    ``results.csv`` plus ``manifest.json`` to its output directory.
    ``--seed``, ``--trials``, ``--jobs``, and ``--output-dir`` override the
    corresponding config fields.

``complexity <instance> <boundaries>``
    Print the sample-complexity analysis of an instance (builtin name or
    instance file) under a cluster spec given as comma-separated cumulative
    boundaries, e.g. ``3,12,15``.

``instance <name>``
    Describe a builtin or file instance; ``--emit`` prints it as JSON
    suitable for saving to an instance file.

``serve``
    Start the human-in-the-loop rating service.

Errors exit nonzero after a single ``error: <type>: <message>`` line on
stderr.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
from typing import Optional, Sequence

from . import harness
from .bernoulli import ExplorationSchedule
from .complexity import BoundaryAnchors, analyze, delta_star, upper_sample_bound
from .engine import ClusterSpec
from .environments import instance_to_dict


def _parse_boundaries(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError:
        raise ValueError(
            f"boundaries must be comma-separated integers, got {text!r}"
        ) from None


def cmd_run(args: argparse.Namespace) -> int:
    config = harness.load_config(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.output_dir is not None:
        overrides["output_dir"] = args.output_dir
    if overrides:
        config = dataclasses.replace(config, **overrides)

    result = harness.run_experiment(config, jobs=args.jobs)
    report, report_error = harness.complexity_report(config)
    csv_path, manifest_path = harness.emit_report(result, report, report_error)

    print(f"wrote {csv_path}")
    print(f"wrote {manifest_path}")
    for term in result.terminations:
        bits = [
            f"{term.algorithm}: {term.trials} trials",
            f"terminal mistake rate {term.terminal_mistake_rate:.4f}",
        ]
        if term.natural_stops:
            bits.append(
                f"{term.natural_stops} natural stops"
                f" (mean tau {term.tau_mean:.1f})"
            )
        print("; ".join(bits))
    if result.failures:
        print(f"{len(result.failures)} trial failure(s); see manifest", file=sys.stderr)
    return 0


def cmd_complexity(args: argparse.Namespace) -> int:
    instance = harness.resolve_instance(args.instance)
    means = harness.kernel_means(instance)
    spec = ClusterSpec(_parse_boundaries(args.spec), len(means))
    report = analyze(means, spec, epsilon=args.epsilon, delta=args.delta)

    if args.json:
        print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
        return 0

    schedule = ExplorationSchedule.default_for(
        delta=args.delta, num_arms=len(means), num_clusters=spec.num_clusters
    )
    if args.optimize_anchors:
        anchors = report.anchors
        anchor_kind = "optimized"
        deltas = report.delta_star_values
        upper = report.upper_bound
    else:
        anchors = BoundaryAnchors.midpoints(report.sorted_means, spec).values
        anchor_kind = "midpoint"
        deltas = delta_star(report.sorted_means, spec, BoundaryAnchors(anchors))
        upper = upper_sample_bound(report.h_star_midpoint, schedule)

    print(f"instance: {args.instance} ({len(means)} arms)")
    print(f"boundaries: {','.join(str(b) for b in spec.boundaries)}")
    print(f"epsilon: {report.epsilon}  delta: {report.delta}")
    print(f"anchors ({anchor_kind}): {' '.join(f'{b:.6f}' for b in anchors)}")
    print(f"H* (midpoint anchors):  {report.h_star_midpoint:.6f}")
    print(f"H* (optimized anchors): {report.h_star_optimized:.6f}")
    print(f"sample bound (upper, {anchor_kind} H*): {upper:.1f}")
    print(f"sample bound (lower): {report.lower_bound:.1f}")
    print(f"{'rank':>4} {'arm':>4} {'mean':>9} {'gap':>12} {'kl_gap':>12}")
    for pos, (arm, mean) in enumerate(zip(report.arm_order, report.sorted_means)):
        print(
            f"{pos + 1:>4} {arm:>4} {mean:>9.5f} "
            f"{deltas[pos]:>12.6g} {report.delta_kl_values[pos]:>12.6g}"
        )
    return 0


def cmd_instance(args: argparse.Namespace) -> int:
    instance = harness.resolve_instance(args.name)
    data = instance_to_dict(instance)
    if args.emit:
        print(json.dumps(data, indent=2, sort_keys=True))
        return 0
    means = harness.kernel_means(instance)
    print(f"kind: {data['kind']}")
    print(f"items: {len(means)}")
    print(f"means: {' '.join(f'{m:.6f}' for m in means)}")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import ServiceConfig, create_app

    config = ServiceConfig(
        data_dir=args.data_dir,
        payload_dir=args.payload_dir,
        ticket_timeout=args.ticket_timeout,
    )
    app = create_app(config)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coarserank",
        description="Adaptive coarse ranking: experiments, analysis, service.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a Monte Carlo experiment config")
    p_run.add_argument("config", help="path to an experiment config JSON file")
    p_run.add_argument("--seed", type=int, default=None, help="override master seed")
    p_run.add_argument("--trials", type=int, default=None, help="override trial count")
    p_run.add_argument(
        "--jobs", type=int, default=1, help="worker processes (default 1)"
    )
    p_run.add_argument("--output-dir", default=None, help="override output directory")
    p_run.set_defaults(func=cmd_run)

    p_cx = sub.add_parser("complexity", help="sample-complexity analysis")
    p_cx.add_argument("instance", help="builtin name or instance file")
    p_cx.add_argument("spec", help="cumulative cluster boundaries, e.g. 3,12,15")
    p_cx.add_argument("--epsilon", type=float, default=0.0)
    p_cx.add_argument("--delta", type=float, default=0.1)
    p_cx.add_argument(
        "--optimize-anchors",
        action="store_true",
        help="report the per-boundary anchors tuned to minimize H*",
    )
    p_cx.add_argument("--json", action="store_true", help="print the full report")
    p_cx.set_defaults(func=cmd_complexity)

    p_inst = sub.add_parser("instance", help="describe or export an instance")
    p_inst.add_argument("name", help="builtin name or instance file")
    p_inst.add_argument(
        "--emit", action="store_true", help="print instance JSON instead of a summary"
    )
    p_inst.set_defaults(func=cmd_instance)

    p_serve = sub.add_parser("serve", help="start the rating service")
    p_serve.add_argument(
        "--host", default=os.environ.get("COARSERANK_HOST", "127.0.0.1")
    )
    p_serve.add_argument(
        "--port", type=int, default=int(os.environ.get("COARSERANK_PORT", "8765"))
    )
    p_serve.add_argument(
        "--data-dir",
        default=os.environ.get("COARSERANK_DATA_DIR", "sessions"),
        help="directory for session event logs",
    )
    p_serve.add_argument(
        "--payload-dir",
        default=os.environ.get("COARSERANK_PAYLOAD_DIR"),
        help="directory of static item payloads served under /payloads",
    )
    p_serve.add_argument(
        "--ticket-timeout",
        type=float,
        default=float(os.environ.get("COARSERANK_TICKET_TIMEOUT", "120")),
        help="seconds before an unanswered ticket may be re-served",
    )
    p_serve.set_defaults(func=cmd_serve)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # noqa: BLE001 - single-line error contract
        message = f"{type(exc).__name__}: {exc}".replace("\n", "; ")
        print(f"error: {message}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
