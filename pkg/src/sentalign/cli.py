"""Command-line entry point.

Subcommands mirror the pipeline stages (compose, train-kg, cluster, align,
evaluate) plus run-all; every subcommand reads the same config file and shares
the --seed/--out-dir/--stage-override escape hatches.
"""

from __future__ import annotations

import argparse
import sys

from .config import COMPOSE_METHODS, parse_config
from .errors import SentAlignError
from . import pipeline


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="path to the experiment config file")
    parser.add_argument("--seed", type=int, default=None, help="override the global seed")
    parser.add_argument("--out-dir", default=None, help="override paths.out_dir")
    parser.add_argument(
        "--stage-override",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override any config key (repeatable)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sentalign",
        description="Compose sentence embeddings, train graph embeddings, "
        "measure clusterability, and align the two spaces.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compose", help="compose sentence embeddings for one method")
    _add_common(p)
    p.add_argument("--method", required=True, help=f"one of: {', '.join(COMPOSE_METHODS)}")

    p = sub.add_parser("train-kg", help="train graph embeddings over the triple store")
    _add_common(p)

    p = sub.add_parser("cluster", help="measure clusterability of composed embeddings")
    _add_common(p)
    p.add_argument("--svg", action="store_true", help="also write PCA scatter SVGs")

    p = sub.add_parser("align", help="train the linear alignment map for one method")
    _add_common(p)
    p.add_argument("--method", required=True)

    p = sub.add_parser("evaluate", help="evaluate trained maps on the test split")
    _add_common(p)
    p.add_argument(
        "--relation-level",
        action="store_true",
        help="score hits by relation match instead of exact triple key (analysis only)",
    )

    p = sub.add_parser("run-all", help="run the full experiment end to end")
    _add_common(p)
    return parser


def _load_config(args: argparse.Namespace):
    overrides = list(args.stage_override)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    if args.out_dir is not None:
        overrides.append(f"paths.out_dir={args.out_dir}")
    return parse_config(args.config, overrides)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "compose" and args.method not in COMPOSE_METHODS:
        parser.error(
            f"unknown method {args.method!r}; valid methods: {', '.join(COMPOSE_METHODS)}"
        )
    try:
        config = _load_config(args)
        if args.command == "compose":
            matrix = pipeline.run_compose(config, args.method)
            print(f"composed {matrix.rows} x {matrix.dim} ({matrix.method})")
        elif args.command == "train-kg":
            candidates = pipeline.run_train_kg(config)
            print(f"trained graph embedding; {candidates.rows} candidate triples")
        elif args.command == "cluster":
            reports = pipeline.run_cluster(config, svg=args.svg or None)
            for r in reports:
                print(f"{r.method}: kl_mean={r.kl_mean:.6f} kl_std={r.kl_std:.6f}")
        elif args.command == "align":
            linear_map = pipeline.run_align(config, args.method)
            print(
                f"trained map {linear_map.source_method} -> {linear_map.target_method}; "
                f"stopped at epoch {linear_map.stopped_epoch}"
            )
        elif args.command == "evaluate":
            reports = pipeline.run_evaluate(config, relation_level=args.relation_level)
            for r in reports:
                print(
                    f"{r.method}: hits@5={r.hits_at_5:.4f} hits@10={r.hits_at_10:.4f} "
                    f"avg_sim={r.avg_similarity:.4f} (n={r.n_test})"
                )
        elif args.command == "run-all":
            out = pipeline.run_full_experiment(config)
            print(f"experiment complete; reports in {out}")
    except SentAlignError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
