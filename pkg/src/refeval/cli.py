"""Command-line surface: evaluate, validate, stats, synth, baseline, figure6, serve.

Exit codes are deterministic: 0 success, 1 evaluation/validation failures,
2 usage or format errors. The commands are thin wrappers over the library;
`serve` starts the HTTP service exposing the same operations.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import io as refio
from .datastats import compute_stats
from .metrics import DENSITY_NUMERATORS, aggregate
from .report import fmt_pct, render_buckets, render_table
from .synth import BaselineKind, SynthConfig, generate, recall_by_instance_count, run_baseline
from .types import EvalError, Subset, validate_dataset

logger = logging.getLogger(__name__)

USAGE_ERROR = 2
FAILURE = 1
OK = 0


def _default_workers() -> int:
    raw = os.environ.get("REFEVAL_WORKERS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        logger.warning("ignoring non-integer REFEVAL_WORKERS=%r", raw)
        return 1


def _load_dataset(path: str):
    try:
        return refio.read_dataset(path)
    except EvalError as e:
        raise EvalError(e.code, f"{path}: {e.args[0]}") from e


def _load_predictions(path: str, dataset):
    try:
        return refio.read_predictions(path, dataset)
    except EvalError as e:
        raise EvalError(e.code, f"{path}: {e.args[0]}") from e


def _print_violations(violations, path: str) -> None:
    for v in violations:
        where = f"image={v.image_id}" + (f" referring={v.referring_id}" if v.referring_id else "")
        detail = f" ({v.detail})" if v.detail else ""
        print(f"{path}: [{v.code}] {where}{detail}", file=sys.stderr)


def cmd_evaluate(args: argparse.Namespace) -> int:
    dataset = _load_dataset(args.dataset)
    violations = validate_dataset(dataset)
    if violations:
        _print_violations(violations, args.dataset)
        print(f"dataset invalid: {len(violations)} violations", file=sys.stderr)
        return FAILURE
    predictions = _load_predictions(args.predictions, dataset)
    if args.point_eval:
        boxed = [p.referring_id for p in predictions if p.boxes]
        if boxed:
            raise EvalError(
                "SCHEMA_ERROR",
                f"--point-eval requires point or rejection payloads, but "
                f"{len(boxed)} predictions carry boxes (first: {boxed[0]!r})",
            )
    subsets = {Subset(args.subset)} if args.subset else None
    report = aggregate(
        dataset,
        predictions,
        density_numerator=args.density_numerator,
        subsets=subsets,
        workers=args.workers,
    )
    table = render_table(report)
    print(table, end="")
    if args.table:
        Path(args.table).write_text(table, encoding="utf-8")
    if args.report:
        refio.write_json(refio.report_to_dict(report), args.report)
    return OK


def cmd_validate(args: argparse.Namespace) -> int:
    dataset = _load_dataset(args.dataset)
    violations = validate_dataset(dataset)
    if violations:
        _print_violations(violations, args.dataset)
        print(f"invalid: {len(violations)} violations", file=sys.stderr)
        return FAILURE
    print(f"ok: {len(dataset)} images, "
          f"{sum(len(i.referrings) for i in dataset)} referrings, no violations")
    return OK


def cmd_stats(args: argparse.Namespace) -> int:
    dataset = _load_dataset(args.dataset)
    stats = compute_stats(dataset)
    print(f"images:                {stats.n_images}")
    print(f"referrings:            {stats.n_referrings}")
    print(f"vocab size:            {stats.vocab_size}")

    def opt(value):
        return "-" if value is None else f"{value:.4f}"

    print(f"avg words/ref:         {opt(stats.avg_words_per_ref)}")
    print(f"avg boxes/ref:         {opt(stats.avg_boxes_per_ref)}")
    print(f"avg persons/image:     {opt(stats.avg_persons_per_image)}")
    if stats.avg_image_size is not None:
        w, h = stats.avg_image_size
        print(f"avg image size:        {w:.1f}x{h:.1f}")
    for s in stats.per_subset:
        print(
            f"  {s.subset.value:<12} refs={s.n_referrings:<6} "
            f"avg boxes/ref={s.avg_boxes_per_ref:.4f} avg words/ref={s.avg_words_per_ref:.4f}"
        )
    if args.report:
        refio.write_json(refio.stats_to_dict(stats), args.report)
    if args.export_hists:
        prefix = args.export_hists
        refio.write_histogram_csv(
            stats.persons_per_image_hist, f"{prefix}persons_per_image.csv", "persons_per_image"
        )
        refio.write_histogram_csv(
            stats.boxes_per_ref_hist, f"{prefix}boxes_per_ref.csv", "boxes_per_ref"
        )
    return OK


def _config_from_args(args: argparse.Namespace) -> SynthConfig:
    if args.config:
        raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
        if not isinstance(raw, dict):
            raise EvalError("SCHEMA_ERROR", f"{args.config}: config must be a JSON object")
        kwargs = {}
        for key in (
            "seed",
            "n_images",
            "persons_per_image",
            "gts_per_ref",
            "refs_per_image",
            "image_size",
            "jitter",
            "rejection_fraction",
        ):
            if key in raw:
                value = raw[key]
                kwargs[key] = tuple(value) if isinstance(value, list) else value
        unknown = set(raw) - set(kwargs)
        if unknown:
            raise EvalError("SCHEMA_ERROR", f"{args.config}: unknown config keys {sorted(unknown)}")
        return SynthConfig(**kwargs)
    return SynthConfig(
        seed=args.seed,
        n_images=args.images,
        persons_per_image=tuple(args.persons),
        gts_per_ref=tuple(args.gts),
        refs_per_image=tuple(args.refs),
        image_size=tuple(args.size),
        jitter=args.jitter,
        rejection_fraction=args.rejection_fraction,
    )


def cmd_synth(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    dataset, ledger = generate(cfg)
    refio.write_dataset(dataset, args.out)
    ledger_path = args.ledger or f"{args.out}.ledger.json"
    refio.write_json(refio.ledger_to_dict(ledger), ledger_path)
    print(
        f"wrote {ledger.n_images} images / {ledger.n_referrings} referrings to {args.out} "
        f"(ledger: {ledger_path})"
    )
    return OK


def cmd_baseline(args: argparse.Namespace) -> int:
    kind = BaselineKind.parse(args.kind)
    dataset = _load_dataset(args.dataset)
    predictions = run_baseline(kind, dataset, seed=args.seed)
    refio.write_predictions(predictions, args.out)
    print(f"wrote {len(predictions)} {kind} predictions to {args.out}")
    return OK


def cmd_figure6(args: argparse.Namespace) -> int:
    dataset = _load_dataset(args.dataset)
    predictions = _load_predictions(args.predictions, dataset)
    buckets = recall_by_instance_count(
        dataset, predictions, density_numerator=args.density_numerator
    )
    print(render_buckets(buckets), end="")
    if args.out:
        refio.write_buckets_csv(buckets, args.out)
    return OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="refeval",
        description="Multi-instance referring-expression detection evaluation toolkit.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evaluate", help="score a prediction file against a dataset")
    p.add_argument("dataset", help="dataset file (one JSON image record per line)")
    p.add_argument("predictions", help="prediction file (one JSON record per line)")
    p.add_argument("--report", help="write the machine-readable report JSON here")
    p.add_argument("--table", help="write the rendered text table here")
    p.add_argument("--point-eval", action="store_true",
                   help="require the point-in-mask protocol (reject box payloads)")
    p.add_argument("--density-numerator", choices=DENSITY_NUMERATORS,
                   default="image-persons",
                   help="density penalty numerator (default: image-persons)")
    p.add_argument("--subset", choices=[s.value for s in Subset],
                   help="evaluate only this subset")
    p.add_argument("--workers", type=int, default=_default_workers(),
                   help="worker threads for per-referring fan-out "
                        "(default: $REFEVAL_WORKERS or 1; output is identical for any value)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("validate", help="check a dataset file against all invariants")
    p.add_argument("dataset")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("stats", help="dataset statistics (sizes, vocabulary, histograms)")
    p.add_argument("dataset")
    p.add_argument("--report", help="write the statistics JSON here")
    p.add_argument("--export-hists", metavar="PREFIX",
                   help="write <PREFIX>persons_per_image.csv and <PREFIX>boxes_per_ref.csv")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("synth", help="generate a seeded synthetic dataset + ledger")
    p.add_argument("out", help="output dataset file")
    p.add_argument("--config", help="JSON config file (overrides the flags below)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--images", type=int, default=10)
    p.add_argument("--persons", type=int, nargs=2, default=[4, 8], metavar=("LO", "HI"))
    p.add_argument("--gts", type=int, nargs=2, default=[1, 3], metavar=("LO", "HI"))
    p.add_argument("--refs", type=int, nargs=2, default=[1, 3], metavar=("LO", "HI"))
    p.add_argument("--size", type=int, nargs=2, default=[640, 480], metavar=("W", "H"))
    p.add_argument("--jitter", type=float, default=0.0)
    p.add_argument("--rejection-fraction", type=float, default=0.0)
    p.add_argument("--ledger", help="ledger path (default: <out>.ledger.json)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("baseline", help="run a reference baseline over a dataset")
    p.add_argument("kind", help="all_persons | oracle | top_k:K | empty | jittered_oracle:J")
    p.add_argument("dataset")
    p.add_argument("out", help="output prediction file")
    p.add_argument("--seed", type=int, default=0, help="seed for jittered_oracle")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("figure6", help="recall/precision bucketed by ground-truth count")
    p.add_argument("dataset")
    p.add_argument("predictions")
    p.add_argument("--out", help="write the bucket table as CSV here")
    p.add_argument("--density-numerator", choices=DENSITY_NUMERATORS,
                   default="image-persons")
    p.set_defaults(func=cmd_figure6)

    p = sub.add_parser("serve", help="start the HTTP evaluation service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except EvalError as e:
        print(f"error: {e}", file=sys.stderr)
        return USAGE_ERROR
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
