"""Command-line entry point.

    embedding-exporter --dataset cifar10 --out cifar10-train.emb
    embedding-exporter --dataset ./images --backbone resnet18 --out dir.emb

Errors print one ``error: <category>: <message>`` line on stderr and
exit nonzero.
"""

from __future__ import annotations

import argparse
import sys

from .backbones import available_backbones
from .errors import ExportError
from .export import DEFAULT_BACKBONE, DEFAULT_BATCH_SIZE, ExportJob, export


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embedding-exporter",
        description="export image embeddings from a pretrained CNN "
                    "into the frozen embedding-file format",
    )
    parser.add_argument("--dataset", required=True,
                        help="dataset name (cifar10, cifar10-test) or image directory")
    parser.add_argument("--out", required=True, help="output embedding file")
    parser.add_argument("--batch-size", type=int, default=DEFAULT_BATCH_SIZE)
    parser.add_argument("--backbone", default=DEFAULT_BACKBONE,
                        help=f"feature extractor ({', '.join(available_backbones())})")
    parser.add_argument("--data-root", help="cache directory for named datasets")
    parser.add_argument("--fetch", action="store_true",
                        help="allow the one-time download of a named dataset")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        summary = export(ExportJob(
            dataset=args.dataset,
            out=args.out,
            backbone=args.backbone,
            batch_size=args.batch_size,
            data_root=args.data_root,
            fetch=args.fetch,
        ))
    except ExportError as exc:
        print(f"error: {exc.category}: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: io: {exc.filename or exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: io: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {summary.n_records} records to {summary.out}")
    print(f"backbone={summary.backbone} dim={summary.dim} "
          f"classes={summary.n_classes}")
    return 0


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
