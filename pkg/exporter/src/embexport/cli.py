"""embexport command line: one job per invocation."""

from __future__ import annotations

import argparse
import sys

from .export import ExportError, ExportJob, export


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embexport",
        description="Extract pooled pretrained-backbone features from an image folder "
        "into an OTS1 embedding file.",
    )
    parser.add_argument("--model", required=True,
                        help="backbone name (e.g. resnet18, vit_b_16; timm names if installed)")
    parser.add_argument("--data", required=True,
                        help="image folder with one subdirectory per class")
    parser.add_argument("--split", default="train", help="split tag for the file header")
    parser.add_argument("--out", required=True, help="output embedding file")
    parser.add_argument("--batch", type=int, default=64, help="inference batch size")
    parser.add_argument("--device", default="cpu", help="device hint (cpu/cuda)")
    parser.add_argument("--no-pretrained", dest="pretrained", action="store_false",
                        help="use randomly initialized weights (debugging only)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    job = ExportJob(
        model=args.model,
        data_dir=args.data,
        out_path=args.out,
        split=args.split,
        batch_size=args.batch,
        device=args.device,
        pretrained=args.pretrained,
    )
    try:
        summary = export(job)
    except ExportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {summary['records']} records (dim {summary['dim']}, "
          f"{len(summary['classes'])} classes, {summary['backbone_tag']}) -> {summary['out']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
