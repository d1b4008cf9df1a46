"""Command-line entry point: one command, one dump."""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .errors import ExtractorError
from .extract import extract
from .prompts import PromptSpec

_POOLING = {"default": "model_default", "last": "last", "mean": "mean"}
_MLM = {"cs": "c_plus_s", "sc": "s_plus_c"}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="condemb-extract",
        description="Encode a sentence-pair dataset into a CEMB embedding dump",
    )
    parser.add_argument("--dataset", required=True, help="JSONL dataset path")
    parser.add_argument("--model", required=True, help="hash://<dim> or st://<name>")
    parser.add_argument("--base", choices=["cond", "sent"], default="cond")
    parser.add_argument(
        "--mlm-concat", choices=sorted(_MLM), help="encode texts joined instead of instructed"
    )
    parser.add_argument("--pooling", choices=sorted(_POOLING), default="default")
    parser.add_argument("--out", required=True, help="output path for the .cemb dump")
    parser.add_argument("--batch", type=int, default=32)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    spec = PromptSpec(
        base=args.base,
        mlm_concat=_MLM[args.mlm_concat] if args.mlm_concat else None,
    )
    try:
        summary = extract(
            dataset=args.dataset,
            model_id=args.model,
            spec=spec,
            pooling=_POOLING[args.pooling],
            out=args.out,
            batch=args.batch,
        )
    except ExtractorError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(
        f"wrote {summary.n_rows} rows (dim {summary.dim}) for "
        f"{summary.n_records} records, {summary.n_conditions} conditions -> {args.out}"
    )
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
