"""hsdextract: dump per-layer hidden states to HSD1, optionally verify fidelity."""

from __future__ import annotations

import argparse
import logging
import sys

from .cleaning import load_stopwords, remove_stopwords
from .extract import DEFAULT_MODEL, Encoder, ExtractionSpec, extract, read_texts
from .hsd1 import DumpError
from .verify import verify


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hsdextract", description=__doc__)
    parser.add_argument("--model", default=DEFAULT_MODEL, help="model id or local path")
    parser.add_argument("--input", required=True, help="corpus file (.txt lines, .csv, or .jsonl)")
    parser.add_argument("--output", required=True, help="HSD1 dump path")
    parser.add_argument("--max-tokens", type=int, default=384)
    parser.add_argument("--batch-size", type=int, default=32)
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--text-column", default="text", help="text column for csv/jsonl inputs")
    parser.add_argument(
        "--remove-stopwords",
        action="store_true",
        help="clean the text before encoding (the 'without stop words' arm)",
    )
    parser.add_argument(
        "--verify-probes",
        type=int,
        default=0,
        metavar="N",
        help="after extraction, check the first N sentences' fidelity against the encoder",
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        texts = read_texts(args.input, args.text_column)
        if args.remove_stopwords:
            stop = load_stopwords()
            texts = [remove_stopwords(t, stop) for t in texts]
        spec = ExtractionSpec(
            input=args.input,
            output=args.output,
            model_id=args.model,
            max_tokens=args.max_tokens,
            batch_size=args.batch_size,
            device=args.device,
            text_column=args.text_column,
        )
        encoder = Encoder(spec.model_id, spec.device)
        extract(spec, encoder=encoder, texts=texts)
        print(f"wrote {args.output} ({len(texts)} docs)")
        if args.verify_probes > 0:
            report = verify(args.output, texts[: args.verify_probes], encoder, spec.max_tokens)
            print(report.summary())
            if not report.passed:
                return 1
        return 0
    except (DumpError, FileNotFoundError, RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
