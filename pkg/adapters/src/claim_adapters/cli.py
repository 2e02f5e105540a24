"""CLI: `claim-adapters embed` and `claim-adapters annotate`."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .annotate import LlmAnnotatorSpec, annotate_batch
from .embed import AdapterError, EmbedderSpec, embed_claims

logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")


def cmd_embed(args) -> int:
    spec = EmbedderSpec(
        model=args.model,
        text_field=args.text,
        batch_size=args.batch_size,
        device=args.device,
    )
    summary = embed_claims(args.claims, spec, args.out)
    print(
        f"embedded {summary['n_claims']} claims (dim {summary['dim']}, "
        f"{summary['fallbacks']} translation fallbacks) -> {args.out}"
    )
    return 0


def cmd_annotate(args) -> int:
    spec = LlmAnnotatorSpec(
        model=args.model,
        endpoint=args.endpoint,
        temperature=args.temperature,
        max_retries=args.max_retries,
    )
    result = annotate_batch(args.requests, spec, args.out, log_path=args.log)
    print(
        f"answered {result.n_responses}/{result.n_requests} requests -> {args.out}"
        + (f" ({len(result.failures)} failures)" if result.failures else "")
    )
    if result.failures and args.failures:
        with open(args.failures, "w", encoding="utf-8") as fh:
            for failure in result.failures:
                fh.write(json.dumps(failure, ensure_ascii=False) + "\n")
    return 0 if not result.failures else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="claim-adapters")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("embed", help="export claim embeddings")
    p.add_argument("--claims", required=True)
    p.add_argument("--model", required=True, help="sentence encoder name, or hash/<dim>")
    p.add_argument("--out", required=True)
    p.add_argument("--text", choices=["english", "original"], default="english")
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--device", default=None)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("annotate", help="answer a pair-annotation request file")
    p.add_argument("--requests", required=True)
    p.add_argument("--model", required=True, help="model name, or 'mock'")
    p.add_argument("--out", required=True)
    p.add_argument("--endpoint", default=None, help="chat-completions URL")
    p.add_argument("--temperature", type=float, default=0.0)
    p.add_argument("--max-retries", type=int, default=2)
    p.add_argument("--log", default=None, help="run log JSONL (prompts and raw outputs)")
    p.add_argument("--failures", default=None, help="failure list JSONL")
    p.set_defaults(func=cmd_annotate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (AdapterError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
