"""Command line entry point: generate reels offline, serve the API, analyze exports.

Exit codes: 0 success, 1 runtime failure (typed errors, no traceback),
2 usage error (argparse prints the synopsis to stderr).
"""

from __future__ import annotations

import argparse
import sys

from .errors import ReeledError
from .llm import ReelSpec, get_provider


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reeled",
        description="Generate short educational reels from lecture videos "
                    "and analyze study exports.")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="run the pipeline synchronously")
    gen.add_argument("--source", help="source video path (omit for a plan-only run)")
    gen.add_argument("--captions", required=True, help="SRT or WebVTT caption file")
    gen.add_argument("--reels", type=int, default=5, help="number of reels (K)")
    gen.add_argument("--min", type=int, default=30, dest="min_s",
                     help="minimum reel duration, seconds")
    gen.add_argument("--max", type=int, default=60, dest="max_s",
                     help="maximum reel duration, seconds")
    gen.add_argument("--target", type=int, default=None, dest="target_s",
                     help="target reel duration, seconds (default midpoint)")
    gen.add_argument("--provider", default="mock", help="LLM provider id (mock, openai)")
    gen.add_argument("--model", default=None, help="model name for remote providers")
    gen.add_argument("--out", required=True, help="output directory")
    gen.add_argument("--layout", choices=["per_reel", "single_concat"],
                     default="per_reel")
    gen.add_argument("--mode", choices=["reencode", "copy"], default="reencode")
    gen.add_argument("--source-id", default=None)
    gen.add_argument("--now", default=None,
                     help="fix the manifest generated_at timestamp (for reproducible runs)")

    srv = sub.add_parser("serve", help="start the HTTP service")
    srv.add_argument("--host", default="127.0.0.1")
    srv.add_argument("--port", type=int, default=8000)
    srv.add_argument("--db", default="reeled.db", help="SQLite database path")
    srv.add_argument("--media-dir", default="media", help="artifact/media directory")
    srv.add_argument("--provider", default="mock")
    srv.add_argument("--tokens", default=None,
                     help="JSON file mapping bearer tokens to {user, role}")

    ana = sub.add_parser("analyze", help="compare groups over an exported CSV")
    ana.add_argument("--input", required=True, help="dataset CSV (service export)")
    ana.add_argument("--out", required=True,
                     help="report base path (writes <out>.json and <out>.txt)")
    return parser


def _cmd_generate(args: argparse.Namespace) -> int:
    from .pipeline import generate

    target = args.target_s if args.target_s is not None else (args.min_s + args.max_s) // 2
    spec = ReelSpec(reel_count=args.reels, min_duration_s=args.min_s,
                    max_duration_s=args.max_s, target_duration_s=target)
    provider = get_provider(args.provider, model=args.model)
    result = generate(args.captions, args.out, provider, spec=spec,
                      source_path=args.source, layout=args.layout,
                      mode=args.mode, source_id=args.source_id, now=args.now)
    print(f"wrote {result.manifest_path} "
          f"({len(result.plan.segments)} segments, "
          f"{len(result.artifacts)} media files, retries={result.retries})")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    import json

    import uvicorn

    from .service.app import ServiceConfig, create_app

    tokens = None
    if args.tokens:
        with open(args.tokens, encoding="utf-8") as fh:
            raw = json.load(fh)
        tokens = {tok: (entry["user"], entry["role"]) for tok, entry in raw.items()}
    config = ServiceConfig(db_path=args.db, media_root=args.media_dir,
                           provider_id=args.provider, tokens=tokens)
    app = create_app(config)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def _cmd_analyze(args: argparse.Namespace) -> int:
    from .report import analyze_csv, render_text, write_report

    rows = analyze_csv(args.input)
    json_path, text_path = write_report(rows, args.out)
    sys.stdout.write(render_text(rows))
    print(f"wrote {json_path} and {text_path}")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "generate":
            return _cmd_generate(args)
        if args.command == "serve":
            return _cmd_serve(args)
        return _cmd_analyze(args)
    except ReeledError as e:
        print(f"error [{e.code}]: {e}", file=sys.stderr)
        return 1
    except FileNotFoundError as e:
        print(f"error [not_found]: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
