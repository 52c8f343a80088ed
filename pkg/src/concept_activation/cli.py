"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data or validation error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import List, Optional, Sequence

from .codes import ConceptID
from .diversity import SessionHistory
from .evaluation import evaluate, load_corpus, report_render
from .kg_store import GraphError, load_graph
from .pipeline import ConfigError, Engine, EngineConfig, FileEvidenceProvider, load_config

CONFIG_ENV = "CONCEPT_ACTIVATION_CONFIG"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _parse_top_n(text: str) -> List[int]:
    try:
        ns = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if any(n < 1 for n in ns):
        raise argparse.ArgumentTypeError("every N must be >= 1")
    return ns


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="concept-activation", description="Sparse concept activation over a rare-disease knowledge graph.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def common(p, config=True):
        p.add_argument("--kg", required=True, help="knowledge graph file (JSON Lines)")
        if config:
            p.add_argument("--config", help=f"engine config JSON (default: ${CONFIG_ENV})")
            p.add_argument("--evidence", help="file-backed evidence snippets (JSON keyed by query hash)")

    for name in ("ingest", "validate"):
        p = sub.add_parser(name, help="load and validate a knowledge graph")
        common(p, config=False)

    p = sub.add_parser("activate", help="activate concepts for a query")
    common(p)
    p.add_argument("--query", required=True)
    p.add_argument("--lang", default="und")
    p.add_argument("--session", help="session file carrying previously activated concepts")
    p.add_argument("--format", choices=("table", "machine"), default="table")

    p = sub.add_parser("evaluate", help="score the engine on a labeled corpus")
    common(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--top-n", type=_parse_top_n, default=[3, 10])
    p.add_argument("--average", choices=("micro", "macro"), default="micro")
    p.add_argument("--format", choices=("table", "machine"), default="table")

    p = sub.add_parser("explain", help="show every intermediate score for one concept")
    common(p)
    p.add_argument("--query", required=True)
    p.add_argument("--concept", required=True)
    p.add_argument("--lang", default="und")
    p.add_argument("--session")
    p.add_argument("--format", choices=("table", "machine"), default="table")
    return parser


def _engine(args) -> Engine:
    graph = load_graph(args.kg)
    config_path = args.config or os.environ.get(CONFIG_ENV)
    config = load_config(config_path) if config_path else EngineConfig()
    provider = FileEvidenceProvider(args.evidence) if args.evidence else None
    return Engine(graph, config, provider)


def _render_explain(info: dict) -> str:
    lines = [f"query: {info['query']}", f"concept: {info['concept']}  {info['name']}", ""]
    lines.append(f"{'method':<13} {'score':>7} {'weight':>7} {'weighted':>8}  enabled")
    for method, r in info["raw"].items():
        lines.append(
            f"{method:<13} {r['value']:>7.4f} {r['weight']:>7.2f} {r['value'] * r['weight']:>8.4f}  "
            f"{'yes' if r['enabled'] else 'no'}"
        )
    lines.append("")
    lines.append(f"combined score:  {info['combined']:.4f}")
    lines.append(
        f"adjusted score:  {info['adjusted']:.4f}  (in session: {info['in_session']}, lambda={info['lambda_rd']})"
    )
    lines.append(f"threshold:       {info['threshold']}")
    c = info["complexity"]
    lines.append(
        "complexity:      length={length_factor:.4f} density={term_density:.4f} "
        "semantic={semantic_complexity:.4f} multisystem={multisystem_factor:.4f} total={total:.4f}".format(**c)
    )
    ki = info["k_inputs"]
    lines.append(
        f"k:               {info['k']}  (k_min={ki['k_min']}, k_max={ki['k_max']}, alpha={ki['alpha']}, "
        f"concepts={ki['concept_count']})"
    )
    lines.append(f"candidate:       {info['candidate']}")
    return "\n".join(lines)


def run(argv: Optional[Sequence[str]] = None, out=None, err=None) -> int:
    out = out if out is not None else sys.stdout
    err = err if err is not None else sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("concept-activation: a command is required (ingest, validate, activate, evaluate, explain)")
    except UsageError as exc:
        print(f"usage error: {exc}", file=err)
        return EXIT_USAGE

    try:
        if args.command in ("ingest", "validate"):
            graph = load_graph(args.kg)
            for layer, count in graph.layer_counts().items():
                print(f"{layer}: {count}", file=out)
            return EXIT_OK

        engine = _engine(args)
        if args.command == "activate":
            session = None
            if args.session:
                session = SessionHistory.load(args.session, lambda_rd=engine.config.lambda_rd)
            result = engine.activate(args.query, args.lang, session)
            if args.session:
                session.save(args.session)
            if args.format == "machine":
                print(result.to_json(), file=out)
            else:
                print(result.render_table(engine.graph), file=out)
                if result.context.sections:
                    print("", file=out)
                    print(result.context.render(), file=out)
        elif args.command == "evaluate":
            report = evaluate(load_corpus(args.corpus), engine, args.top_n, args.average)
            print(report_render(report, args.format), file=out)
        elif args.command == "explain":
            session = None
            if args.session:
                session = SessionHistory.load(args.session, lambda_rd=engine.config.lambda_rd)
            info = engine.explain(args.query, ConceptID.parse(args.concept), args.lang, session)
            if args.format == "machine":
                print(json.dumps(info, ensure_ascii=False, indent=2), file=out)
            else:
                print(_render_explain(info), file=out)
        return EXIT_OK
    except (GraphError, ConfigError, ValueError, KeyError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}".replace("\n", " "), file=err)
        return EXIT_DATA


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
