"""``geoqa`` command line: ask, compile, eval, interlink, kb."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import List, Optional

from .evaluate import GoldFormatError, load_gold, run_benchmark
from .execute import QueryExecutionError
from .interlink import InterlinkConfig, interlink, read_class_pairs, write_links, write_review
from .kb import KbLoadError, KnowledgeBase
from .pipeline import ask, compile_question
from .resources import Resources, default_data_dir
from .terms import compact, serialize

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="geoqa", description="Geospatial question answering over linked data.")
    p.add_argument("--data", help="data directory holding kb/ and tables/ (default: bundled fixture, "
                                  "or $GEOQA_DATA)")
    p.add_argument("--tables", help="lookup-table directory (default: <data>/tables)")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    a = sub.add_parser("ask", help="answer one question")
    a.add_argument("question")
    a.add_argument("--kb", help="knowledge-base directory (default: <data>/kb)")
    a.add_argument("--strict", action="store_true", help="execute only the top-ranked query")
    a.add_argument("--explain", action="store_true", help="print the executed query and per-pattern counts")

    c = sub.add_parser("compile", help="show pattern, logical form and ranked queries")
    c.add_argument("question")
    c.add_argument("--kb")

    e = sub.add_parser("eval", help="run a gold benchmark")
    e.add_argument("--kb")
    e.add_argument("--gold", help="gold JSON-lines file (default: <data>/gold.jsonl)")
    e.add_argument("--strict", action="store_true")
    e.add_argument("--report", help="where to write the JSON report (default: stdout table only)")

    i = sub.add_parser("interlink", help="discover owl:sameAs links between two sources")
    i.add_argument("--left", required=True, help="N-Triples file of the left source")
    i.add_argument("--right", required=True, help="N-Triples file of the right source")
    i.add_argument("--left-source", default="gadm")
    i.add_argument("--right-source", default="osm")
    i.add_argument("--classes", required=True, help="TSV of leftClass<TAB>rightClass")
    i.add_argument("--sim", type=float, default=0.85)
    i.add_argument("--dist", type=float, default=1000.0)
    i.add_argument("--out", required=True, help="output N-Triples file for accepted links")
    i.add_argument("--review", required=True, help="output CSV for near-miss candidates")

    k = sub.add_parser("kb", help="knowledge-base utilities")
    k.add_argument("action", choices=["stat"])
    k.add_argument("--kb")
    return p


def _paths(args):
    data = Path(args.data) if args.data else default_data_dir()
    kb_dir = Path(getattr(args, "kb", None) or data / "kb")
    tables = Path(args.tables) if args.tables else data / "tables"
    return data, kb_dir, tables


def _load(args):
    _, kb_dir, tables = _paths(args)
    try:
        kb = KnowledgeBase.load(kb_dir)
        res = Resources.load(tables)
    except (OSError, ValueError) as exc:
        raise KbLoadError(str(exc)) from exc
    return kb, res


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    return serialize(value)


def cmd_ask(args, out) -> int:
    kb, res = _load(args)
    compiled, ans = ask(args.question, kb, res, strict=args.strict)
    if not ans.answerable:
        out.write("not answerable\n")
        for d in compiled.diagnostics:
            out.write(f"# {d}\n")
        return EXIT_OK
    for v in ans.values():
        out.write(_fmt(v) + "\n")
    q = ans.query
    out.write(f"# pattern {compiled.pattern.value}; query {ans.rank_index + 1}/{len(compiled.queries)} "
              f"({q.variant}); " + ", ".join(f"{slot}={compact(iri.value)}" for slot, _, iri in q.provenance)
              + "\n")
    if args.explain:
        out.write(q.render() + "\n")
        trace = ans.traces[-1]
        for idx, t in enumerate(q.bgp):
            out.write(f"# pattern {idx}: {trace.pattern_counts.get(idx, 0)} partial bindings\n")
        for d in trace.diagnostics:
            out.write(f"# {d}\n")
    return EXIT_OK


def cmd_compile(args, out) -> int:
    kb, res = _load(args)
    c = compile_question(args.question, kb, res)
    out.write(f"letters: {c.letters}\n")
    out.write(f"pattern: {c.pattern.value if c.pattern else 'none'}\n")
    if c.logical_form:
        out.write(f"logical form: {c.logical_form}\n")
    for n, q in enumerate(c.queries, start=1):
        out.write(f"\n-- query {n} ({q.variant}, estCard={float(q.est_card):.6g})\n{q.render()}\n")
    for d in c.diagnostics:
        out.write(f"# {d}\n")
    return EXIT_OK


def cmd_eval(args, out) -> int:
    kb, res = _load(args)
    data, _, _ = _paths(args)
    gold_path = Path(args.gold) if args.gold else data / "gold.jsonl"
    try:
        gold = load_gold(gold_path)
    except (OSError, GoldFormatError) as exc:
        raise KbLoadError(str(exc)) from exc
    report = run_benchmark(kb, res, gold, strict=args.strict)
    out.write(report.to_table() + "\n")
    if args.report:
        Path(args.report).write_text(report.to_json(), encoding="utf-8")
    return EXIT_OK


def cmd_interlink(args, out) -> int:
    try:
        left = KnowledgeBase.load_files([(args.left, args.left_source)])
        right = KnowledgeBase.load_files([(args.right, args.right_source)])
        pairs = read_class_pairs(args.classes)
    except (OSError, ValueError) as exc:
        raise KbLoadError(str(exc)) from exc
    try:
        cfg = InterlinkConfig(pairs, args.sim, args.dist)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    result = interlink(left, right, cfg)
    write_links(args.out, result.links)
    write_review(args.review, result.candidates)
    out.write(f"{len(result.links)} links, {len(result.review)} for review, "
              f"{len(result.skipped)} pairs skipped (no geometry)\n")
    return EXIT_OK


def cmd_kb(args, out) -> int:
    kb, _ = _load(args)
    st = kb.stats
    out.write(f"triples\t{st.total_triples}\n")
    out.write(f"subjects\t{st.distinct_subjects}\n")
    out.write(f"predicates\t{len(st.predicate_count)}\n")
    for src in sorted(st.source_count):
        out.write(f"source:{src}\t{st.source_count[src]}\n")
    out.write(f"rejected\t{len(kb.rejected)}\n")
    return EXIT_OK


COMMANDS = {"ask": cmd_ask, "compile": cmd_compile, "eval": cmd_eval,
            "interlink": cmd_interlink, "kb": cmd_kb}


def main(argv: Optional[List[str]] = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise UsageError(build_parser().format_usage())
        return COMMANDS[args.command](args, out)
    except UsageError as exc:
        err.write(str(exc).rstrip("\n") + "\n")
        return EXIT_USAGE
    except KbLoadError as exc:
        err.write(f"geoqa: data load error: {exc}\n")
        return EXIT_DATA
    except QueryExecutionError as exc:
        err.write(f"geoqa: {exc}\n")
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
