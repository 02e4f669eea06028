"""Question to answer: annotate, detect, instantiate, rank, execute."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

from .annotate import AnnotatedTree, AnnotationError, annotate, ingest_conllu, parse_question
from .execute import answer
from .kb import KnowledgeBase
from .querygen import (GeneratedQuery, LogicalForm, QuestionPattern, detect_pattern, instantiate,
                       letter_sequence, logical_form, rank)
from .resources import Resources


@dataclass
class Compiled:
    question: str
    tree: Optional[AnnotatedTree] = None
    letters: str = ""
    pattern: Optional[QuestionPattern] = None
    logical_form: Optional[LogicalForm] = None
    queries: List[GeneratedQuery] = field(default_factory=list)
    diagnostics: List[str] = field(default_factory=list)


def compile_question(text: str, kb: KnowledgeBase, res: Resources,
                     conllu: Optional[str] = None) -> Compiled:
    """Everything short of execution; annotation problems become diagnostics."""
    out = Compiled(text)
    try:
        tree = ingest_conllu(conllu) if conllu is not None else parse_question(text, res)
        tree = annotate(tree, kb, res)
    except AnnotationError as exc:
        out.diagnostics.append(f"annotation failed: {exc}")
        return out
    out.tree = tree
    out.letters = letter_sequence(tree)
    out.pattern = detect_pattern(tree)
    if out.pattern is None:
        out.diagnostics.append(f"no pattern matches letter sequence {out.letters!r}")
        return out
    out.logical_form = logical_form(out.pattern, tree)
    out.queries = rank(instantiate(out.pattern, tree, kb, res, out.diagnostics))
    return out


def ask(text: str, kb: KnowledgeBase, res: Resources, strict: bool = False,
        conllu: Optional[str] = None):
    compiled = compile_question(text, kb, res, conllu)
    return compiled, answer(kb, compiled.queries, strict=strict)
