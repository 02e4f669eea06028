"""Gold-question benchmark: per-question and macro precision/recall/F1."""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, List, Mapping, Optional, Sequence

from .execute import QueryExecutionError
from .geometry import GeometryError
from .kb import KnowledgeBase
from .pipeline import ask
from .querygen import QuestionPattern
from .resources import Resources
from .terms import answer_key, serialize

STAGES = ("pattern-detect", "instance", "concept", "property", "generator", "executor")


class GoldFormatError(ValueError):
    pass


@dataclass(frozen=True)
class GoldQuestion:
    id: str
    text: str
    category: int
    pattern: Optional[QuestionPattern] = None
    answers: tuple = ()
    conllu: Optional[str] = None  # CoNLL-U block text, already read

    def __post_init__(self):
        if not 1 <= self.category <= 7:
            raise GoldFormatError(f"{self.id}: category must be in 1..7")


@dataclass(frozen=True)
class Metrics:
    precision: float
    recall: float
    f1: float

    def as_dict(self):
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1}


ZERO = Metrics(0.0, 0.0, 0.0)


def score_question(retrieved: Iterable, correct: Iterable) -> Metrics:
    got = {answer_key(x) for x in retrieved}
    want = {answer_key(x) for x in correct}
    hit = len(got & want)
    p = hit / len(got) if got else 0.0
    r = hit / len(want) if want else 0.0
    f1 = 0.0 if p + r == 0 else 2 * p * r / (p + r)
    return Metrics(p, r, f1)


def macro(rows: Sequence[Metrics]) -> Metrics:
    if not rows:
        return ZERO
    n = len(rows)
    return Metrics(sum(m.precision for m in rows) / n, sum(m.recall for m in rows) / n,
                   sum(m.f1 for m in rows) / n)


@dataclass
class QuestionReport:
    id: str
    letters: str
    pattern: Optional[str]
    answered: bool
    metrics: Metrics
    stage: Optional[str] = None
    retrieved: List[str] = field(default_factory=list)
    query: Optional[str] = None
    diagnostics: List[str] = field(default_factory=list)

    def as_dict(self):
        return {
            "letters": self.letters,
            "pattern": self.pattern,
            "answered": self.answered,
            "metrics": self.metrics.as_dict(),
            "failureStage": self.stage,
            "retrieved": self.retrieved,
            "query": self.query,
            "diagnostics": self.diagnostics,
        }


@dataclass
class BenchmarkReport:
    per_question: Mapping[str, QuestionReport]
    answered_count: int
    macro: Metrics

    def to_json(self) -> str:
        body = {
            "questionCount": len(self.per_question),
            "answeredCount": self.answered_count,
            "macro": self.macro.as_dict(),
            "perQuestion": {k: v.as_dict() for k, v in self.per_question.items()},
        }
        return json.dumps(body, indent=2, sort_keys=True, ensure_ascii=False) + "\n"

    def to_table(self) -> str:
        lines = [f"{'id':<8} {'pattern':<8} {'ans':<4} {'P':>6} {'R':>6} {'F1':>6}  stage"]
        for qid, r in self.per_question.items():
            m = r.metrics
            lines.append(f"{qid:<8} {r.pattern or '-':<8} {'yes' if r.answered else 'no':<4} "
                         f"{m.precision:6.3f} {m.recall:6.3f} {m.f1:6.3f}  {r.stage or ''}")
        m = self.macro
        lines.append(f"{'macro':<8} {'':<8} {self.answered_count:<4} "
                     f"{m.precision:6.3f} {m.recall:6.3f} {m.f1:6.3f}")
        return "\n".join(lines)


def load_gold(path) -> List[GoldQuestion]:
    path = Path(path)
    out, seen = [], set()
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
            qid = str(row["id"])
            pattern = QuestionPattern(row["pattern"]) if row.get("pattern") else None
            conllu = None
            if row.get("conllu"):
                conllu = (path.parent / row["conllu"]).read_text(encoding="utf-8")
            q = GoldQuestion(qid, row["text"], int(row["category"]), pattern,
                             tuple(row["answers"]), conllu)
        except (KeyError, ValueError, TypeError, OSError) as exc:
            raise GoldFormatError(f"{path}:{lineno}: {exc}") from exc
        if qid in seen:
            raise GoldFormatError(f"{path}:{lineno}: duplicate id {qid!r}")
        if not q.answers:
            raise GoldFormatError(f"{path}:{lineno}: gold answers must be non-empty")
        seen.add(qid)
        out.append(q)
    return out


def _missing_slot_stage(letters: str, expected: Optional[QuestionPattern]) -> str:
    if expected is None:
        return "pattern-detect"
    want, got = Counter(expected.value), Counter(letters)
    for letter, stage in (("I", "instance"), ("C", "concept"), ("P", "property")):
        if got[letter] < want[letter]:
            return stage
    return "pattern-detect"


def _display(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    return serialize(value)


def run_question(kb: KnowledgeBase, res: Resources, q: GoldQuestion, strict: bool = False) -> QuestionReport:
    compiled, ans = None, None
    try:
        compiled, ans = ask(q.text, kb, res, strict=strict, conllu=q.conllu)
    except (QueryExecutionError, GeometryError) as exc:
        return QuestionReport(q.id, "", None, False, ZERO, "executor", diagnostics=[str(exc)])
    pattern = compiled.pattern.value if compiled.pattern else None
    answered = compiled.pattern is not None and bool(compiled.queries)
    report = QuestionReport(q.id, compiled.letters, pattern, answered, ZERO,
                            diagnostics=list(compiled.diagnostics))
    if compiled.pattern is None:
        report.stage = _missing_slot_stage(compiled.letters, q.pattern)
        return report
    if not compiled.queries:
        report.stage = "generator"
        return report
    values = ans.values()
    report.retrieved = sorted(_display(v) for v in values)
    report.query = ans.query.render() if ans.query is not None else None
    for t in ans.traces:
        report.diagnostics.extend(t.diagnostics)
    report.metrics = score_question(values, q.answers)
    if report.metrics.f1 < 1.0:
        report.stage = "executor"
    return report


def run_benchmark(kb: KnowledgeBase, res: Resources, gold: Sequence[GoldQuestion],
                  strict: bool = False) -> BenchmarkReport:
    rows = {q.id: run_question(kb, res, q, strict) for q in gold}
    answered = sum(1 for r in rows.values() if r.answered)
    return BenchmarkReport(rows, answered, macro([r.metrics for r in rows.values()]))
