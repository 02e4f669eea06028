"""Backtracking BGP evaluation with spatial and value filters."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Dict, Iterator, List, Optional, Sequence, Tuple, Union

from .geometry import GeometryError, cardinal, parse_wkt, min_distance_m, sf_crosses, sf_touches, sf_within
from .kb import KnowledgeBase
from .querygen import (FilterExpr, GeneratedQuery, SpatialFn, TriplePattern, ValueCmp,
                       ValueContains, Var, render_filter)
from .terms import LENGTH_UNITS, Iri, NumericLiteral, PlainLiteral, Term, WktLiteral, local_name, serialize

Binding = Dict[Var, Term]


class QueryExecutionError(RuntimeError):
    pass


@dataclass(frozen=True)
class Solutions:
    terms: Tuple[Term, ...]

    @property
    def empty(self) -> bool:
        return not self.terms

    def values(self) -> list:
        return list(self.terms)


@dataclass(frozen=True)
class BooleanResult:
    value: bool

    empty = False

    def values(self) -> list:
        return [self.value]


@dataclass(frozen=True)
class CountResult:
    value: int

    @property
    def empty(self) -> bool:
        return self.value == 0

    def values(self) -> list:
        return [self.value]


QueryResult = Union[Solutions, BooleanResult, CountResult]


@dataclass
class ExecutionTrace:
    """Per-pattern count of partial bindings that survived filtering."""

    pattern_counts: Counter = field(default_factory=Counter)
    diagnostics: List[str] = field(default_factory=list)


# --- filters -----------------------------------------------------------------------

_SPATIAL = {"within": sf_within, "crosses": sf_crosses, "touches": sf_touches}


def _geometry(term: Term):
    if not isinstance(term, WktLiteral):
        return None
    return term.geometry if term.geometry is not None else parse_wkt(term.raw)


def _cmp(left: Decimal, op: str, right: Decimal) -> bool:
    if op == "<":
        return left < right
    if op == ">":
        return left > right
    if op in ("≤", "<="):
        return left <= right
    if op in ("≥", ">="):
        return left >= right
    if op == "=":
        return left == right
    raise QueryExecutionError(f"unknown comparison operator {op!r}")


def eval_filter(f: FilterExpr, b: Binding) -> bool:
    """Raises GeometryError when a spatial argument lacks a usable geometry."""
    if isinstance(f, SpatialFn):
        ga, gb = _geometry(b[f.a]), _geometry(b[f.b])
        if ga is None or gb is None:
            missing = f.a if ga is None else f.b
            raise GeometryError(f"{missing} is bound to a term without a geometry")
        if f.fn in _SPATIAL:
            return _SPATIAL[f.fn](ga, gb)
        if f.fn == "distanceLE":
            return min_distance_m(ga, gb) <= float(f.threshold)
        if f.fn == "distanceGE":
            return min_distance_m(ga, gb) >= float(f.threshold)
        if f.fn == "cardinal":
            return cardinal(ga, gb, f.direction)
        raise QueryExecutionError(f"unknown filter function {f.fn!r}")
    if isinstance(f, ValueCmp):
        v = b[f.var]
        if not isinstance(v, NumericLiteral):
            return False
        left, right = v.value, f.constant
        if v.unit in LENGTH_UNITS and f.unit in LENGTH_UNITS:
            left, right = left * LENGTH_UNITS[v.unit], right * LENGTH_UNITS[f.unit]
        return _cmp(left, f.op, right)
    if isinstance(f, ValueContains):
        v = b[f.var]
        if isinstance(v, PlainLiteral):
            text = v.text
        elif isinstance(v, Iri):
            text = local_name(v.value).replace("_", " ")
        else:
            return False
        return f.substring.casefold() in text.casefold()
    raise QueryExecutionError(f"unknown filter expression {f!r}")


# --- join ---------------------------------------------------------------------------


def _resolve(x, b: Binding):
    return b.get(x) if isinstance(x, Var) else x


def _candidates(kb: KnowledgeBase, t: TriplePattern, b: Binding):
    s, p, o = (_resolve(x, b) for x in (t.subject, t.predicate, t.object))
    return kb.match(s, p, o)


def _count(kb: KnowledgeBase, t: TriplePattern, b: Binding) -> int:
    s, p, o = (_resolve(x, b) for x in (t.subject, t.predicate, t.object))
    return kb.match_count(s, p, o)


def _extend(t: TriplePattern, triple, b: Binding) -> Optional[Binding]:
    out = dict(b)
    for slot, value in zip((t.subject, t.predicate, t.object), triple):
        if isinstance(slot, Var):
            if slot in out and out[slot] != value:
                return None
            out[slot] = value
    return out


def solutions(kb: KnowledgeBase, bgp: Sequence[TriplePattern], filters: Sequence[FilterExpr] = (),
              trace: Optional[ExecutionTrace] = None) -> Iterator[Binding]:
    """Yield every binding of the BGP that passes all filters."""
    trace = trace if trace is not None else ExecutionTrace()
    patterns = list(enumerate(bgp))
    filter_vars = [(f, set(f.vars())) for f in filters]

    def ok(binding: Binding, done: set) -> bool:
        for f, vs in filter_vars:
            if id(f) in done or not vs <= binding.keys():
                continue
            done.add(id(f))
            try:
                if not eval_filter(f, binding):
                    return False
            except GeometryError as exc:
                trace.diagnostics.append(
                    f"dropped binding at FILTER({render_filter(f)}): {exc}")
                return False
        return True

    def step(binding: Binding, remaining, done: frozenset):
        if not remaining:
            yield binding
            return
        # most selective pattern first under the current binding
        idx, t = min(remaining, key=lambda it: (_count(kb, it[1], binding), it[0]))
        rest = [it for it in remaining if it[0] != idx]
        for triple in sorted(_candidates(kb, t, binding), key=lambda tr: tuple(map(serialize, tr))):
            nb = _extend(t, triple, binding)
            if nb is None:
                continue
            now_done = set(done)
            if not ok(nb, now_done):
                continue
            trace.pattern_counts[idx] += 1
            yield from step(nb, rest, frozenset(now_done))

    yield from step({}, patterns, frozenset())


def execute(kb: KnowledgeBase, q: GeneratedQuery, trace: Optional[ExecutionTrace] = None) -> QueryResult:
    for f in q.filters:
        if not isinstance(f, (SpatialFn, ValueCmp, ValueContains)):
            raise QueryExecutionError(f"unknown filter expression {f!r}")
    trace = trace if trace is not None else ExecutionTrace()
    it = solutions(kb, q.bgp, q.filters, trace)
    if q.form == "ASK":
        return BooleanResult(next(it, None) is not None)
    distinct = {b[q.target] for b in it}
    if q.form == "COUNT":
        return CountResult(len(distinct))
    return Solutions(tuple(sorted(distinct, key=serialize)))


# --- answering -------------------------------------------------------------------------


@dataclass
class Answer:
    result: Optional[QueryResult]
    query: Optional[GeneratedQuery] = None
    rank_index: Optional[int] = None
    executed: int = 0
    traces: List[ExecutionTrace] = field(default_factory=list)

    @property
    def answerable(self) -> bool:
        return self.result is not None

    def values(self) -> list:
        return self.result.values() if self.result is not None else []


def answer(kb: KnowledgeBase, ranked: Sequence[GeneratedQuery], strict: bool = False) -> Answer:
    """Run the head query, falling through empty results unless strict."""
    if not ranked:
        return Answer(None)
    out = Answer(None)
    for i, q in enumerate(ranked):
        trace = ExecutionTrace()
        result = execute(kb, q, trace)
        out = Answer(result, q, i, i + 1, out.traces + [trace])
        if strict or not result.empty:
            break
    return out
