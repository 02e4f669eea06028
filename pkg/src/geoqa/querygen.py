"""Pattern detection, template instantiation, cardinality ranking and logical forms."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from decimal import Decimal
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .annotate import (AnnotatedTree, Comparison, Concept, Instance, Property,
                       Relation, Span)
from .kb import SOURCE_PRIORITY, KbStats, KnowledgeBase
from .resources import CARDINALS, Resources, SpatialRelationKind
from .terms import (AS_WKT, HAS_GEOMETRY, OWL_SAMEAS, RDF_TYPE, Iri, Term, compact,
                    local_name, serialize)


class QuestionPattern(str, Enum):
    IP = "IP"
    CRI = "CRI"
    CRIRI = "CRIRI"
    CRC = "CRC"
    CRCRI = "CRCRI"
    IRI = "IRI"
    NCRI = "NCRI"
    PCRI = "PCRI"
    PCRIRI = "PCRIRI"


_ALIASES = {"PI": QuestionPattern.IP}

VARIANTS = ("geo_v1", "geo_v2", "qualitative")
_VARIANT_RANK = {v: i for i, v in enumerate(VARIANTS)}
SPATIAL_FNS = ("within", "crosses", "touches", "distanceLE", "distanceGE", "cardinal")


@dataclass(frozen=True, order=True)
class Var:
    name: str

    def __str__(self):
        return "?" + self.name


Slot = Union[Var, Iri]


@dataclass(frozen=True)
class TriplePattern:
    subject: Slot
    predicate: Slot
    object: Union[Var, Term]

    def vars(self) -> List[Var]:
        return [x for x in (self.subject, self.predicate, self.object) if isinstance(x, Var)]


@dataclass(frozen=True)
class SpatialFn:
    fn: str
    a: Var
    b: Var
    threshold: Optional[Decimal] = None
    direction: Optional[str] = None

    def __post_init__(self):
        if self.fn not in SPATIAL_FNS:
            raise ValueError(f"unknown spatial function {self.fn!r}")
        if self.fn in ("distanceLE", "distanceGE") and self.threshold is None:
            raise ValueError(f"{self.fn} needs a threshold")
        if self.fn == "cardinal" and self.direction is None:
            raise ValueError("cardinal needs a direction")

    def vars(self) -> List[Var]:
        return [self.a, self.b]


@dataclass(frozen=True)
class ValueCmp:
    var: Var
    op: str
    constant: Decimal
    unit: Optional[str] = None

    def vars(self) -> List[Var]:
        return [self.var]


@dataclass(frozen=True)
class ValueContains:
    var: Var
    substring: str

    def vars(self) -> List[Var]:
        return [self.var]


FilterExpr = Union[SpatialFn, ValueCmp, ValueContains]


@dataclass(frozen=True)
class GeneratedQuery:
    form: str  # SELECT | ASK | COUNT
    bgp: Tuple[TriplePattern, ...]
    filters: Tuple[FilterExpr, ...] = ()
    target: Optional[Var] = None
    provenance: Tuple[Tuple[str, str, Iri], ...] = ()  # (slot, source, IRI)
    variant: str = "geo_v1"
    pattern: Optional[QuestionPattern] = None
    est_card: Fraction = Fraction(0)

    def __post_init__(self):
        if self.form not in ("SELECT", "ASK", "COUNT"):
            raise ValueError(f"unknown query form {self.form!r}")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        bound = {v for t in self.bgp for v in t.vars()}
        if self.form == "ASK":
            if self.target is not None:
                raise ValueError("ASK queries have no target variable")
        elif self.target not in bound:
            raise ValueError(f"target {self.target} does not occur in the BGP")
        for f in self.filters:
            missing = [v for v in f.vars() if v not in bound]
            if missing:
                raise ValueError(f"filter variable {missing[0]} not bound by the BGP")
        if self.est_card < 0:
            raise ValueError("estimated cardinality must be non-negative")

    def with_estimate(self, est: Fraction) -> "GeneratedQuery":
        return GeneratedQuery(self.form, self.bgp, self.filters, self.target,
                              self.provenance, self.variant, self.pattern, est)

    def render(self) -> str:
        return render_query(self)


@dataclass(frozen=True)
class LogicalForm:
    text: str

    def __str__(self):
        return self.text


# --- pattern detection ---------------------------------------------------------


def bind_comparisons(tree: AnnotatedTree) -> Dict[Span, Comparison]:
    """Attach each Comparison to the nearest Property span (preceding wins ties)."""
    props = [s for s, _ in tree.of_type(Property)]
    out: Dict[Span, Comparison] = {}
    for span, cmp_ in tree.of_type(Comparison):
        if not props:
            break
        best = min(props, key=lambda p: (abs(p[0] - span[0]), p[0] > span[0]))
        out.setdefault(best, cmp_)
    return out


def _answer_property(tree: AnnotatedTree) -> Optional[Tuple[Span, Property]]:
    bound = bind_comparisons(tree)
    anchors = [s[0] for s, a in tree.ordered() if isinstance(a, (Concept, Instance))]
    first = min(anchors) if anchors else None
    for span, prop in tree.of_type(Property):
        if (prop.value_constraint is None and span not in bound
                and first is not None and span[0] < first):
            return span, prop
    return None


def letter_sequence(tree: AnnotatedTree) -> str:
    answer = _answer_property(tree)
    letters = []
    for span, a in tree.ordered():
        if isinstance(a, Property):
            if answer is not None and span == answer[0]:
                letters.append("P")
        elif isinstance(a, Comparison):
            continue
        else:
            letters.append(a.letter)
    return "".join(letters)


def detect_pattern(tree: AnnotatedTree) -> Optional[QuestionPattern]:
    """Match the surface-order letter sequence against the nine patterns."""
    try:
        seq = letter_sequence(tree)
    except Exception:  # never raise on odd trees
        return None
    if seq in _ALIASES:
        return _ALIASES[seq]
    try:
        return QuestionPattern(seq)
    except ValueError:
        return None


# --- template instantiation ------------------------------------------------------


@dataclass
class _Slots:
    concepts: List[Concept]
    instances: List[Instance]
    relations: List[Relation]
    answer: Optional[Property]
    conditions: List[Tuple[Property, Optional[Comparison]]]


def _slots(tree: AnnotatedTree) -> _Slots:
    answer = _answer_property(tree)
    bound = bind_comparisons(tree)
    conditions = [(p, bound.get(s)) for s, p in tree.of_type(Property)
                  if answer is None or s != answer[0]]
    return _Slots(
        concepts=[a for _, a in tree.of_type(Concept)],
        instances=[a for _, a in tree.of_type(Instance)],
        relations=[a for _, a in tree.of_type(Relation)],
        answer=answer[1] if answer else None,
        conditions=conditions,
    )


_NEEDS = {
    QuestionPattern.IP: (0, 1, 0), QuestionPattern.CRI: (1, 1, 1),
    QuestionPattern.CRIRI: (1, 2, 2), QuestionPattern.CRC: (2, 0, 1),
    QuestionPattern.CRCRI: (2, 1, 2), QuestionPattern.IRI: (0, 2, 1),
    QuestionPattern.NCRI: (1, 1, 1), QuestionPattern.PCRI: (1, 1, 1),
    QuestionPattern.PCRIRI: (1, 2, 2),
}


def _spatial(rel: Relation, a: Var, b: Var, concept: Optional[Iri], res: Resources) -> SpatialFn:
    k = rel.kind
    if k == SpatialRelationKind.WITHIN:
        return SpatialFn("within", a, b)
    if k == SpatialRelationKind.CROSSES:
        return SpatialFn("crosses", a, b)
    if k == SpatialRelationKind.BORDERS:
        return SpatialFn("touches", a, b)
    if k == SpatialRelationKind.NEAR:
        name = local_name(concept.value) if concept is not None else None
        return SpatialFn("distanceLE", a, b, threshold=res.near_threshold(name))
    if k == SpatialRelationKind.AT_MOST:
        return SpatialFn("distanceLE", a, b, threshold=rel.distance_m)
    if k == SpatialRelationKind.AT_LEAST:
        return SpatialFn("distanceGE", a, b, threshold=rel.distance_m)
    if k in CARDINALS:
        return SpatialFn("cardinal", a, b, direction=k.value)
    raise ValueError(f"no spatial function for {k}")


def _geom_chain(node: Slot, prefix: str) -> Tuple[List[TriplePattern], Var]:
    g, w = Var(prefix + "Geom"), Var(prefix + "WKT")
    return [TriplePattern(node, HAS_GEOMETRY, g), TriplePattern(g, AS_WKT, w)], w


def _instance_options(inst: Instance, kb: KnowledgeBase) -> List[Tuple[str, str, Iri]]:
    """(variant, source, IRI) choices for one instance slot in a geometric query."""
    opts = []
    for source, iri in inst.resources:
        if kb.geometry_of(iri) is not None:
            opts.append(("geo_v1", source, iri))
        elif any(kb.geometry_of(o) is not None for o in kb.same_as(iri) if o != iri):
            opts.append(("geo_v2", source, iri))
    return opts


def _instance_chain(opt: Tuple[str, str, Iri], prefix: str) -> Tuple[List[TriplePattern], Var]:
    variant, _, iri = opt
    if variant == "geo_v1":
        return _geom_chain(iri, prefix)
    node = Var(prefix + "Instance")
    chain, wkt = _geom_chain(node, prefix)
    return [TriplePattern(node, OWL_SAMEAS, iri)] + chain, wkt


def _condition_clauses(conditions, subject: Var, via_link: bool):
    bgp, filters = [], []
    for n, (prop, cmp_) in enumerate(conditions):
        node: Slot = subject
        if via_link:
            node = Var(f"xLink{n}")
            bgp.append(TriplePattern(subject, OWL_SAMEAS, node))
        v = Var(f"v{n}")
        bgp.append(TriplePattern(node, prop.property, v))
        if prop.value_constraint:
            filters.append(ValueContains(v, prop.value_constraint))
        if cmp_ is not None:
            filters.append(ValueCmp(v, cmp_.op, cmp_.value, cmp_.unit))
    return bgp, filters


def _geo_classes(c: Concept) -> List[Tuple[str, Iri]]:
    return [(s, i) for s, i in c.classes if s in ("gadm", "osm")]


def instantiate(pattern: QuestionPattern, tree: AnnotatedTree, kb: KnowledgeBase,
                res: Resources, diagnostics: Optional[List[str]] = None) -> List[GeneratedQuery]:
    """Fill every applicable template variant; estimates are attached."""
    diag = diagnostics if diagnostics is not None else []
    s = _slots(tree)
    need_c, need_i, need_r = _NEEDS[pattern]
    if len(s.concepts) < need_c or len(s.instances) < need_i or len(s.relations) < need_r:
        diag.append(f"{pattern.value}: unresolved slot (concepts={len(s.concepts)}, "
                    f"instances={len(s.instances)}, relations={len(s.relations)})")
        return []
    if pattern in (QuestionPattern.IP, QuestionPattern.PCRI, QuestionPattern.PCRIRI) and s.answer is None:
        diag.append(f"{pattern.value}: no answer property")
        return []
    builder = _BUILDERS[pattern]
    queries = builder(pattern, s, kb, res, diag)
    unique: Dict[str, GeneratedQuery] = {}
    for q in queries:
        q = q.with_estimate(estimate_cardinality(q, kb.stats))
        unique.setdefault(render_query(q) + q.variant, q)
    if not unique:
        diag.append(f"{pattern.value}: no template variant could be filled")
    return list(unique.values())


X, Y = Var("x"), Var("y")


def _build_ip(pattern, s: _Slots, kb, res, diag):
    out = []
    for source, iri in s.instances[0].resources:
        if source != "dbpedia":
            continue
        bgp = (TriplePattern(iri, s.answer.property, X),)
        out.append(GeneratedQuery("SELECT", bgp, (), X,
                                  (("I", source, iri), ("P", "dbpedia", s.answer.property)),
                                  "qualitative", pattern))
    if not out:
        diag.append("IP: instance has no DBpedia resource")
    return out


def _build_cri(pattern, s: _Slots, kb, res, diag):
    concept, inst, rel = s.concepts[0], s.instances[0], s.relations[0]
    form = "COUNT" if pattern == QuestionPattern.NCRI else "SELECT"
    projecting = pattern == QuestionPattern.PCRI
    out = []
    # qualitative: relation as a DBpedia data property
    for c_src, cls in concept.classes:
        if c_src != "dbpedia":
            continue
        props = res.dpr_properties(local_name(cls.value), rel.kind)
        for i_src, iri in inst.resources:
            if i_src != "dbpedia":
                continue
            for dp in props:
                bgp = [TriplePattern(X, RDF_TYPE, cls), TriplePattern(X, dp, iri)]
                extra, filters = _condition_clauses(s.conditions, X, via_link=False)
                bgp += extra
                target = X
                if projecting:
                    target = Var("property")
                    bgp.append(TriplePattern(X, s.answer.property, target))
                prov = [("C", c_src, cls), ("R", "dbpedia", dp), ("I", i_src, iri)]
                out.append(GeneratedQuery(form, tuple(bgp), tuple(filters), target,
                                          tuple(prov), "qualitative", pattern))
    # geometric
    for c_src, cls in _geo_classes(concept):
        for opt in _instance_options(inst, kb):
            x_chain, x_wkt = _geom_chain(X, "x")
            i_chain, i_wkt = _instance_chain(opt, "i")
            bgp = [TriplePattern(X, RDF_TYPE, cls)] + x_chain + i_chain
            filters = [_spatial(rel, x_wkt, i_wkt, cls, res)]
            extra, more = _condition_clauses(s.conditions, X, via_link=True)
            bgp += extra
            filters += more
            target = X
            if projecting:
                link, target = Var("dbpediaLink"), Var("property")
                bgp += [TriplePattern(X, OWL_SAMEAS, link),
                        TriplePattern(link, s.answer.property, target)]
            prov = [("C", c_src, cls), ("I", opt[1], opt[2])]
            out.append(GeneratedQuery(form, tuple(bgp), tuple(filters), target,
                                      tuple(prov), opt[0], pattern))
    return out


def _build_criri(pattern, s: _Slots, kb, res, diag):
    concept = s.concepts[0]
    (i1, i2), (r1, r2) = s.instances[:2], s.relations[:2]
    projecting = pattern == QuestionPattern.PCRIRI
    out = []
    for c_src, cls in _geo_classes(concept):
        for o1, o2 in itertools.product(_instance_options(i1, kb), _instance_options(i2, kb)):
            x_chain, x_wkt = _geom_chain(X, "x")
            c1, w1 = _instance_chain(o1, "i1")
            c2, w2 = _instance_chain(o2, "i2")
            bgp = [TriplePattern(X, RDF_TYPE, cls)] + x_chain + c1 + c2
            filters = [_spatial(r1, x_wkt, w1, cls, res), _spatial(r2, w1, w2, None, res)]
            extra, more = _condition_clauses(s.conditions, X, via_link=True)
            bgp += extra
            filters += more
            target = X
            if projecting:
                link, target = Var("dbpediaLink"), Var("property")
                bgp += [TriplePattern(X, OWL_SAMEAS, link),
                        TriplePattern(link, s.answer.property, target)]
            variant = "geo_v2" if "geo_v2" in (o1[0], o2[0]) else "geo_v1"
            prov = [("C", c_src, cls), ("I1", o1[1], o1[2]), ("I2", o2[1], o2[2])]
            out.append(GeneratedQuery("SELECT", tuple(bgp), tuple(filters), target,
                                      tuple(prov), variant, pattern))
    return out


def _build_crc(pattern, s: _Slots, kb, res, diag):
    c1, c2 = s.concepts[:2]
    rel = s.relations[0]
    out = []
    for (s1, k1), (s2, k2) in itertools.product(_geo_classes(c1), _geo_classes(c2)):
        x_chain, x_wkt = _geom_chain(X, "x")
        y_chain, y_wkt = _geom_chain(Y, "y")
        bgp = [TriplePattern(X, RDF_TYPE, k1)] + x_chain + [TriplePattern(Y, RDF_TYPE, k2)] + y_chain
        filters = [_spatial(rel, x_wkt, y_wkt, k1, res)]
        inst_opts: List[Optional[Tuple[str, str, Iri]]] = [None]
        if pattern == QuestionPattern.CRCRI:
            inst_opts = _instance_options(s.instances[0], kb)
        for opt in inst_opts:
            q_bgp, q_filters = list(bgp), list(filters)
            prov = [("C1", s1, k1), ("C2", s2, k2)]
            variant = "geo_v1"
            if opt is not None:
                z_chain, z_wkt = _instance_chain(opt, "z")
                r2 = s.relations[1]
                q_bgp += z_chain
                q_filters += [_spatial(r2, x_wkt, z_wkt, k1, res), _spatial(r2, y_wkt, z_wkt, k2, res)]
                prov.append(("I", opt[1], opt[2]))
                variant = opt[0]
            extra, more = _condition_clauses(s.conditions, X, via_link=True)
            out.append(GeneratedQuery("SELECT", tuple(q_bgp + extra), tuple(q_filters + more), X,
                                      tuple(prov), variant, pattern))
    return out


def _build_iri(pattern, s: _Slots, kb, res, diag):
    (i1, i2), rel = s.instances[:2], s.relations[0]
    out = []
    for o1, o2 in itertools.product(_instance_options(i1, kb), _instance_options(i2, kb)):
        c1, w1 = _instance_chain(o1, "i1")
        c2, w2 = _instance_chain(o2, "i2")
        variant = "geo_v2" if "geo_v2" in (o1[0], o2[0]) else "geo_v1"
        prov = (("I1", o1[1], o1[2]), ("I2", o2[1], o2[2]))
        out.append(GeneratedQuery("ASK", tuple(c1 + c2), (_spatial(rel, w1, w2, None, res),),
                                  None, prov, variant, pattern))
    return out


_BUILDERS = {
    QuestionPattern.IP: _build_ip,
    QuestionPattern.CRI: _build_cri,
    QuestionPattern.NCRI: _build_cri,
    QuestionPattern.PCRI: _build_cri,
    QuestionPattern.CRIRI: _build_criri,
    QuestionPattern.PCRIRI: _build_criri,
    QuestionPattern.CRC: _build_crc,
    QuestionPattern.CRCRI: _build_crc,
    QuestionPattern.IRI: _build_iri,
}


# --- selectivity and ranking -------------------------------------------------------


def pattern_selectivity(t: TriplePattern, stats: KbStats) -> Fraction:
    T = stats.total_triples
    if T == 0:
        return Fraction(0)
    s_bound = not isinstance(t.subject, Var)
    p_bound = not isinstance(t.predicate, Var)
    o_bound = not isinstance(t.object, Var)
    sel = Fraction(1)
    if s_bound:
        sel *= Fraction(1, stats.distinct_subjects) if stats.distinct_subjects else 0
    if p_bound:
        pc = stats.predicate_count.get(t.predicate, 0)
        sel *= Fraction(pc, T)
        if o_bound:
            sel *= Fraction(stats.predicate_object_count.get((t.predicate, t.object), 0), pc) if pc else 0
    elif o_bound:
        # object share across all predicates
        n = sum(c for (_, o), c in stats.predicate_object_count.items() if o == t.object)
        sel *= Fraction(n, T)
    return sel


def estimate_cardinality(q: GeneratedQuery, stats: KbStats) -> Fraction:
    """totalTriples times the product of per-pattern selectivities."""
    est = Fraction(stats.total_triples)
    for t in q.bgp:
        est *= pattern_selectivity(t, stats)
    return est


def _provenance_key(q: GeneratedQuery):
    return tuple((slot, SOURCE_PRIORITY.get(src, 9), iri.value) for slot, src, iri in q.provenance)


def rank(queries: Sequence[GeneratedQuery]) -> List[GeneratedQuery]:
    """Largest estimate first; ties by variant, then provenance, then text."""
    return sorted(queries, key=lambda q: (-q.est_card, _VARIANT_RANK[q.variant],
                                          _provenance_key(q), render_query(q)))


# --- rendering -------------------------------------------------------------------------

_FN_NAMES = {"within": "geof:sfWithin", "crosses": "geof:sfCrosses", "touches": "geof:sfTouches"}


def _term(x) -> str:
    if isinstance(x, Var):
        return str(x)
    if isinstance(x, Iri):
        short = compact(x.value)
        return short if short != x.value else f"<{x.value}>"
    return serialize(x)


def _num(d: Decimal) -> str:
    return format(d.normalize(), "f")


def render_filter(f: FilterExpr) -> str:
    if isinstance(f, SpatialFn):
        if f.fn in _FN_NAMES:
            return f"{_FN_NAMES[f.fn]}({f.a}, {f.b})"
        if f.fn == "cardinal":
            return f"geoqa:{f.direction}({f.a}, {f.b})"
        op = "<=" if f.fn == "distanceLE" else ">="
        return f"geof:distance({f.a}, {f.b}, uom:metre) {op} {_num(f.threshold)}"
    if isinstance(f, ValueCmp):
        unit = f" {f.unit}" if f.unit else ""
        return f"{f.var} {f.op} {_num(f.constant)}{unit}"
    return f'contains(lcase(str({f.var})), "{f.substring.lower()}")'


def render_query(q: GeneratedQuery) -> str:
    if q.form == "ASK":
        head = "ASK WHERE {"
    elif q.form == "COUNT":
        head = f"SELECT (COUNT(DISTINCT {q.target}) AS ?total) WHERE {{"
    else:
        head = f"SELECT DISTINCT {q.target} WHERE {{"
    lines = [head]
    lines += [f"  {_term(t.subject)} {_term(t.predicate)} {_term(t.object)} ." for t in q.bgp]
    lines += [f"  FILTER({render_filter(f)})" for f in q.filters]
    lines.append("}")
    return "\n".join(lines)


def _cond_text(s: _Slots) -> str:
    parts = []
    for prop, cmp_ in s.conditions:
        name = local_name(prop.property.value)
        if prop.value_constraint:
            parts.append(f'{name}(x) ∋ "{prop.value_constraint}"')
        if cmp_ is not None:
            unit = f" {cmp_.unit}" if cmp_.unit else ""
            parts.append(f"{name}(x) {cmp_.op} {_num(cmp_.value)}{unit}")
    return "".join(f" ∧ {p}" for p in parts)


def logical_form(pattern: QuestionPattern, tree: AnnotatedTree) -> LogicalForm:
    """First-order reading of the question with slot names filled in."""
    s = _slots(tree)
    C = [c.name for c in s.concepts] + ["C", "C2"]
    I = [i.name for i in s.instances] + ["I", "I2"]
    R = [r.kind.value + (f"[{_num(r.distance_m)} m]" if r.distance_m is not None else "")
         for r in s.relations] + ["R", "R2"]
    P = local_name(s.answer.property.value) if s.answer else "P"
    cond = _cond_text(s)
    cri = f"x : {C[0]}(x) ∧ ∃i {R[0]}(x, {I[0]}){cond}"
    criri = f"∃i1∃i2 ({R[0]}(x, {I[0]}) ∧ {R[1]}({I[0]}, {I[1]}))"
    text = {
        QuestionPattern.IP: f"x : {P}({I[0]}, x)",
        QuestionPattern.CRI: cri,
        QuestionPattern.NCRI: f"|{{{cri}}}|",
        QuestionPattern.CRIRI: f"x : {C[0]}(x) ∧ {criri}{cond}",
        QuestionPattern.CRC: f"x : {C[0]}(x) ∧ ∃i ({C[1]}(i) ∧ {R[0]}(x, i)){cond}",
        QuestionPattern.CRCRI: f"x : {C[0]}(x) ∧ ∃i ({C[1]}(i) ∧ {R[0]}(x, i) ∧ {R[1]}(i, {I[0]})){cond}",
        QuestionPattern.IRI: f": {R[0]}({I[0]}, {I[1]})",
        QuestionPattern.PCRI: f"v : ∃x ({C[0]}(x) ∧ {R[0]}(x, {I[0]}) ∧ {P}(x, v)){cond}",
        QuestionPattern.PCRIRI: f"v : ∃x ({C[0]}(x) ∧ {criri} ∧ {P}(x, v)){cond}",
    }[pattern]
    return LogicalForm(text)
