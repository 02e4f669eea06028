"""Question annotation: tokens, heuristic dependency heads, and C/I/R/P/N marks.

Each ``identify_*`` step returns a new :class:`AnnotatedTree`; tokens that
already carry an annotation are never re-annotated, so spans stay disjoint.
"""
from __future__ import annotations

import re
import weakref
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Dict, Iterable, List, Mapping, Optional, Tuple, Union

from .interlink import levenshtein_sim
from .kb import SOURCE_PRIORITY, KnowledgeBase, normalize_label
from .resources import Resources, SpatialRelationKind
from .terms import RDF_TYPE, Iri, local_name

POS_TAGS = ("NOUN", "PROPN", "VERB", "ADJ", "ADP", "NUM", "DET", "OTHER")
LENGTH_UNITS = {
    "m": "m", "metre": "m", "metres": "m", "meter": "m", "meters": "m",
    "km": "km", "kilometre": "km", "kilometres": "km", "kilometer": "km", "kilometers": "km",
}
UNIT_FACTOR = {"m": Decimal(1), "km": Decimal(1000)}
COMPARISON_OPS = {
    ("more", "than"): ">", ("greater", "than"): ">", ("higher", "than"): ">",
    ("taller", "than"): ">", ("longer", "than"): ">", ("larger", "than"): ">",
    ("less", "than"): "<", ("fewer", "than"): "<", ("lower", "than"): "<",
    ("shorter", "than"): "<", ("smaller", "than"): "<",
    ("at", "least"): "≥", ("at", "most"): "≤",
}
_LIGHT_VERBS = {"be", "do", "have"}
PROPERTY_SIM = 0.85


class AnnotationError(ValueError):
    pass


class UnrecognizedUnitError(AnnotationError):
    pass


@dataclass(frozen=True)
class Token:
    index: int
    text: str
    lemma: str
    pos: str
    head: int
    deprel: str


# --- annotations -----------------------------------------------------------


def _ordered(pairs: Iterable[Tuple[str, Iri]]) -> Tuple[Tuple[str, Iri], ...]:
    return tuple(sorted(set(pairs), key=lambda sp: (SOURCE_PRIORITY.get(sp[0], 9), sp[1].value)))


@dataclass(frozen=True)
class Concept:
    classes: Tuple[Tuple[str, Iri], ...]  # (source, class IRI)
    name: str = ""

    def iris(self, *sources: str) -> List[Iri]:
        return [i for s, i in self.classes if not sources or s in sources]

    letter = "C"


@dataclass(frozen=True)
class Instance:
    resources: Tuple[Tuple[str, Iri], ...]  # (source, resource IRI)
    name: str = ""

    def iris(self, *sources: str) -> List[Iri]:
        return [i for s, i in self.resources if not sources or s in sources]

    letter = "I"


@dataclass(frozen=True)
class Relation:
    kind: SpatialRelationKind
    distance_m: Optional[Decimal] = None

    letter = "R"


@dataclass(frozen=True)
class Property:
    property: Iri
    value_constraint: Optional[str] = None

    letter = "P"


@dataclass(frozen=True)
class Count:
    letter = "N"


@dataclass(frozen=True)
class Comparison:
    op: str
    value: Decimal
    unit: Optional[str] = None

    letter = ""


Annotation = Union[Concept, Instance, Relation, Property, Count, Comparison]
Span = Tuple[int, int]  # 1-based start inclusive, end exclusive


@dataclass(frozen=True)
class AnnotatedTree:
    tokens: Tuple[Token, ...]
    annotations: Mapping[Span, Annotation] = field(default_factory=dict)

    def __post_init__(self):
        spans = sorted(self.annotations)
        for (s1, e1), (s2, e2) in zip(spans, spans[1:]):
            if s2 < e1:
                raise ValueError(f"overlapping annotation spans {(s1, e1)} and {(s2, e2)}")

    @property
    def text(self) -> str:
        return " ".join(t.text for t in self.tokens)

    def token(self, index: int) -> Token:
        return self.tokens[index - 1]

    def span_text(self, span: Span) -> str:
        return " ".join(self.tokens[i - 1].text for i in range(*span))

    def is_free(self, index: int) -> bool:
        return not any(s <= index < e for s, e in self.annotations)

    def with_annotations(self, extra: Mapping[Span, Annotation]) -> "AnnotatedTree":
        merged = dict(self.annotations)
        merged.update(extra)
        return AnnotatedTree(self.tokens, merged)

    def stripped(self) -> "AnnotatedTree":
        return AnnotatedTree(self.tokens, {})

    def ordered(self) -> List[Tuple[Span, Annotation]]:
        return sorted(self.annotations.items())

    def of_type(self, cls) -> List[Tuple[Span, Annotation]]:
        return [(s, a) for s, a in self.ordered() if isinstance(a, cls)]


# --- tokenizing and parsing ------------------------------------------------

_WORD = re.compile(r"\d+(?:\.\d+)?|[^\W\d_]+(?:['\-][^\W\d_]+)*|[^\w\s]")


_IRREGULAR = {"people": "person", "children": "child", "men": "man", "women": "woman",
              "feet": "foot", "geese": "goose", "bridges": "bridge", "species": "species"}


def lemmatize(word: str) -> str:
    w = word.lower()
    if w in _IRREGULAR:
        return _IRREGULAR[w]
    if len(w) > 3 and w.endswith("ies"):
        return w[:-3] + "y"
    if len(w) > 3 and w.endswith(("ches", "shes", "sses", "xes", "zes")):
        return w[:-2]
    if len(w) > 3 and w.endswith("s") and not w.endswith(("ss", "us", "is")):
        return w[:-1]
    return w


def _tag(text: str, first: bool, res: Resources) -> Tuple[str, str]:
    lower = text.lower()
    entry = res.lexicon.get(lower)
    capitalized = text[:1].isupper()
    if text[0].isdigit():
        return text, "NUM"
    if entry is not None:
        lemma, pos = entry
        if capitalized and not first and pos not in ("ADJ", "ADP", "DET"):
            return text, "PROPN"
        return lemma, pos
    if capitalized:
        return text, "PROPN"
    if not text[0].isalpha():
        return text, "OTHER"
    return lemmatize(text), "NOUN"


def assign_heads(pos: List[str], lemmas: List[str]) -> Tuple[List[int], List[str]]:
    """Deterministic head rules; returns 1-based heads (0 = root) and labels."""
    n = len(pos)
    verbs = [i for i in range(n) if pos[i] == "VERB"]
    content = [i for i in verbs if lemmas[i] not in _LIGHT_VERBS]
    nouns = [i for i in range(n) if pos[i] in ("NOUN", "PROPN")]
    root = (content or verbs or nouns or [0])[0]
    heads, rels = [0] * n, [""] * n
    for i in range(n):
        if i == root:
            heads[i], rels[i] = 0, "root"
        elif pos[i] in ("NOUN", "PROPN"):
            j = i - 1
            while j >= 0 and pos[j] in ("DET", "ADJ", "NUM", "NOUN", "PROPN"):
                j -= 1
            if j >= 0 and pos[j] == "ADP":
                heads[i], rels[i] = j + 1, "nmod"
            else:
                heads[i], rels[i] = root + 1, "arg"
        elif pos[i] == "ADP":
            j = i - 1
            while j >= 0 and pos[j] not in ("NOUN", "PROPN", "VERB"):
                j -= 1
            heads[i], rels[i] = (j + 1 if j >= 0 else root + 1), "case"
        elif pos[i] == "VERB":
            heads[i], rels[i] = root + 1, "dep"
        else:
            nxt = next((k for k in range(i + 1, n) if pos[k] in ("NOUN", "PROPN")), None)
            label = {"DET": "det", "ADJ": "amod", "NUM": "nummod"}.get(pos[i], "dep")
            heads[i], rels[i] = (nxt + 1 if nxt is not None else root + 1), label
    return heads, rels


def parse_question(text: str, res: Resources) -> AnnotatedTree:
    """Tokenize and tag a question, attaching heads with fixed rules."""
    words = _WORD.findall(text or "")
    while words and words[-1] in ("?", ".", "!"):
        words.pop()
    if not words:
        raise AnnotationError("empty question")
    tagged = [_tag(w, i == 0, res) for i, w in enumerate(words)]
    lemmas = [t[0] for t in tagged]
    pos = [t[1] for t in tagged]
    heads, rels = assign_heads(pos, lemmas)
    tokens = tuple(Token(i + 1, w, lemmas[i], pos[i], heads[i], rels[i])
                   for i, w in enumerate(words))
    return AnnotatedTree(tokens)


_UPOS = {"NOUN": "NOUN", "PROPN": "PROPN", "VERB": "VERB", "AUX": "VERB", "ADJ": "ADJ",
         "ADP": "ADP", "NUM": "NUM", "DET": "DET"}


def ingest_conllu(text: str) -> AnnotatedTree:
    """Build a tree from one CoNLL-U sentence block (comments ignored)."""
    rows = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 10:
            raise AnnotationError(f"line {lineno}: expected 10 columns, got {len(cols)}")
        if "-" in cols[0] or "." in cols[0]:
            continue  # multiword ranges and empty nodes
        try:
            idx, head = int(cols[0]), int(cols[6])
        except ValueError:
            raise AnnotationError(f"line {lineno}: non-integer ID or HEAD") from None
        rows.append((idx, cols[1], cols[2], _UPOS.get(cols[3], "OTHER"), head, cols[7]))
    if not rows:
        raise AnnotationError("empty CoNLL-U block")
    n = len(rows)
    if [r[0] for r in rows] != list(range(1, n + 1)):
        raise AnnotationError("token IDs must run 1..n")
    heads = {r[0]: r[4] for r in rows}
    if sum(1 for h in heads.values() if h == 0) != 1:
        raise AnnotationError("exactly one root required")
    for idx, h in heads.items():
        if h == idx or not 0 <= h <= n:
            raise AnnotationError(f"token {idx}: invalid head {h}")
        seen, cur = set(), idx
        while cur != 0:
            if cur in seen:
                raise AnnotationError(f"cyclic heads through token {idx}")
            seen.add(cur)
            cur = heads[cur]
    tokens = tuple(Token(i, form, lemma if lemma != "_" else form.lower(), pos, h, rel)
                   for i, form, lemma, pos, h, rel in rows)
    return AnnotatedTree(tokens)


# --- concept identifier ------------------------------------------------------

_CLASS_CACHE: "weakref.WeakKeyDictionary[KnowledgeBase, Dict[str, set]]" = weakref.WeakKeyDictionary()


def _split_camel(name: str) -> str:
    return " ".join(re.findall(r"[A-Z]+(?![a-z])|[A-Z]?[a-z]+|\d+", name)).lower()


def class_labels(kb: KnowledgeBase) -> Dict[str, set]:
    """normalized class label -> {(source, class IRI)}"""
    if kb in _CLASS_CACHE:
        return _CLASS_CACHE[kb]
    sources: Dict[Iri, set] = {}
    for t in kb.triples:
        if t.predicate == RDF_TYPE and isinstance(t.object, Iri):
            sources.setdefault(t.object, set()).add(t.source)
    index: Dict[str, set] = {}
    for cls, srcs in sources.items():
        names = {_split_camel(local_name(cls.value))}
        names.update(normalize_label(x) for x in kb.labels_of(cls))
        for name in names:
            for src in srcs:
                index.setdefault(name, set()).add((src, cls))
    _CLASS_CACHE[kb] = index
    return index


def identify_concepts(tree: AnnotatedTree, kb: KnowledgeBase, res: Resources) -> AnnotatedTree:
    index = class_labels(kb)
    toks = tree.tokens
    found: Dict[Span, Annotation] = {}
    i = 0
    while i < len(toks):
        t = toks[i]
        if t.pos != "NOUN" or not tree.is_free(t.index):
            i += 1
            continue
        hit = None
        nxt = toks[i + 1] if i + 1 < len(toks) else None
        if nxt is not None and nxt.pos == "NOUN" and tree.is_free(nxt.index):
            key = f"{t.text.lower()} {nxt.lemma}"
            hit = _class_hit(key, index, res)
            if hit:
                found[(t.index, t.index + 2)] = hit
                i += 2
                continue
        hit = _class_hit(t.lemma, index, res) or _class_hit(t.text.lower(), index, res)
        if hit:
            found[(t.index, t.index + 1)] = hit
        i += 1
    return tree.with_annotations(found)


def _class_hit(key: str, index, res: Resources) -> Optional[Concept]:
    for k in (key, res.synonyms.get(key)):
        if k and normalize_label(k) in index:
            pairs = index[normalize_label(k)]
            name = local_name(sorted(pairs, key=lambda p: p[1].value)[0][1].value)
            return Concept(_ordered(pairs), name)
    return None


# --- instance identifier -----------------------------------------------------

MAX_SPAN = 6


def identify_instances(tree: AnnotatedTree, kb: KnowledgeBase) -> AnnotatedTree:
    """Longest-match gazetteer scan over runs of proper/common nouns."""
    toks = tree.tokens
    ok = [t.pos in ("PROPN", "NOUN") and tree.is_free(t.index) for t in toks]
    found: Dict[Span, Annotation] = {}
    i = 0
    while i < len(toks):
        if not ok[i]:
            i += 1
            continue
        run = 1
        while i + run < len(toks) and ok[i + run] and run < MAX_SPAN:
            run += 1
        matched = False
        for length in range(run, 0, -1):
            span_toks = toks[i:i + length]
            if not any(t.pos == "PROPN" for t in span_toks):
                continue
            text = " ".join(t.text for t in span_toks)
            iris = {x for x in kb.label_lookup(text) if not kb.is_class(x)}
            if not iris:
                continue
            coref = set()
            for x in iris:
                coref |= kb.same_as(x)
            pairs = [(kb.primary_source(x), x) for x in coref]
            found[(toks[i].index, toks[i].index + length)] = Instance(_ordered(pairs), text)
            i += length
            matched = True
            break
        if not matched:
            i += 1
    return tree.with_annotations(found)


# --- relation identifier -----------------------------------------------------


def _number(text: str) -> Optional[Decimal]:
    try:
        return Decimal(text)
    except Exception:
        return None


def identify_relations(tree: AnnotatedTree, res: Resources) -> AnnotatedTree:
    """Dictionary match of relation phrases, longest first, plus distance bounds."""
    toks = tree.tokens
    low = [t.text.lower() for t in toks]
    free = [tree.is_free(t.index) for t in toks]
    max_len = max((len(p.split()) for p in res.relations), default=1)
    found: Dict[Span, Annotation] = {}
    i = 0
    while i < len(toks):
        if not free[i]:
            i += 1
            continue
        # "at most|least N unit from|of"
        if (low[i] == "at" and i + 3 < len(toks)
                and low[i + 1] in ("most", "least") and toks[i + 2].pos == "NUM"
                and all(free[i:i + 4])):
            tail = i + 4 < len(toks) and low[i + 4] in ("from", "of") and free[i + 4]
            unit_word = low[i + 3]
            if tail:
                if unit_word not in LENGTH_UNITS:
                    raise UnrecognizedUnitError(f"unrecognized distance unit {toks[i + 3].text!r}")
                meters = _number(toks[i + 2].text) * UNIT_FACTOR[LENGTH_UNITS[unit_word]]
                kind = SpatialRelationKind.AT_MOST if low[i + 1] == "most" else SpatialRelationKind.AT_LEAST
                found[(toks[i].index, toks[i].index + 5)] = Relation(kind, meters)
                i += 5
                continue
        for length in range(min(max_len, len(toks) - i), 0, -1):
            if not all(free[i:i + length]):
                continue
            phrase = " ".join(low[i:i + length])
            kind = res.relations.get(phrase)
            if kind is None:
                continue
            if kind in (SpatialRelationKind.AT_MOST, SpatialRelationKind.AT_LEAST):
                continue
            found[(toks[i].index, toks[i].index + length)] = Relation(kind)
            i += length
            break
        else:
            i += 1
    return tree.with_annotations(found)


# --- property identifier -----------------------------------------------------


def _scope(tree: AnnotatedTree, kb: KnowledgeBase) -> List[str]:
    names = []
    for _, a in tree.ordered():
        if isinstance(a, Concept):
            names.extend(local_name(i.value) for i in a.iris())
        elif isinstance(a, Instance):
            for iri in a.iris():
                names.extend(local_name(c.value) for c in kb.types_of(iri))
    seen = []
    for n in names:
        if n.lower() not in (s.lower() for s in seen):
            seen.append(n)
    return seen


def identify_properties(tree: AnnotatedTree, kb: KnowledgeBase, res: Resources) -> AnnotatedTree:
    scope = {s.lower() for s in _scope(tree, kb)}
    toks = tree.tokens
    found: Dict[Span, Annotation] = {}
    taken = set()

    # (c) comparisons first so their numerals/units are not read as attributes
    i = 0
    while i < len(toks) - 2:
        pair = (toks[i].text.lower(), toks[i + 1].text.lower())
        if pair in COMPARISON_OPS and toks[i + 2].pos == "NUM" and all(
                tree.is_free(k) for k in (i + 1, i + 2, i + 3)):
            value = _number(toks[i + 2].text)
            end = i + 3
            unit = None
            if end < len(toks) and tree.is_free(end + 1):
                w = toks[end].text.lower()
                if w in LENGTH_UNITS:
                    unit = LENGTH_UNITS[w]
                    end += 1
                elif toks[end].pos == "NOUN":
                    end += 1  # counted noun such as "people"
            found[(i + 1, end + 1)] = Comparison(COMPARISON_OPS[pair], value, unit)
            taken.update(range(i + 1, end + 1))
            i = end
            continue
        i += 1

    # (b) modifiers in front of a concept, matched against known values
    for (start, _), concept in tree.of_type(Concept):
        names = {local_name(c.value).lower() for c in concept.iris()}
        k = start - 1
        while k >= 1 and tree.is_free(k) and k not in taken and toks[k - 1].pos in ("ADJ", "PROPN", "NOUN"):
            word = toks[k - 1].text
            pattern = re.compile(rf"\b{re.escape(word)}\b", re.IGNORECASE)
            rows = sorted({(r.property.value, r.property) for r in res.values
                           if r.domain_class.lower() in names and pattern.search(r.value)})
            if rows:
                found[(k, k + 1)] = Property(rows[0][1], word)
                taken.add(k)
            k -= 1

    # (a) attribute nouns against the class-scoped property table
    rows = [r for r in res.properties if r.domain_class.lower() in scope]
    for t in toks:
        if t.index in taken or not tree.is_free(t.index):
            continue
        low = t.text.lower()
        if t.pos != "NOUN" and low not in res.synonyms:
            continue
        keys = {t.lemma, low}
        keys |= {res.synonyms[k] for k in list(keys) if k in res.synonyms}
        best = None
        for r in rows:
            sim = max(levenshtein_sim(k, normalize_label(r.label)) for k in keys)
            if sim >= PROPERTY_SIM:
                cand = (-sim, r.property.value, r.property)
                if best is None or cand < best:
                    best = cand
        if best:
            found[(t.index, t.index + 1)] = Property(best[2])
            taken.add(t.index)
    return tree.with_annotations(found)


# --- count -------------------------------------------------------------------


def detect_count(tree: AnnotatedTree) -> AnnotatedTree:
    toks = tree.tokens
    if (len(toks) >= 2 and toks[0].text.lower() == "how" and toks[1].text.lower() == "many"
            and tree.is_free(1) and tree.is_free(2)):
        return tree.with_annotations({(1, 3): Count()})
    return tree


def annotate(tree: AnnotatedTree, kb: KnowledgeBase, res: Resources) -> AnnotatedTree:
    """Run every identifier in pipeline order."""
    tree = detect_count(tree)
    tree = identify_concepts(tree, kb, res)
    tree = identify_instances(tree, kb)
    tree = identify_relations(tree, res)
    tree = identify_properties(tree, kb, res)
    return tree
