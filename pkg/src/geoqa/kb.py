"""Source-tagged in-memory triple store with label, class and geometry indexes."""
from __future__ import annotations

import logging
import re
import unicodedata
from collections import Counter, defaultdict
from dataclasses import dataclass
from pathlib import Path
from types import MappingProxyType
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Set, Tuple

from .geometry import Geometry, GeometryError, parse_wkt
from .terms import (AS_WKT, HAS_GEOMETRY, OWL_SAMEAS, RDF_TYPE, RDFS_LABEL, Iri,
                    PlainLiteral, Term, WktLiteral, expand, make_literal)

logger = logging.getLogger(__name__)

SOURCES = ("dbpedia", "gadm", "osm", "links")
# entity-linking tie-break order
SOURCE_PRIORITY = {"gadm": 0, "osm": 1, "dbpedia": 2, "links": 3}


class KbLoadError(OSError):
    pass


@dataclass(frozen=True)
class Triple:
    subject: Iri
    predicate: Iri
    object: Term
    source: str

    def __post_init__(self):
        if self.source not in SOURCES:
            raise ValueError(f"unknown source tag {self.source!r}")


@dataclass(frozen=True)
class Rejection:
    path: str
    line: int
    reason: str


@dataclass
class LoadResult:
    """Triples parsed from one file plus the lines that were refused."""

    triples: List[Triple]
    rejected: List[Rejection]


@dataclass(frozen=True)
class KbStats:
    total_triples: int
    distinct_subjects: int
    predicate_count: Mapping[Iri, int]
    predicate_object_count: Mapping[Tuple[Iri, Term], int]
    source_count: Mapping[str, int]


def normalize_label(text: str) -> str:
    """Case-fold, collapse whitespace and strip outer punctuation."""
    text = unicodedata.normalize("NFC", text).casefold()
    text = " ".join(text.split())
    start, end = 0, len(text)
    while start < end and unicodedata.category(text[start]).startswith("P"):
        start += 1
    while end > start and unicodedata.category(text[end - 1]).startswith("P"):
        end -= 1
    return text[start:end].strip()


# ---------------------------------------------------------------------------
# N-Triples subset

_IRI = r"<([^<>\s]*)>"
_LIT = r'"((?:[^"\\]|\\.)*)"(?:\^\^<([^<>\s]+)>)?'
_LINE = re.compile(rf"^\s*{_IRI}\s+{_IRI}\s+(?:{_IRI}|{_LIT})\s*\.\s*$")
_UNESCAPE = {"\\": "\\", '"': '"', "n": "\n", "r": "\r", "t": "\t"}


def _unescape(text: str) -> str:
    return re.sub(r"\\(.)", lambda m: _UNESCAPE.get(m.group(1), m.group(1)), text)


def parse_ntriples_line(line: str, source: str) -> Optional[Triple]:
    """Parse one line; None for blank/comment lines, ValueError when malformed."""
    stripped = line.strip()
    if not stripped or stripped.startswith("#"):
        return None
    m = _LINE.match(stripped)
    if not m:
        raise ValueError("malformed triple")
    s, p, o_iri, o_lit, dtype = m.groups()
    subject = Iri(expand(s))
    predicate = Iri(expand(p))
    if o_iri is not None:
        obj: Term = Iri(expand(o_iri))
    else:
        obj = make_literal(_unescape(o_lit), expand(dtype) if dtype else None)
        if isinstance(obj, WktLiteral):
            try:
                obj = WktLiteral(obj.raw, parse_wkt(obj.raw))
            except GeometryError as exc:
                raise ValueError(f"bad WKT literal: {exc}") from None
    return Triple(subject, predicate, obj, source)


def load_ntriples(path, source: str) -> LoadResult:
    """Read an N-Triples-subset file; malformed lines are reported, not fatal."""
    if source not in SOURCES:
        raise ValueError(f"unknown source tag {source!r}")
    try:
        text = Path(path).read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise KbLoadError(f"cannot read {path}: {exc}") from exc
    triples, rejected = [], []
    for lineno, line in enumerate(text.splitlines(), start=1):
        try:
            t = parse_ntriples_line(line, source)
        except ValueError as exc:
            rejected.append(Rejection(str(path), lineno, str(exc)))
            logger.warning("%s:%d rejected: %s", path, lineno, exc)
            continue
        if t is not None:
            triples.append(t)
    return LoadResult(triples, rejected)


def read_manifest(kb_dir) -> List[Tuple[Path, str]]:
    kb_dir = Path(kb_dir)
    manifest = kb_dir / "manifest.tsv"
    try:
        rows = manifest.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise KbLoadError(f"cannot read {manifest}: {exc}") from exc
    out = []
    for lineno, row in enumerate(rows, start=1):
        if not row.strip() or row.startswith("#"):
            continue
        parts = row.split("\t")
        if len(parts) != 2 or parts[1].strip() not in SOURCES:
            raise KbLoadError(f"{manifest}:{lineno}: expected 'file<TAB>source'")
        out.append((kb_dir / parts[0].strip(), parts[1].strip()))
    return out


# ---------------------------------------------------------------------------
# store


class KnowledgeBase:
    """Immutable once built. Use :meth:`from_triples` or :meth:`load`."""

    def __init__(self, triples: Iterable[Triple], rejected: Iterable[Rejection] = ()):
        unique: Dict[Tuple[Iri, Iri, Term, str], Triple] = {}
        for t in triples:
            unique.setdefault((t.subject, t.predicate, t.object, t.source), t)
        # owl:sameAs symmetric closure
        for t in list(unique.values()):
            if t.predicate == OWL_SAMEAS and isinstance(t.object, Iri):
                inv = Triple(t.object, OWL_SAMEAS, t.subject, "links")
                if not any((inv.subject, OWL_SAMEAS, inv.object, s) in unique for s in SOURCES):
                    unique[(inv.subject, OWL_SAMEAS, inv.object, "links")] = inv
        self._triples: Tuple[Triple, ...] = tuple(unique.values())
        self.rejected: Tuple[Rejection, ...] = tuple(rejected)
        self._build_indexes()

    @classmethod
    def from_triples(cls, triples: Iterable[Triple]) -> "KnowledgeBase":
        return cls(triples)

    @classmethod
    def load(cls, kb_dir) -> "KnowledgeBase":
        triples, rejected = [], []
        for path, source in read_manifest(kb_dir):
            res = load_ntriples(path, source)
            triples.extend(res.triples)
            rejected.extend(res.rejected)
        return cls(triples, rejected)

    @classmethod
    def load_files(cls, files: Iterable[Tuple[str, str]]) -> "KnowledgeBase":
        triples, rejected = [], []
        for path, source in files:
            res = load_ntriples(path, source)
            triples.extend(res.triples)
            rejected.extend(res.rejected)
        return cls(triples, rejected)

    def _build_indexes(self):
        sp = defaultdict(set)
        po = defaultdict(set)
        by_s = defaultdict(set)
        by_p = defaultdict(set)
        by_o = defaultdict(set)
        labels = defaultdict(set)
        label_of = defaultdict(set)
        classes = defaultdict(set)
        sources = defaultdict(set)
        pcount = Counter()
        pocount = Counter()
        scount = Counter()
        geom_link = {}
        wkt_of = {}
        for t in self._triples:
            s, p, o = t.subject, t.predicate, t.object
            sp[(s, p)].add(o)
            po[(p, o)].add(s)
            by_s[s].add((p, o))
            by_p[p].add((s, o))
            by_o[o].add((s, p))
            pcount[p] += 1
            pocount[(p, o)] += 1
            scount[t.source] += 1
            sources[s].add(t.source)
            if p == RDFS_LABEL and isinstance(o, PlainLiteral):
                labels[normalize_label(o.text)].add(s)
                label_of[s].add(o.text)
            elif p == RDF_TYPE and isinstance(o, Iri):
                classes[o].add(s)
            elif p == HAS_GEOMETRY and isinstance(o, Iri):
                geom_link.setdefault(s, set()).add(o)
            elif p == AS_WKT and isinstance(o, WktLiteral):
                wkt_of.setdefault(s, o)
        geometry = {}
        for feature, geoms in geom_link.items():
            for g in sorted(geoms):
                if g in wkt_of:
                    geometry[feature] = wkt_of[g].geometry
                    break

        def freeze(d):
            return MappingProxyType({k: frozenset(v) for k, v in d.items()})

        self._sp, self._po = freeze(sp), freeze(po)
        self._by_s, self._by_p, self._by_o = freeze(by_s), freeze(by_p), freeze(by_o)
        self.label_index = freeze(labels)
        self._labels_of = freeze(label_of)
        self.class_index = freeze(classes)
        self._sources = freeze(sources)
        self.geometry_index: Mapping[Iri, Geometry] = MappingProxyType(geometry)
        self.stats = KbStats(
            total_triples=len(self._triples),
            distinct_subjects=len(by_s),
            predicate_count=MappingProxyType(dict(pcount)),
            predicate_object_count=MappingProxyType(dict(pocount)),
            source_count=MappingProxyType({s: scount.get(s, 0) for s in SOURCES}),
        )

    # -- accessors ---------------------------------------------------------

    @property
    def triples(self) -> Tuple[Triple, ...]:
        return self._triples

    def __len__(self):
        return len(self._triples)

    def label_lookup(self, text: str) -> FrozenSet[Iri]:
        return self.label_index.get(normalize_label(text), frozenset())

    def labels_of(self, iri: Iri) -> FrozenSet[str]:
        return self._labels_of.get(iri, frozenset())

    def instances_of(self, cls: Iri) -> FrozenSet[Iri]:
        return self.class_index.get(cls, frozenset())

    def types_of(self, iri: Iri) -> FrozenSet[Iri]:
        return frozenset(o for o in self.objects(iri, RDF_TYPE) if isinstance(o, Iri))

    def is_class(self, iri: Iri) -> bool:
        return iri in self.class_index

    def geometry_of(self, iri: Iri) -> Optional[Geometry]:
        return self.geometry_index.get(iri)

    def sources_of(self, iri: Iri) -> FrozenSet[str]:
        return self._sources.get(iri, frozenset())

    def primary_source(self, iri: Iri) -> str:
        srcs = self.sources_of(iri) - {"links"}
        if not srcs:
            return "links"
        return min(srcs, key=SOURCE_PRIORITY.__getitem__)

    def objects(self, s: Iri, p: Iri) -> FrozenSet[Term]:
        return self._sp.get((s, p), frozenset())

    def subjects(self, p: Iri, o: Term) -> FrozenSet[Iri]:
        return self._po.get((p, o), frozenset())

    def same_as(self, iri: Iri) -> Set[Iri]:
        """Transitive owl:sameAs component of iri, including itself."""
        seen = {iri}
        todo = [iri]
        while todo:
            cur = todo.pop()
            for o in self.objects(cur, OWL_SAMEAS):
                if isinstance(o, Iri) and o not in seen:
                    seen.add(o)
                    todo.append(o)
        return seen

    def match(self, s=None, p=None, o=None) -> Iterable[Tuple[Iri, Iri, Term]]:
        """All (s, p, o) matching the bound positions (None = unbound)."""
        if s is not None and p is not None:
            objs = self.objects(s, p)
            if o is not None:
                return [(s, p, o)] if o in objs else []
            return [(s, p, x) for x in objs]
        if p is not None and o is not None:
            return [(x, p, o) for x in self.subjects(p, o)]
        if s is not None:
            return [(s, pp, oo) for pp, oo in self._by_s.get(s, ()) if o is None or oo == o]
        if o is not None:
            return [(ss, pp, o) for ss, pp in self._by_o.get(o, ()) if p is None or pp == p]
        if p is not None:
            return [(ss, p, oo) for ss, oo in self._by_p.get(p, ())]
        return [(t.subject, t.predicate, t.object) for t in self._triples]

    def match_count(self, s=None, p=None, o=None) -> int:
        if s is not None and p is not None:
            objs = self.objects(s, p)
            return (1 if o in objs else 0) if o is not None else len(objs)
        if p is not None and o is not None:
            return len(self.subjects(p, o))
        if s is None and o is None:
            if p is None:
                return len(self._triples)
            return len(self._by_p.get(p, ()))
        return len(self.match(s, p, o))
