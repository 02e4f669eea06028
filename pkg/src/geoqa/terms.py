"""RDF terms, well-known vocabulary IRIs and N-Triples serialization."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from typing import Optional, Union

PREFIXES = {
    "rdf": "http://www.w3.org/1999/02/22-rdf-syntax-ns#",
    "rdfs": "http://www.w3.org/2000/01/rdf-schema#",
    "owl": "http://www.w3.org/2002/07/owl#",
    "xsd": "http://www.w3.org/2001/XMLSchema#",
    "geo": "http://www.opengis.net/ont/geosparql#",
    "geof": "http://www.opengis.net/def/function/geosparql/",
    "uom": "http://www.opengis.net/def/uom/OGC/1.0/",
    "dbo": "http://dbpedia.org/ontology/",
    "dbp": "http://dbpedia.org/property/",
    "dbr": "http://dbpedia.org/resource/",
    "dbt": "http://dbpedia.org/datatype/",
    "gadmo": "http://www.app-lab.eu/gadm/ontology/",
    "gadmr": "http://www.app-lab.eu/gadm/",
    "osmo": "http://www.app-lab.eu/osm/ontology#",
    "osmr": "http://www.app-lab.eu/osm/",
}

_CURIE = re.compile(r"^([A-Za-z][\w-]*):(?!//)(.*)$")


def expand(text: str) -> str:
    """Expand a known ``prefix:local`` CURIE; anything else is returned unchanged."""
    m = _CURIE.match(text)
    if m and m.group(1) in PREFIXES:
        return PREFIXES[m.group(1)] + m.group(2)
    return text


def compact(iri: str) -> str:
    # longest namespace wins (gadmo before gadmr, etc.)
    best = None
    for prefix, ns in PREFIXES.items():
        if iri.startswith(ns) and (best is None or len(ns) > len(PREFIXES[best])):
            best = prefix
    if best is None:
        return f"<{iri}>"
    return f"{best}:{iri[len(PREFIXES[best]):]}"


def local_name(iri: str) -> str:
    return re.split(r"[#/]", iri.rstrip("/#"))[-1]


@dataclass(frozen=True, order=True)
class Iri:
    value: str

    def __post_init__(self):
        if not self.value or any(c.isspace() for c in self.value):
            raise ValueError(f"invalid IRI: {self.value!r}")

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class PlainLiteral:
    text: str


@dataclass(frozen=True)
class NumericLiteral:
    value: Decimal
    unit: Optional[str] = None
    datatype: Optional[str] = None

    def __post_init__(self):
        if not self.value.is_finite():
            raise ValueError(f"non-finite numeric literal: {self.value}")


@dataclass(frozen=True)
class WktLiteral:
    raw: str
    geometry: object = field(default=None, compare=False, hash=False, repr=False)


Term = Union[Iri, PlainLiteral, NumericLiteral, WktLiteral]


RDF_TYPE = Iri(PREFIXES["rdf"] + "type")
RDFS_LABEL = Iri(PREFIXES["rdfs"] + "label")
OWL_SAMEAS = Iri(PREFIXES["owl"] + "sameAs")
HAS_GEOMETRY = Iri(PREFIXES["geo"] + "hasGeometry")
AS_WKT = Iri(PREFIXES["geo"] + "asWKT")
WKT_LITERAL = PREFIXES["geo"] + "wktLiteral"

NUMERIC_DATATYPES = {
    PREFIXES["xsd"] + t
    for t in ("integer", "decimal", "double", "float", "int", "long",
              "nonNegativeInteger", "positiveInteger")
}
# DBpedia-style unit datatypes -> unit symbol
UNIT_DATATYPES = {
    PREFIXES["dbt"] + "kilometre": "km",
    PREFIXES["dbt"] + "metre": "m",
    PREFIXES["dbt"] + "squareKilometre": "km2",
}

# metres per length unit
LENGTH_UNITS = {"m": Decimal(1), "km": Decimal(1000)}


def make_literal(text: str, datatype: Optional[str] = None) -> Term:
    """Build the typed term for a lexical form and optional datatype IRI.

    Raises ValueError for a numeric datatype whose lexical form is not a
    finite decimal. WKT literals are returned unparsed; the store attaches
    the geometry.
    """
    if datatype is None:
        return PlainLiteral(text)
    if datatype == WKT_LITERAL:
        return WktLiteral(text)
    if datatype in NUMERIC_DATATYPES or datatype in UNIT_DATATYPES:
        try:
            value = Decimal(text.strip())
        except InvalidOperation:
            raise ValueError(f"not a number: {text!r}") from None
        return NumericLiteral(value, UNIT_DATATYPES.get(datatype), datatype)
    return PlainLiteral(text)


def _escape(text: str) -> str:
    return (text.replace("\\", "\\\\").replace('"', '\\"')
            .replace("\n", "\\n").replace("\r", "\\r"))


def serialize(term: Term) -> str:
    """N-Triples form of a term; also the canonical sort key for results."""
    if isinstance(term, Iri):
        return f"<{term.value}>"
    if isinstance(term, PlainLiteral):
        return f'"{_escape(term.text)}"'
    if isinstance(term, NumericLiteral):
        dt = term.datatype or PREFIXES["xsd"] + "decimal"
        return f'"{term.value}"^^<{dt}>'
    if isinstance(term, WktLiteral):
        return f'"{_escape(term.raw)}"^^<{WKT_LITERAL}>'
    raise TypeError(f"not a term: {term!r}")


def answer_key(value) -> tuple:
    """Comparable key for answers: terms, gold JSON values, booleans, counts.

    IRIs and plain literals compare by their string, numbers by decimal
    value, booleans only with booleans.
    """
    if isinstance(value, bool):
        return ("bool", value)
    if isinstance(value, (int, float, Decimal)):
        return ("num", Decimal(str(value)).normalize())
    if isinstance(value, str):
        return ("str", value)
    if isinstance(value, Iri):
        return ("str", value.value)
    if isinstance(value, PlainLiteral):
        return ("str", value.text)
    if isinstance(value, NumericLiteral):
        return ("num", value.value.normalize())
    if isinstance(value, WktLiteral):
        return ("str", value.raw)
    raise TypeError(f"cannot key {value!r}")
