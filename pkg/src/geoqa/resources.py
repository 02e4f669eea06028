"""Lexicons and lookup tables consumed by the annotator and query generator."""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from decimal import Decimal
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from .terms import Iri, expand

DATA_DIR = Path(__file__).parent / "data"
DEFAULT_NEAR_M = Decimal(1000)


class SpatialRelationKind(str, Enum):
    WITHIN = "within"
    CROSSES = "crosses"
    BORDERS = "borders"
    NEAR = "near"
    AT_MOST = "atMost"
    AT_LEAST = "atLeast"
    NORTH = "north"
    SOUTH = "south"
    EAST = "east"
    WEST = "west"
    NORTHEAST = "northeast"
    NORTHWEST = "northwest"
    SOUTHEAST = "southeast"
    SOUTHWEST = "southwest"


CARDINALS = {
    SpatialRelationKind.NORTH, SpatialRelationKind.SOUTH, SpatialRelationKind.EAST,
    SpatialRelationKind.WEST, SpatialRelationKind.NORTHEAST, SpatialRelationKind.NORTHWEST,
    SpatialRelationKind.SOUTHEAST, SpatialRelationKind.SOUTHWEST,
}


@dataclass(frozen=True)
class DprEntry:
    domain_class: str
    relation: SpatialRelationKind
    property: Iri


@dataclass(frozen=True)
class PropertyRow:
    domain_class: str
    property: Iri
    label: str


@dataclass(frozen=True)
class ValueRow:
    domain_class: str
    property: Iri
    value: str


def default_data_dir() -> Path:
    env = os.environ.get("GEOQA_DATA")
    return Path(env) if env else DATA_DIR


def _rows(path: Path, width: int) -> List[List[str]]:
    out = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split("\t")]
        if len(parts) != width:
            raise ValueError(f"{path}:{lineno}: expected {width} tab-separated columns")
        out.append(parts)
    return out


@dataclass
class Resources:
    lexicon: Dict[str, Tuple[str, str]] = field(default_factory=dict)
    synonyms: Dict[str, str] = field(default_factory=dict)
    relations: Dict[str, SpatialRelationKind] = field(default_factory=dict)
    properties: List[PropertyRow] = field(default_factory=list)
    values: List[ValueRow] = field(default_factory=list)
    dpr: List[DprEntry] = field(default_factory=list)
    near: Dict[str, Decimal] = field(default_factory=dict)

    @classmethod
    def load(cls, tables_dir=None) -> "Resources":
        d = Path(tables_dir) if tables_dir else default_data_dir() / "tables"
        res = cls()
        for form, lemma, pos in _rows(d / "lexicon.tsv", 3):
            res.lexicon[form.lower()] = (lemma, pos)
        for surface, canonical in _rows(d / "synonyms.tsv", 2):
            res.synonyms[surface.lower()] = canonical.lower()
        for phrase, kind in _rows(d / "relations.tsv", 2):
            res.relations[" ".join(phrase.lower().split())] = SpatialRelationKind(kind)
        for c, p, label in _rows(d / "properties.tsv", 3):
            res.properties.append(PropertyRow(c, Iri(expand(p)), label))
        for c, p, value in _rows(d / "values.tsv", 3):
            res.values.append(ValueRow(c, Iri(expand(p)), value))
        for c, kind, p in _rows(d / "dpr.tsv", 3):
            res.dpr.append(DprEntry(c, SpatialRelationKind(kind), Iri(expand(p))))
        for c, meters in _rows(d / "near.tsv", 2):
            res.near[c.lower()] = Decimal(meters)
        return res

    def near_threshold(self, class_name: Optional[str]) -> Decimal:
        if class_name and class_name.lower() in self.near:
            return self.near[class_name.lower()]
        return self.near.get("default", DEFAULT_NEAR_M)

    def dpr_properties(self, class_name: str, kind: SpatialRelationKind) -> List[Iri]:
        return [e.property for e in self.dpr
                if e.domain_class.lower() == class_name.lower() and e.relation == kind]
