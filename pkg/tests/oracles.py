"""Independent reference implementations used by the tests.

Geometry: exact rational arithmetic on convex shapes (Cyrus-Beck clipping
for segments, Sutherland-Hodgman clipping for polygon overlap area).
Gold answers: brute-force scans over the raw triple list plus direct calls
to the geometry predicates, with no use of the store's indexes or the
query engine.
"""
from __future__ import annotations

import random
from fractions import Fraction as F
from typing import Dict, List, Sequence, Set, Tuple

# ---------------------------------------------------------------------------
# exact geometry on a 0.01 degree grid

GRID = F(1, 100)
Pt = Tuple[F, F]


def cross(o: Pt, a: Pt, b: Pt) -> F:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points: Sequence[Pt]) -> List[Pt]:
    pts = sorted(set(points))
    if len(pts) < 3:
        return pts
    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]  # counter-clockwise, open


def edges(poly: Sequence[Pt]):
    return [(poly[i], poly[(i + 1) % len(poly)]) for i in range(len(poly))]


def area(poly: Sequence[Pt]) -> F:
    if len(poly) < 3:
        return F(0)
    return sum((a[0] * b[1] - b[0] * a[1] for a, b in edges(poly)), F(0)) / 2


def classify(p: Pt, poly: Sequence[Pt]) -> str:
    """interior / boundary / exterior for a CCW convex polygon."""
    signs = [cross(a, b, p) for a, b in edges(poly)]
    if any(s < 0 for s in signs):
        return "exterior"
    if any(s == 0 for s in signs):
        return "boundary"
    return "interior"


def clip_segment(p: Pt, q: Pt, poly: Sequence[Pt]):
    """Cyrus-Beck: parameter interval of pq inside the closed polygon, or None."""
    t0, t1 = F(0), F(1)
    d = (q[0] - p[0], q[1] - p[1])
    for a, b in edges(poly):
        # inside half-plane: cross(a, b, x) >= 0
        num = cross(a, b, p)
        den = (b[0] - a[0]) * d[1] - (b[1] - a[1]) * d[0]
        if den == 0:
            if num < 0:
                return None
            continue
        t = -num / den
        if den > 0:
            t0 = max(t0, t)
        else:
            t1 = min(t1, t)
        if t0 > t1:
            return None
    return t0, t1


def lerp(p: Pt, q: Pt, t: F) -> Pt:
    return (p[0] + (q[0] - p[0]) * t, p[1] + (q[1] - p[1]) * t)


def clip_polygon(subject: Sequence[Pt], clipper: Sequence[Pt]) -> List[Pt]:
    """Sutherland-Hodgman against a convex clipper."""
    out = list(subject)
    for a, b in edges(clipper):
        if not out:
            break
        inp, out = out, []
        for i, cur in enumerate(inp):
            prev = inp[i - 1]
            cin, pin = cross(a, b, cur) >= 0, cross(a, b, prev) >= 0
            if cin:
                if not pin:
                    out.append(_intersect(prev, cur, a, b))
                out.append(cur)
            elif pin:
                out.append(_intersect(prev, cur, a, b))
    return out


def _intersect(p: Pt, q: Pt, a: Pt, b: Pt) -> Pt:
    cp, cq = cross(a, b, p), cross(a, b, q)
    return lerp(p, q, cp / (cp - cq))


def segments_meet(p: Pt, q: Pt, a: Pt, b: Pt) -> bool:
    d1, d2 = cross(a, b, p), cross(a, b, q)
    d3, d4 = cross(p, q, a), cross(p, q, b)
    if ((d1 > 0 > d2) or (d1 < 0 < d2)) and ((d3 > 0 > d4) or (d3 < 0 < d4)):
        return True

    def on(o, r, x):
        return (cross(o, r, x) == 0 and min(o[0], r[0]) <= x[0] <= max(o[0], r[0])
                and min(o[1], r[1]) <= x[1] <= max(o[1], r[1]))

    return on(a, b, p) or on(a, b, q) or on(p, q, a) or on(p, q, b)


def oracle_within(kind: str, a, poly) -> bool:
    if kind == "point":
        return classify(a, poly) != "exterior"
    if kind == "line":
        interior_piece = False
        for p, q in zip(a, a[1:]):
            iv = clip_segment(p, q, poly)
            if iv != (0, 1):
                return False
            if classify(lerp(p, q, F(1, 2)), poly) == "interior":
                interior_piece = True
            else:
                # a segment on an edge has every point on the boundary
                interior_piece = interior_piece or classify(lerp(p, q, F(1, 3)), poly) == "interior"
        return interior_piece
    return all(classify(v, poly) != "exterior" for v in a)


def oracle_crosses(line, poly) -> bool:
    inside = outside = False
    for p, q in zip(line, line[1:]):
        iv = clip_segment(p, q, poly)
        if iv is None or iv != (0, 1):
            outside = True
        if iv is not None and iv[0] < iv[1]:
            mid = lerp(p, q, (iv[0] + iv[1]) / 2)
            if classify(mid, poly) == "interior":
                inside = True
    return inside and outside


def oracle_touches(a, b) -> bool:
    meet = (any(classify(v, b) != "exterior" for v in a)
            or any(classify(v, a) != "exterior" for v in b)
            or any(segments_meet(p, q, r, s) for p, q in edges(a) for r, s in edges(b)))
    return meet and area(clip_polygon(a, b)) == 0


# -- random shapes ---------------------------------------------------------------


def rand_pt(rng: random.Random, n: int) -> Pt:
    return (rng.randint(0, n) * GRID, rng.randint(0, n) * GRID)


def rand_convex(rng: random.Random, n: int = 10) -> List[Pt]:
    while True:
        shape = rng.random()
        if shape < 0.4:
            x0, x1 = sorted(rng.sample(range(n + 1), 2))
            y0, y1 = sorted(rng.sample(range(n + 1), 2))
            poly = [(x0 * GRID, y0 * GRID), (x1 * GRID, y0 * GRID),
                    (x1 * GRID, y1 * GRID), (x0 * GRID, y1 * GRID)]
        else:
            poly = convex_hull([rand_pt(rng, n) for _ in range(rng.randint(3, 6))])
        if len(poly) >= 3 and area(poly) > 0:
            return poly


def rand_line(rng: random.Random, n: int = 10) -> List[Pt]:
    while True:
        pts = [rand_pt(rng, n) for _ in range(rng.randint(2, 3))]
        if all(p != q for p, q in zip(pts, pts[1:])):
            return pts


def wkt_point(p: Pt) -> str:
    return f"POINT({float(p[0])!r} {float(p[1])!r})"


def wkt_line(pts) -> str:
    return "LINESTRING(" + ", ".join(f"{float(x)!r} {float(y)!r}" for x, y in pts) + ")"


def wkt_polygon(poly) -> str:
    ring = list(poly) + [poly[0]]
    return "POLYGON((" + ", ".join(f"{float(x)!r} {float(y)!r}" for x, y in ring) + "))"


# ---------------------------------------------------------------------------
# gold-answer oracle over raw triples

RDF = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
TYPE = RDF + "type"
SAMEAS = "http://www.w3.org/2002/07/owl#sameAs"
HASGEOM = "http://www.opengis.net/ont/geosparql#hasGeometry"
ASWKT = "http://www.opengis.net/ont/geosparql#asWKT"

NS = {
    "dbo": "http://dbpedia.org/ontology/", "dbp": "http://dbpedia.org/property/",
    "dbr": "http://dbpedia.org/resource/", "gadmo": "http://www.app-lab.eu/gadm/ontology/",
    "gadmr": "http://www.app-lab.eu/gadm/", "osmo": "http://www.app-lab.eu/osm/ontology#",
    "osmr": "http://www.app-lab.eu/osm/",
}


def x(curie: str) -> str:
    p, local = curie.split(":", 1)
    return NS[p] + local


class RawKb:
    """Plain-list view of the fixture; every lookup is a linear scan."""

    def __init__(self, triples):
        from geoqa.terms import Iri
        self.rows = [(t.subject.value, t.predicate.value,
                      t.object.value if isinstance(t.object, Iri) else t.object) for t in triples]

    def objects(self, s, p):
        return [o for ss, pp, o in self.rows if ss == s and pp == p]

    def subjects(self, p, o):
        return sorted({ss for ss, pp, oo in self.rows if pp == p and oo == o})

    def links(self, s) -> Set[str]:
        out = {s}
        changed = True
        while changed:
            changed = False
            for ss, pp, oo in self.rows:
                if pp != SAMEAS:
                    continue
                for a, b in ((ss, oo), (oo, ss)):
                    if a in out and b not in out:
                        out.add(b)
                        changed = True
        return out

    def geometry(self, s):
        from geoqa.geometry import parse_wkt
        for g in sorted(self.objects(s, HASGEOM)):
            for lit in self.objects(g, ASWKT):
                return parse_wkt(lit.raw)
        return None


def _rel(kb: RawKb, rel, a, b) -> bool:
    from geoqa import geometry as G
    ga, gb = kb.geometry(a), kb.geometry(b)
    name = rel[0]
    if name == "within":
        return G.sf_within(ga, gb)
    if name == "crosses":
        return G.sf_crosses(ga, gb)
    if name == "touches":
        return G.sf_touches(ga, gb)
    if name == "le":
        return G.min_distance_m(ga, gb) <= rel[1]
    if name == "ge":
        return G.min_distance_m(ga, gb) >= rel[1]
    if name == "cardinal":
        return G.cardinal(ga, gb, rel[1])
    raise ValueError(name)


def _conds_ok(kb: RawKb, subject: str, conds, via_link: bool) -> bool:
    from decimal import Decimal
    for prop, op, val in conds:
        nodes = kb.links(subject) - {subject} if via_link else {subject}
        values = [o for n in nodes for o in kb.objects(n, x(prop))]
        ok = False
        for v in values:
            if op == "contains":
                ok = ok or val.lower() in getattr(v, "text", "").lower()
            else:
                num, unit = val
                scale = {"m": 1, "km": 1000}
                left = v.value * scale.get(v.unit, 1)
                right = Decimal(num) * scale.get(unit, 1)
                ok = ok or (left > right if op == ">" else left < right)
        if not ok:
            return False
    return True


def gold_answers(kb: RawKb, recipe) -> list:
    kind = recipe[0]
    if kind == "attr":                      # (attr, subject, prop)
        return kb.objects(x(recipe[1]), x(recipe[2]))
    if kind == "qual":                      # (qual, class, prop, object, conds)
        _, cls, prop, obj, conds = recipe
        return [s for s in kb.subjects(TYPE, x(cls))
                if x(obj) in kb.objects(s, x(prop)) and _conds_ok(kb, s, conds, False)]
    if kind == "geo":                       # (geo, class, rel, instance, conds)
        _, cls, rel, inst, conds = recipe
        return [s for s in kb.subjects(TYPE, x(cls))
                if _rel(kb, rel, s, x(inst)) and _conds_ok(kb, s, conds, True)]
    if kind == "geo2":                      # (geo2, class, rel1, inst1, rel2, inst2)
        _, cls, r1, i1, r2, i2 = recipe
        if not _rel(kb, r2, x(i1), x(i2)):
            return []
        return [s for s in kb.subjects(TYPE, x(cls)) if _rel(kb, r1, s, x(i1))]
    if kind == "crc":                       # (crc, class1, rel, class2)
        _, c1, rel, c2 = recipe
        ys = kb.subjects(TYPE, x(c2))
        return [s for s in kb.subjects(TYPE, x(c1)) if any(_rel(kb, rel, s, y) for y in ys)]
    if kind == "crcri":                     # (crcri, class1, rel, class2, rel2, inst)
        _, c1, rel, c2, rel2, inst = recipe
        ys = [y for y in kb.subjects(TYPE, x(c2)) if _rel(kb, rel2, y, x(inst))]
        return [s for s in kb.subjects(TYPE, x(c1))
                if _rel(kb, rel2, s, x(inst)) and any(_rel(kb, rel, s, y) for y in ys)]
    if kind == "ask":                       # (ask, inst1, rel, inst2)
        return [_rel(kb, recipe[2], x(recipe[1]), x(recipe[3]))]
    if kind == "count":
        return [len(set(gold_answers(kb, recipe[1])))]
    if kind == "proj":                      # (proj, inner, prop, via_link)
        _, inner, prop, via_link = recipe
        out = []
        for s in gold_answers(kb, inner):
            nodes = kb.links(s) - {s} if via_link else {s}
            for n in sorted(nodes):
                out.extend(kb.objects(n, x(prop)))
        return out
    raise ValueError(kind)


def to_json_value(v):
    from geoqa.terms import NumericLiteral, PlainLiteral
    if isinstance(v, bool):
        return v
    if isinstance(v, int):
        return v
    if isinstance(v, str):
        return v
    if isinstance(v, NumericLiteral):
        d = v.value.normalize()
        return int(d) if d == d.to_integral_value() else float(d)
    if isinstance(v, PlainLiteral):
        return v.text
    raise TypeError(v)


# Semantic reading of each gold question. Qualitative readings are used
# where a domain-property row exists and DBpedia has matching facts; the
# others are geometric. Near defaults to 1000 m, forests to 5000 m.
GOLD_RECIPES: Dict[str, tuple] = {
    "q01": ("Where is Emirates Stadium located?", 1, "IP",
            ("attr", "dbr:Emirates_Stadium", "dbo:location")),
    "q02": ("What is the length of River Thames?", 1, "IP",
            ("attr", "dbr:River_Thames", "dbp:length")),
    "q03": ("Is Hampshire north of Berkshire?", 2, "IRI",
            ("ask", "gadmr:administrativeUnit_GBR_adm2_30", ("cardinal", "north"),
             "gadmr:administrativeUnit_GBR_adm2_7")),
    "q04": ("Is Liverpool east of Ireland?", 2, "IRI",
            ("ask", "gadmr:administrativeUnit_GBR_adm2_40", ("cardinal", "east"),
             "gadmr:administrativeUnit_IRL_adm0_1")),
    "q05": ("Is Limerick east of Oxford?", 2, "IRI",
            ("ask", "gadmr:administrativeUnit_IRL_adm1_17", ("cardinal", "east"),
             "gadmr:administrativeUnit_GBR_adm2_60")),
    "q06": ("Which rivers cross Limerick?", 3, "CRI",
            ("qual", "dbo:River", "dbo:city", "dbr:Limerick", [])),
    "q07": ("Which forest is near Manchester?", 3, "CRI",
            ("geo", "osmo:Forest", ("le", 5000), "gadmr:administrativeUnit_GBR_adm2_42", [])),
    "q08": ("Which hotels are at most 2km from Big Ben?", 3, "CRI",
            ("geo", "osmo:Hotel", ("le", 2000), "osmr:pois/id/3001", [])),
    "q09": ("Which hotels are at least 3 km from Big Ben?", 3, "CRI",
            ("geo", "osmo:Hotel", ("ge", 3000), "osmr:pois/id/3001", [])),
    "q10": ("Which counties border Hampshire?", 3, "CRI",
            ("geo", "gadmo:County", ("touches",), "gadmr:administrativeUnit_GBR_adm2_30", [])),
    "q11": ("Which hospitals are in Oxford?", 3, "CRI",
            ("geo", "osmo:Hospital", ("within",), "gadmr:administrativeUnit_GBR_adm2_60", [])),
    "q12": ("Which churches are close to the Shannon in Limerick?", 3, "CRIRI",
            ("geo2", "osmo:Church", ("le", 1000), "osmr:rivers/id/1002", ("within",),
             "gadmr:administrativeUnit_IRL_adm1_17")),
    "q13": ("Which restaurants are near Big Ben in London?", 3, "CRIRI",
            ("geo2", "osmo:Restaurant", ("le", 1000), "osmr:pois/id/3001", ("within",),
             "gadmr:administrativeUnit_GBR_adm2_56")),
    "q14": ("Which restaurants are near hotels?", 4, "CRC",
            ("crc", "osmo:Restaurant", ("le", 1000), "osmo:Hotel")),
    "q15": ("Which churches are near castles?", 4, "CRC",
            ("crc", "osmo:Church", ("le", 1000), "osmo:Castle")),
    "q16": ("Which restaurants are near hotels in Limerick?", 5, "CRCRI",
            ("crcri", "osmo:Restaurant", ("le", 1000), "osmo:Hotel", ("within",),
             "gadmr:administrativeUnit_IRL_adm1_17")),
    "q17": ("Which churches are near a castle in Scotland?", 5, "CRCRI",
            ("crcri", "osmo:Church", ("le", 1000), "osmo:Castle", ("within",),
             "gadmr:administrativeUnit_GBR_adm1_3")),
    "q18": ("Which mountains in Scotland have height more than 1000 meters?", 6, "CRI",
            ("geo", "osmo:Mountain", ("within",), "gadmr:administrativeUnit_GBR_adm1_3",
             [("dbp:height", ">", ("1000", "m"))])),
    "q19": ("Which Greek restaurants are in London?", 6, "CRI",
            ("geo", "osmo:Restaurant", ("within",), "gadmr:administrativeUnit_GBR_adm2_56",
             [("dbo:cuisine", "contains", "Greek")])),
    "q20": ("Which rivers in Ireland have length more than 50 km?", 6, "CRI",
            ("qual", "dbo:River", "dbo:country", "dbr:Ireland", [("dbp:length", ">", ("50", "km"))])),
    "q21": ("What is the length of the river that crosses Limerick?", 6, "PCRI",
            ("proj", ("qual", "dbo:River", "dbo:city", "dbr:Limerick", []), "dbp:length", False)),
    "q22": ("What is the height of the mountains in Scotland?", 6, "PCRI",
            ("proj", ("geo", "osmo:Mountain", ("within",), "gadmr:administrativeUnit_GBR_adm1_3", []),
             "dbp:height", True)),
    "q23": ("What is the name of the river that flows under the Queensway Bridge in Liverpool?", 6,
            "PCRIRI",
            ("proj", ("geo2", "osmo:River", ("crosses",), "osmr:bridges/id/2001", ("within",),
                      "gadmr:administrativeUnit_GBR_adm2_40"), "dbp:name", True)),
    "q24": ("What is the name of the river that flows under the Tower Bridge in London?", 6, "PCRIRI",
            ("proj", ("geo2", "osmo:River", ("crosses",), "osmr:bridges/id/2002", ("within",),
                      "gadmr:administrativeUnit_GBR_adm2_56"), "dbp:name", True)),
    "q25": ("How many hospitals are there in Oxford?", 7, "NCRI",
            ("count", ("geo", "osmo:Hospital", ("within",), "gadmr:administrativeUnit_GBR_adm2_60", []))),
    "q26": ("How many restaurants are there in London?", 7, "NCRI",
            ("count", ("geo", "osmo:Restaurant", ("within",), "gadmr:administrativeUnit_GBR_adm2_56", []))),
}


def gold_rows(triples) -> List[dict]:
    kb = RawKb(triples)
    rows = []
    for qid, (text, cat, pattern, recipe) in GOLD_RECIPES.items():
        answers = sorted({to_json_value(v) for v in gold_answers(kb, recipe)}, key=repr)
        rows.append({"id": qid, "text": text, "category": cat, "pattern": pattern, "answers": answers})
    return rows


def synthetic_link_sides():
    """Two sources over 4 classes; returns (left, right, planted pairs, class pairs)."""
    from geoqa.geometry import parse_wkt
    from geoqa.kb import KnowledgeBase, Triple
    from geoqa.terms import RDF_TYPE, Iri, PlainLiteral, WktLiteral, expand

    left, right, planted = [], [], set()
    pairs = []
    words = ["Ash", "Birch", "Cedar", "Dale", "Elm", "Fern", "Glen", "Heath", "Ivy", "June",
             "Kings", "Larch", "Moor", "Nook", "Oak", "Pine", "Quay", "Rowan", "Sedge", "Thorn",
             "Usk", "Vale", "Wren", "Yew"]
    n = 0
    for ci, cls in enumerate(["Town", "Lake", "Park", "School"]):
        lc, rc = Iri(f"http://l.example/{cls}"), Iri(f"http://r.example/{cls}")
        pairs.append((lc, rc))
        for k in range(6):
            name = f"{words[n % len(words)]} {cls} {n}"
            x, y = 10 + ci * 2 + k * 0.2, 50 + k * 0.1
            li, ri = Iri(f"http://l.example/e{n}"), Iri(f"http://r.example/e{n}")
            mode = k % 3  # 0: planted match, 1: label perturbed hard, 2: offset far
            rlabel = f"Zq{n} Xx" if mode == 1 else name.replace(name[0], name[0].lower(), 1)
            dx = 0.002 if mode != 2 else 0.05
            for side, iri, c, label, px in ((left, li, lc, name, x), (right, ri, rc, rlabel, x + dx)):
                g = Iri(iri.value + "/geom")
                src = "gadm" if side is left else "osm"
                side += [Triple(iri, RDF_TYPE, c, src),
                         Triple(iri, Iri(expand("rdfs:label")), PlainLiteral(label), src),
                         Triple(iri, Iri(expand("geo:hasGeometry")), g, src),
                         Triple(g, Iri(expand("geo:asWKT")),
                                WktLiteral(f"POINT({px} {y})", parse_wkt(f"POINT({px} {y})")), src)]
            if mode == 0:
                planted.add((li, ri))
            n += 1
    return KnowledgeBase(left), KnowledgeBase(right), planted, pairs
