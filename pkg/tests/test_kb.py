from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from geoqa.geometry import Point
from geoqa.kb import KbLoadError, KnowledgeBase, Triple, load_ntriples, normalize_label, read_manifest
from geoqa.terms import OWL_SAMEAS, RDF_TYPE, Iri, PlainLiteral, expand

import oracles as O


def I(curie):
    return Iri(expand(curie))


def test_fixture_loads_cleanly(kb):
    assert kb.rejected == ()
    assert kb.stats.source_count["dbpedia"] == 78
    assert kb.stats.source_count["gadm"] == 48
    assert kb.stats.source_count["osm"] == 152
    assert len(kb.instances_of(I("osmo:River"))) == 10


def test_stats_match_counting_oracle(kb):
    rows = O.RawKb(kb.triples).rows
    assert kb.stats.total_triples == len(rows)
    assert kb.stats.distinct_subjects == len({r[0] for r in rows})
    assert {p.value: n for p, n in kb.stats.predicate_count.items()} == dict(Counter(r[1] for r in rows))


def test_match_agrees_with_scan(kb):
    rows = O.RawKb(kb.triples).rows
    river = expand("osmo:River")
    want = sorted(r[0] for r in rows if r[1] == RDF_TYPE.value and r[2] == river)
    got = sorted(s.value for s, _, _ in kb.match(p=RDF_TYPE, o=Iri(river)))
    assert got == want
    assert kb.match_count(p=RDF_TYPE, o=Iri(river)) == len(want)
    assert kb.match_count() == len(rows)


def test_same_as_is_symmetric(kb):
    for t in kb.triples:
        if t.predicate == OWL_SAMEAS:
            assert t.subject in kb.objects(t.object, OWL_SAMEAS)
            assert kb.same_as(t.subject) == kb.same_as(t.object)


def test_same_as_closure_on_small_graph():
    a, b, c = (Iri(f"http://e/{n}") for n in "abc")
    kb = KnowledgeBase([Triple(a, OWL_SAMEAS, b, "links"), Triple(c, OWL_SAMEAS, b, "links")])
    assert kb.same_as(a) == {a, b, c}
    assert len(kb) == 4


def test_label_lookup_normalises():
    s = Iri("http://e/x")
    kb = KnowledgeBase([Triple(s, Iri(expand("rdfs:label")), PlainLiteral("  River  Shannon."), "osm")])
    assert kb.label_lookup("river shannon") == {s}
    assert normalize_label('"Hello,  World!"') == "hello, world"


def test_geometry_and_primary_source(kb):
    london = I("osmr:places/id/2518952")
    assert isinstance(kb.geometry_of(london), Point)
    assert kb.primary_source(london) == "osm"
    assert kb.primary_source(I("dbr:London")) == "dbpedia"


def test_malformed_lines_are_rejected(tmp_path):
    f = tmp_path / "x.nt"
    f.write_text(
        "# comment\n"
        "<http://e/a> <http://e/p> <http://e/b> .\n"
        "<http://e/a> <http://e/p> broken\n"
        '<http://e/a> <http://www.opengis.net/ont/geosparql#asWKT> "POINT(500 0)"'
        "^^<http://www.opengis.net/ont/geosparql#wktLiteral> .\n"
        '<http://e/a> <http://e/n> "x"^^<http://www.w3.org/2001/XMLSchema#integer> .\n')
    res = load_ntriples(f, "osm")
    assert len(res.triples) == 1
    assert [r.line for r in res.rejected] == [3, 4, 5]
    with pytest.raises(ValueError):
        load_ntriples(f, "wikidata")


def test_missing_manifest(tmp_path):
    with pytest.raises(KbLoadError):
        read_manifest(tmp_path)
    with pytest.raises(KbLoadError):
        KnowledgeBase.load_files([(str(tmp_path / "nope.nt"), "osm")])


def test_duplicate_triples_collapse():
    t = Triple(Iri("http://e/a"), RDF_TYPE, Iri("http://e/C"), "osm")
    assert len(KnowledgeBase([t, t])) == 1


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 5), st.integers(0, 5)), max_size=12))
def test_same_as_components_partition(edges):
    nodes = [Iri(f"http://e/n{i}") for i in range(6)]
    kb = KnowledgeBase([Triple(nodes[a], OWL_SAMEAS, nodes[b], "links") for a, b in edges])
    for n in nodes:
        comp = kb.same_as(n)
        assert n in comp
        for m in comp:
            assert kb.same_as(m) == comp
