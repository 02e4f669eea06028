"""Geospatial question answering over linked geodata."""
from .annotate import AnnotatedTree, annotate, ingest_conllu, parse_question
from .estimator import GeoQA, Interlinker
from .evaluate import BenchmarkReport, GoldQuestion, Metrics, load_gold, run_benchmark, score_question
from .execute import answer, execute
from .geometry import cardinal, min_distance_m, parse_wkt, sf_crosses, sf_touches, sf_within
from .interlink import InterlinkConfig, interlink
from .kb import KnowledgeBase, Triple
from .pipeline import ask, compile_question
from .querygen import QuestionPattern, detect_pattern, estimate_cardinality, instantiate, logical_form, rank
from .resources import Resources

__version__ = "0.1.0"

__all__ = [
    "AnnotatedTree", "BenchmarkReport", "GeoQA", "GoldQuestion", "InterlinkConfig", "Interlinker",
    "KnowledgeBase", "Metrics", "QuestionPattern", "Resources", "Triple", "annotate", "answer", "ask",
    "cardinal", "compile_question", "detect_pattern", "estimate_cardinality", "execute",
    "ingest_conllu", "instantiate", "interlink", "load_gold", "logical_form", "min_distance_m",
    "parse_question", "parse_wkt", "rank", "run_benchmark", "score_question", "sf_crosses",
    "sf_touches", "sf_within",
]
