"""scikit-learn style front-ends for question answering and interlinking."""
from __future__ import annotations

from pathlib import Path
from typing import List, Optional, Sequence

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .evaluate import macro, score_question
from .interlink import InterlinkConfig, interlink
from .kb import KnowledgeBase
from .pipeline import ask, compile_question
from .resources import Resources, default_data_dir


def _validate_questions(X) -> List[str]:
    if isinstance(X, str):
        raise TypeError("expected a sequence of questions, got a single string")
    try:
        questions = list(X)
    except TypeError:
        raise TypeError(f"expected a sequence of questions, got {type(X).__name__}") from None
    for i, q in enumerate(questions):
        if not isinstance(q, str) or not q.strip():
            raise ValueError(f"question {i} must be a non-empty string")
    return questions


class GeoQA(BaseEstimator):
    """Answer English geospatial questions over a bundled or supplied KB.

    ``fit`` only loads the knowledge base and lookup tables; nothing is
    learned. ``predict`` returns one answer list per question (empty when
    the question could not be answered).
    """

    def __init__(self, data_dir: Optional[str] = None, strict: bool = False):
        self.data_dir = data_dir
        self.strict = strict

    def fit(self, X=None, y=None):
        root = Path(self.data_dir) if self.data_dir else default_data_dir()
        self.kb_ = KnowledgeBase.load(root / "kb")
        self.resources_ = Resources.load(root / "tables")
        return self

    def transform(self, X) -> list:
        """Compiled question objects (pattern, logical form, ranked queries)."""
        check_is_fitted(self, "kb_")
        return [compile_question(q, self.kb_, self.resources_) for q in _validate_questions(X)]

    def predict(self, X) -> list:
        check_is_fitted(self, "kb_")
        out = []
        for q in _validate_questions(X):
            _, ans = ask(q, self.kb_, self.resources_, strict=self.strict)
            out.append(ans.values())
        return out

    def score(self, X, y) -> float:
        """Macro-averaged F1 against gold answer lists."""
        preds = self.predict(X)
        y = list(y)
        if len(y) != len(preds):
            raise ValueError("X and y differ in length")
        return macro([score_question(p, g) for p, g in zip(preds, y)]).f1


class Interlinker(BaseEstimator):
    def __init__(self, class_pairs: Sequence = (), sim_threshold: float = 0.85,
                 dist_threshold: float = 1000.0):
        self.class_pairs = class_pairs
        self.sim_threshold = sim_threshold
        self.dist_threshold = dist_threshold

    def fit(self, left: KnowledgeBase, right: KnowledgeBase):
        if not isinstance(left, KnowledgeBase) or not isinstance(right, KnowledgeBase):
            raise TypeError("fit expects two KnowledgeBase instances")
        cfg = InterlinkConfig(list(self.class_pairs), self.sim_threshold, self.dist_threshold)
        result = interlink(left, right, cfg)
        self.candidates_ = result.candidates
        self.links_ = result.links
        self.skipped_ = result.skipped
        return self

    def predict(self, X=None) -> list:
        check_is_fitted(self, "links_")
        return list(self.links_)
