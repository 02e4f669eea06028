"""Class-by-class sameAs discovery from label similarity and geometric distance."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

from .geometry import min_distance_m
from .kb import KnowledgeBase, Triple, normalize_label
from .terms import OWL_SAMEAS, Iri, expand, serialize

DEFAULT_SIM = 0.85
DEFAULT_DIST_M = 1000.0


def edit_distance(a: str, b: str) -> int:
    """Levenshtein distance, two-row dynamic programme."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i]
        for j, cb in enumerate(b, start=1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def levenshtein_sim(a: str, b: str) -> float:
    """1 - distance / longer length; 1.0 for two empty strings."""
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return 1.0 - edit_distance(a, b) / longest


@dataclass(frozen=True)
class MatchCandidate:
    left: Iri
    right: Iri
    label_sim: float
    dist_m: float
    accepted: bool
    failed_criterion: str = ""


@dataclass
class InterlinkConfig:
    class_pairs: Sequence[Tuple[Iri, Iri]]
    sim_threshold: float = DEFAULT_SIM
    dist_threshold: float = DEFAULT_DIST_M

    def __post_init__(self):
        if not 0 < self.sim_threshold <= 1:
            raise ValueError("sim_threshold must be in (0, 1]")
        if self.dist_threshold <= 0:
            raise ValueError("dist_threshold must be positive")


@dataclass
class InterlinkResult:
    candidates: List[MatchCandidate]
    links: List[Triple]
    skipped: List[Tuple[Iri, Iri]] = field(default_factory=list)

    @property
    def accepted(self) -> List[MatchCandidate]:
        return [c for c in self.candidates if c.accepted]

    @property
    def review(self) -> List[MatchCandidate]:
        return [c for c in self.candidates if not c.accepted]


def label_similarity(left: KnowledgeBase, l_iri: Iri, right: KnowledgeBase, r_iri: Iri) -> float:
    ll = [normalize_label(x) for x in left.labels_of(l_iri)]
    rl = [normalize_label(x) for x in right.labels_of(r_iri)]
    if not ll or not rl:
        return 0.0
    return max(levenshtein_sim(a, b) for a in ll for b in rl)


def interlink(left: KnowledgeBase, right: KnowledgeBase, cfg: InterlinkConfig) -> InterlinkResult:
    """Compare every cross pair of each class pair.

    Pairs passing both thresholds become sameAs links; pairs failing exactly
    one criterion are kept as rejected candidates for manual review.
    """
    candidates, skipped = {}, set()
    for l_cls, r_cls in cfg.class_pairs:
        for l_iri in sorted(left.instances_of(l_cls)):
            lg = left.geometry_of(l_iri)
            for r_iri in sorted(right.instances_of(r_cls)):
                rg = right.geometry_of(r_iri)
                if lg is None or rg is None:
                    skipped.add((l_iri, r_iri))
                    continue
                sim = label_similarity(left, l_iri, right, r_iri)
                dist = min_distance_m(lg, rg)
                sim_ok = sim >= cfg.sim_threshold
                dist_ok = dist <= cfg.dist_threshold
                if sim_ok and dist_ok:
                    cand = MatchCandidate(l_iri, r_iri, sim, dist, True)
                elif sim_ok or dist_ok:
                    cand = MatchCandidate(l_iri, r_iri, sim, dist, False,
                                          "distance" if sim_ok else "similarity")
                else:
                    continue
                candidates[(l_iri, r_iri)] = cand
    ordered = [candidates[k] for k in sorted(candidates)]
    links = [Triple(c.left, OWL_SAMEAS, c.right, "links") for c in ordered if c.accepted]
    return InterlinkResult(ordered, links, sorted(skipped))


def write_links(path, links: Sequence[Triple]):
    with open(path, "w", encoding="utf-8") as fh:
        for t in links:
            fh.write(f"{serialize(t.subject)} {serialize(t.predicate)} {serialize(t.object)} .\n")


def write_review(path, candidates: Sequence[MatchCandidate]):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["leftIri", "rightIri", "labelSim", "distM", "failedCriterion"])
        for c in candidates:
            if not c.accepted:
                w.writerow([c.left.value, c.right.value, f"{c.label_sim:.6f}",
                            f"{c.dist_m:.3f}", c.failed_criterion])


def read_class_pairs(path) -> List[Tuple[Iri, Iri]]:
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, row in enumerate(fh, start=1):
            row = row.rstrip("\n")
            if not row.strip() or row.startswith("#"):
                continue
            parts = row.split("\t")
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected 'leftClass<TAB>rightClass'")
            pairs.append((Iri(expand(parts[0].strip())), Iri(expand(parts[1].strip()))))
    return pairs
