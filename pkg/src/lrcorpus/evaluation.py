"""Entity-level evaluation: exact-match P/R/F1, OOV entity rate, hard-case buckets."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Collection

from .corpus import ENTITY_CLASSES, Corpus, check_aligned, spans_of
from .errors import NoTestEntities

LONG_ENTITY_TOKENS = 4


@dataclass
class PRF:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    def __iadd__(self, other: "PRF"):
        self.tp += other.tp
        self.fp += other.fp
        self.fn += other.fn
        return self

    def to_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
        }


def _filtered(spans, classes):
    return {s for s in spans if s.label in classes}


def span_prf(gold: Corpus, pred: Corpus, classes: Collection[str] = ENTITY_CLASSES):
    """CoNLL exact-match scoring.

    Returns ``(overall, per_class)``; ``overall`` is micro-averaged over the
    selected classes. Spans of other classes are ignored on both sides.
    """
    check_aligned(gold, pred)
    classes = tuple(c for c in ENTITY_CLASSES if c in set(classes))
    per_class = {c: PRF() for c in classes}
    for g_sent, p_sent in zip(gold, pred):
        g = _filtered(spans_of(g_sent), classes)
        p = _filtered(spans_of(p_sent), classes)
        for s in g & p:
            per_class[s.label].tp += 1
        for s in p - g:
            per_class[s.label].fp += 1
        for s in g - p:
            per_class[s.label].fn += 1
    overall = PRF()
    for prf in per_class.values():
        overall += prf
    return overall, per_class


def entity_surfaces(corpus: Corpus) -> set[str]:
    return {corpus[i].surface(span) for i, span in corpus.entities()}


def oov_entity_rate(test: Corpus, train: Corpus) -> float:
    """Percentage of test entity occurrences whose surface never occurs as a train entity."""
    known = entity_surfaces(train)
    total = oov = 0
    for i, span in test.entities():
        total += 1
        oov += test[i].surface(span) not in known
    if total == 0:
        raise NoTestEntities("test corpus has no entities")
    return 100.0 * oov / total


@dataclass
class BucketReport:
    f1_all: PRF
    f1_zero_freq: PRF | None
    f1_long: PRF | None

    @staticmethod
    def _delta(bucket, overall):
        return None if bucket is None else bucket.f1 - overall.f1

    def to_dict(self) -> dict:
        out = {"all": self.f1_all.to_dict()}
        for name, prf in (("zero_freq", self.f1_zero_freq), ("long", self.f1_long)):
            if prf is not None:
                out[name] = {**prf.to_dict(), "delta_f1": self._delta(prf, self.f1_all)}
            else:
                out[name] = None
        return out


def _bucket_prf(gold: Corpus, pred: Corpus, in_bucket) -> PRF | None:
    """Exact-match counts restricted to a bucket.

    Gold spans count if ``in_bucket`` holds for them. A predicted span counts
    if it is itself in the bucket or overlaps a bucketed gold span; any other
    prediction is ignored.
    """
    prf = PRF()
    n_gold = 0
    for g_sent, p_sent in zip(gold, pred):
        g = {s for s in spans_of(g_sent) if in_bucket(g_sent, s)}
        n_gold += len(g)
        p = {
            s for s in spans_of(p_sent)
            if in_bucket(p_sent, s) or any(s.overlaps(x) for x in g)
        }
        prf.tp += len(g & p)
        prf.fp += len(p - g)
        prf.fn += len(g - p)
    return prf if n_gold else None


def bucket_f1(gold: Corpus, pred: Corpus, train: Corpus,
              long_threshold: int = LONG_ENTITY_TOKENS) -> BucketReport:
    """F1 overall, on entities unseen in training, and on long entities."""
    check_aligned(gold, pred)
    overall, _ = span_prf(gold, pred)
    known = entity_surfaces(train)
    zero = _bucket_prf(gold, pred, lambda sent, s: sent.surface(s) not in known)
    long = _bucket_prf(gold, pred, lambda sent, s: len(s) >= long_threshold)
    return BucketReport(overall, zero, long)


def evaluation_report(gold: Corpus, pred: Corpus, train: Corpus | None = None,
                      classes: Collection[str] = ENTITY_CLASSES) -> dict:
    overall, per_class = span_prf(gold, pred, classes)
    report = {
        "overall": overall.to_dict(),
        "per_class": {c: prf.to_dict() for c, prf in per_class.items()},
    }
    if train is not None:
        report["buckets"] = bucket_f1(gold, pred, train).to_dict()
    return report

