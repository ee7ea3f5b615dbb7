"""Class-level confusion matrix between clean (gold) and noisy labels."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .corpus import OUTSIDE, Corpus, TaggedSentence, check_aligned
from .errors import EmptyInput
from .evaluation import span_prf

LABEL_CLASSES = ("PER", "LOC", "ORG", "DATE", OUTSIDE)
_INDEX = {c: i for i, c in enumerate(LABEL_CLASSES)}
DEFAULT_ALPHA = 1.0


@dataclass
class NoiseMatrix:
    """``matrix[c, n]`` = P(noisy class n | clean class c)."""

    matrix: np.ndarray
    priors: np.ndarray
    alpha: float = DEFAULT_ALPHA
    counts: np.ndarray | None = None

    classes = LABEL_CLASSES

    def to_dict(self) -> dict:
        out = {
            "classes": list(LABEL_CLASSES),
            "matrix": self.matrix.tolist(),
            "priors": self.priors.tolist(),
            "alpha": self.alpha,
        }
        if self.counts is not None:
            out["counts"] = self.counts.astype(int).tolist()
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "NoiseMatrix":
        if list(d["classes"]) != list(LABEL_CLASSES):
            raise ValueError(f"expected classes {LABEL_CLASSES}, got {d['classes']}")
        counts = d.get("counts")
        return cls(
            np.asarray(d["matrix"], dtype=float),
            np.asarray(d["priors"], dtype=float),
            float(d.get("alpha", 0.0)),
            None if counts is None else np.asarray(counts, dtype=float),
        )

    @classmethod
    def identity(cls) -> "NoiseMatrix":
        k = len(LABEL_CLASSES)
        return cls(np.eye(k), np.full(k, 1.0 / k), 0.0)


def pair_counts(gold: Corpus, noisy: Corpus) -> np.ndarray:
    check_aligned(gold, noisy, same_text=True)
    counts = np.zeros((len(LABEL_CLASSES), len(LABEL_CLASSES)))
    for g, n in zip(gold, noisy):
        for c, o in zip(g.classes(), n.classes()):
            counts[_INDEX[c], _INDEX[o]] += 1
    return counts


def estimate_noise(gold: Corpus, noisy: Corpus, alpha: float = DEFAULT_ALPHA) -> NoiseMatrix:
    """Count-and-normalize estimate with add-``alpha`` smoothing per row.

    A clean class never seen in ``gold`` gets an identity row when
    ``alpha == 0``: with no evidence, assume no noise.
    """
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    counts = pair_counts(gold, noisy)
    total = counts.sum()
    if total == 0:
        raise EmptyInput("no tokens to count")
    k = len(LABEL_CLASSES)
    row_sums = counts.sum(axis=1)
    matrix = np.empty_like(counts)
    for c in range(k):
        denom = row_sums[c] + k * alpha
        if denom == 0:
            matrix[c] = np.eye(k)[c]
        else:
            matrix[c] = (counts[c] + alpha) / denom
    priors = row_sums / total
    return NoiseMatrix(matrix, priors, alpha, counts)


def posterior_class(observed: str, nm: NoiseMatrix) -> str:
    """argmax_c prior(c) * P(observed | c); earlier classes win ties."""
    scores = nm.priors * nm.matrix[:, _INDEX[observed]]
    return LABEL_CLASSES[int(np.argmax(scores))]


def _relabel(sentence: TaggedSentence, new_classes) -> TaggedSentence:
    tags = []
    prev = OUTSIDE
    for tag, old, new in zip(sentence.tags, sentence.classes(), new_classes):
        if new == OUTSIDE:
            tags.append(OUTSIDE)
        elif prev != new or (old == new and tag[0] == "B"):
            tags.append("B-" + new)
        else:
            tags.append("I-" + new)
        prev = new
    return TaggedSentence(sentence.tokens, tags)


def posterior_correct(noisy: Corpus, nm: NoiseMatrix) -> Corpus:
    """Relabel each token with its most probable clean class.

    Consecutive tokens of the same corrected class fuse into one span, except
    that a span boundary already present in the input is kept.
    """
    table = {o: posterior_class(o, nm) for o in LABEL_CLASSES}
    return Corpus(
        [_relabel(s, [table[c] for c in s.classes()]) for s in noisy],
        name=noisy.name,
    )


def noise_report(gold: Corpus, noisy: Corpus) -> dict:
    overall, per_class = span_prf(gold, noisy)
    return {
        "overall": overall.to_dict(),
        "per_class": {c: prf.to_dict() for c, prf in per_class.items()},
    }
