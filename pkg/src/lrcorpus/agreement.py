"""Inter-annotator agreement (Fleiss' kappa), annotator confusion and QC flags."""

from __future__ import annotations

import json
import math
import re
from collections import Counter, defaultdict
from dataclasses import asdict, dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from .corpus import ENTITY_CLASSES, OUTSIDE, Corpus, TaggedSentence, spans_of, tag_class
from .errors import DegenerateAgreement, InputError, Misaligned

NOT_MARKED = "NONE"


class AnnotationSet:
    """Several annotators' tag sequences over the same tokenized sentences.

    ``annotations[a][s]`` is annotator ``a``'s tag sequence for sentence ``s``.
    """

    def __init__(self, tokens: Sequence[Sequence[str]], annotations: Sequence[Sequence[Sequence[str]]]):
        if len(annotations) < 2:
            raise InputError("agreement needs at least two annotators")
        self.tokens = [tuple(t) for t in tokens]
        self.sentences = []  # per annotator, a list of TaggedSentence
        for a, tag_seqs in enumerate(annotations):
            if len(tag_seqs) != len(self.tokens):
                raise Misaligned(f"annotator {a}: {len(tag_seqs)} sentences, expected {len(self.tokens)}")
            self.sentences.append([TaggedSentence(t, tags) for t, tags in zip(self.tokens, tag_seqs)])

    @classmethod
    def from_corpora(cls, corpora: Sequence[Corpus]) -> "AnnotationSet":
        if not corpora:
            raise InputError("no annotations given")
        tokens = [s.tokens for s in corpora[0]]
        for k, c in enumerate(corpora[1:], 1):
            if [s.tokens for s in c] != tokens:
                raise Misaligned(f"annotation {k} does not cover the same tokens as annotation 0")
        return cls(tokens, [[s.tags for s in c] for c in corpora])

    @property
    def n_annotators(self) -> int:
        return len(self.sentences)

    def token_ratings(self) -> list[list[str]]:
        """One row per token: the class each annotator gave it."""
        rows = []
        for s in range(len(self.tokens)):
            per_ann = [ann[s].classes() for ann in self.sentences]
            rows.extend(list(r) for r in zip(*per_ann))
        return rows

    def entity_ratings(self) -> list[list[str]]:
        """One row per proposed span (union over annotators, boundaries only)."""
        rows = []
        for s in range(len(self.tokens)):
            labelled = [{(sp.start, sp.end): sp.label for sp in spans_of(ann[s])} for ann in self.sentences]
            items = sorted(set().union(*labelled))
            for item in items:
                rows.append([lab.get(item, NOT_MARKED) for lab in labelled])
        return rows


def rating_counts(ratings: Sequence[Sequence[str]], categories: Sequence[str]) -> np.ndarray:
    index = {c: i for i, c in enumerate(categories)}
    counts = np.zeros((len(ratings), len(categories)), dtype=np.int64)
    for i, row in enumerate(ratings):
        for r in row:
            counts[i, index[r]] += 1
    return counts


def fleiss_kappa_counts(counts) -> float:
    """Fleiss' kappa from an items x categories matrix of rating counts.

    Every item must have the same number of ratings ``n >= 2``.
    """
    counts = np.asarray(counts, dtype=float)
    if counts.ndim != 2 or counts.shape[0] == 0:
        raise InputError("need at least one item")
    n = counts.sum(axis=1)
    if not np.all(n == n[0]) or n[0] < 2:
        raise InputError("every item needs the same number (>= 2) of ratings")
    n = n[0]
    n_items = counts.shape[0]
    p_items = (np.sum(counts * counts, axis=1) - n) / (n * (n - 1))
    p_bar = p_items.mean()
    p_cat = counts.sum(axis=0) / (n_items * n)
    p_e = np.sum(p_cat * p_cat)
    if p_e == 1.0:
        if p_bar == 1.0:
            return 1.0
        raise DegenerateAgreement("expected agreement is 1")
    return float((p_bar - p_e) / (1.0 - p_e))


def fleiss_kappa(a: AnnotationSet, granularity: str = "token") -> float:
    if granularity == "token":
        ratings, cats = a.token_ratings(), ENTITY_CLASSES + (OUTSIDE,)
    elif granularity == "entity":
        ratings, cats = a.entity_ratings(), ENTITY_CLASSES + (NOT_MARKED,)
    else:
        raise ValueError(f"granularity must be 'token' or 'entity', not {granularity!r}")
    return fleiss_kappa_counts(rating_counts(ratings, cats))


def annotator_confusion(a: AnnotationSet) -> dict:
    """Symmetric class x class counts over annotator pairs and entity items.

    Items one annotator of the pair did not mark are tallied under
    ``"unmatched"`` instead of the matrix.
    """
    idx = {c: i for i, c in enumerate(ENTITY_CLASSES)}
    matrix = np.zeros((len(ENTITY_CLASSES),) * 2, dtype=np.int64)
    unmatched = 0
    for row in a.entity_ratings():
        for x, y in combinations(row, 2):
            if NOT_MARKED in (x, y):
                unmatched += 1
                continue
            matrix[idx[x], idx[y]] += 1
            if x != y:
                matrix[idx[y], idx[x]] += 1
    return {"classes": list(ENTITY_CLASSES), "matrix": matrix.tolist(), "unmatched": unmatched}


# -- quality control flags ---------------------------------------------------

@dataclass(frozen=True)
class QCConfig:
    min_count: int = 5          # occurrences before a token counts as "common"
    entity_fraction: float = 0.9
    max_entropy: float = 0.1    # nats
    min_sentence_len: int = 3


@dataclass(frozen=True)
class Flag:
    kind: str
    sentence: int
    token: object  # int, [start, end] or None
    evidence: str

    def to_json(self) -> str:
        d = asdict(self)
        if isinstance(d["token"], tuple):
            d["token"] = list(d["token"])
        return json.dumps(d, ensure_ascii=False)


_LETTER = re.compile(r"[^\W\d_]")


def _looks_like_abbreviation(token: str) -> bool:
    letters = _LETTER.findall(token)
    return token.endswith(".") and len(letters) <= 4 and any(ch.isupper() for ch in letters)


def _entropy(counter: Counter) -> float:
    total = sum(counter.values())
    return -sum(v / total * math.log(v / total) for v in counter.values() if v)


def qc_flags(corpus: Corpus, cfg: QCConfig = QCConfig()) -> list[Flag]:
    """Positions likely to be annotation or sentence-boundary errors.

    Token statistics are taken over the whole corpus. The type-entropy check
    compares each entity occurrence with the types of the *other* occurrences
    of the same token.
    """
    occurrences = Counter()
    entity_occ = Counter()
    types = defaultdict(Counter)
    for sent in corpus:
        for tok, tag in zip(sent.tokens, sent.tags):
            occurrences[tok] += 1
            if tag != OUTSIDE:
                entity_occ[tok] += 1
                types[tok][tag_class(tag)] += 1

    flags = []
    for si, sent in enumerate(corpus):
        for ti, (tok, tag) in enumerate(zip(sent.tokens, sent.tags)):
            if tag == OUTSIDE:
                n, e = occurrences[tok], entity_occ[tok]
                if n >= cfg.min_count and e / n >= cfg.entity_fraction:
                    flags.append(Flag("frequent-entity-unmarked", si, ti,
                                      f"{tok!r} is an entity in {e}/{n} occurrences"))
                continue
            label = tag_class(tag)
            others = types[tok].copy()
            others[label] -= 1
            others = +others
            if not others:
                continue
            majority = min(others, key=lambda c: (-others[c], c))
            h = _entropy(others)
            if label != majority and h < cfg.max_entropy:
                flags.append(Flag("type-entropy", si, ti,
                                  f"{tok!r} tagged {label}; other occurrences {dict(sorted(others.items()))}, "
                                  f"entropy {h:.3f}"))
        if len(sent) < cfg.min_sentence_len:
            flags.append(Flag("short-sentence", si, (0, len(sent)), f"{len(sent)} tokens"))
        if _looks_like_abbreviation(sent.tokens[-1]):
            flags.append(Flag("abbreviation-final", si, len(sent) - 1,
                              f"sentence ends with {sent.tokens[-1]!r}"))
    return flags
