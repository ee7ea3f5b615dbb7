"""Subword vocabulary reduction and UNK accounting.

Segmentation prefers long pieces but never accepts an avoidable ``<unk>`` (see
:func:`subword_tokenize`), so shrinking a vocabulary can only add unknowns.
Word-initial pieces carry the ``▁`` marker as in SentencePiece vocabularies.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable

from .errors import InputError, KExceedsVocab

WORD_MARKER = "▁"
UNK = "<unk>"
SPECIALS = ("<s>", "<pad>", "</s>", UNK)


class SubwordVocab:
    """Rank-ordered subword inventory. Missing special tokens are prepended."""

    def __init__(self, tokens: Iterable[str], marker: str = WORD_MARKER):
        tokens = list(dict.fromkeys(tokens))
        missing = [s for s in SPECIALS if s not in tokens]
        self.tokens = tuple(missing + tokens)
        self.marker = marker
        self.rank = {t: i for i, t in enumerate(self.tokens)}
        self.max_len = max((len(t) for t in self.tokens), default=0)
        self._cache = {}

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, token):
        return token in self.rank

    def __iter__(self):
        return iter(self.tokens)

    def __eq__(self, other):
        return isinstance(other, SubwordVocab) and self.tokens == other.tokens

    def regular(self) -> list[str]:
        return [t for t in self.tokens if t not in SPECIALS]

    def to_text(self) -> str:
        return "".join(t + "\n" for t in self.tokens)

    @classmethod
    def load(cls, path) -> "SubwordVocab":
        # SentencePiece .vocab files carry a second score column
        with open(path, encoding="utf-8") as f:
            return cls(line.rstrip("\n").split("\t")[0] for line in f if line.strip())


def _options(word, pos, vocab):
    """Pieces usable at ``pos`` in preference order: at a word start marked
    pieces longest first, then bare pieces longest first; ``<unk>`` last."""
    longest = min(vocab.max_len, len(word) - pos)
    opts = []
    if pos == 0:
        for length in range(longest, 0, -1):
            cand = vocab.marker + word[:length]
            if cand in vocab.rank:
                opts.append((cand, length))
    for length in range(longest, 0, -1):
        cand = word[pos:pos + length]
        if cand in vocab.rank and cand not in SPECIALS:
            opts.append((cand, length))
    opts.append((UNK, 1))
    return opts


def _segment_word(word, vocab):
    # best[pos] = (unk count of the best segmentation of word[pos:], first piece, step)
    n = len(word)
    best = [None] * (n + 1)
    best[n] = (0, None, 0)
    for pos in range(n - 1, -1, -1):
        choice = None
        for piece, step in _options(word, pos, vocab):
            unk = best[pos + step][0] + (piece == UNK)
            if choice is None or unk < choice[0]:
                choice = (unk, piece, step)
        best[pos] = choice
    out = []
    pos = 0
    while pos < n:
        _, piece, step = best[pos]
        out.append(piece)
        pos += step
    return out


def subword_tokenize(text: str, vocab: SubwordVocab) -> list[str]:
    """Segment each whitespace-separated word into vocabulary pieces.

    Among the segmentations with the fewest ``<unk>`` pieces, the one chosen
    takes the most preferred piece at every step: at the start of a word,
    marker-prefixed pieces before bare ones, longer before shorter. When
    greedy longest-match produces no avoidable ``<unk>`` this is exactly the
    greedy segmentation. An unmatched character becomes one ``<unk>``.
    """
    out = []
    cache = vocab._cache
    for word in text.split():
        pieces = cache.get(word)
        if pieces is None:
            pieces = cache[word] = _segment_word(word, vocab)
        out.extend(pieces)
    return out


def count_subwords(lines: Iterable[str], vocab: SubwordVocab) -> Counter:
    """Frequency of every vocabulary token (zero included) plus ``<unk>``."""
    counts = Counter({t: 0 for t in vocab.tokens})
    for line in lines:
        counts.update(subword_tokenize(line, vocab))
    return counts


@dataclass
class Group:
    name: str
    corpora: list = field(default_factory=list)  # each corpus is an iterable of lines
    k: int = 0


@dataclass
class GroupSpec:
    groups: list = field(default_factory=list)
    extra_top_m: int = 0


def top_k(counts: Counter, vocab: SubwordVocab, k: int) -> list[str]:
    """The ``k`` most frequent seen regular tokens; ties go to the lower original rank."""
    seen = [t for t in vocab.regular() if counts.get(t, 0) > 0]
    seen.sort(key=lambda t: (-counts[t], vocab.rank[t]))
    return seen[:k]


def reduce_vocab(original: SubwordVocab, spec: GroupSpec) -> SubwordVocab:
    """Specials, each group's top-k tokens, and the original's first ``m`` tokens,
    in original rank order."""
    n_regular = len(original.regular())
    keep = set(SPECIALS)
    for g in spec.groups:
        if g.k < 0:
            raise InputError(f"group {g.name!r}: k must be non-negative")
        if g.k > n_regular:
            raise KExceedsVocab(f"group {g.name!r}: k={g.k} exceeds the {n_regular}-token vocabulary")
        if g.k == 0:
            continue
        lines = [line for corpus in g.corpora for line in corpus]
        if not any(line.strip() for line in lines):
            raise InputError(f"group {g.name!r} has no text but k={g.k}")
        keep.update(top_k(count_subwords(lines, original), original, g.k))
    m = spec.extra_top_m
    if m < 0:
        raise InputError("extra_top_m must be non-negative")
    if m > len(original):
        raise KExceedsVocab(f"m={m} exceeds the {len(original)}-token vocabulary")
    keep.update(original.tokens[:m])
    return SubwordVocab([t for t in original.tokens if t in keep], original.marker)


def coverage_stats(vocab: SubwordVocab, lines: Iterable[str]) -> dict:
    total = unk = 0
    for line in lines:
        pieces = subword_tokenize(line, vocab)
        total += len(pieces)
        unk += sum(p == UNK for p in pieces)
    return {
        "unk_count": unk,
        "n_tokens": total,
        "covered_pct": 100.0 * (1 - unk / total) if total else 100.0,
    }


def read_lines(path) -> list[str]:
    with open(path, encoding="utf-8") as f:
        return [line.rstrip("\n") for line in f]


def coverage_table(vocabs: dict, test_sets: dict) -> dict:
    """``{vocab name: {test name: unk_count}}``, shaped like a per-test-set UNK table."""
    return {
        vn: {tn: coverage_stats(v, lines)["unk_count"] for tn, lines in test_sets.items()}
        for vn, v in vocabs.items()
    }


def reduction_summary(original: SubwordVocab, reduced: SubwordVocab) -> dict:
    return {
        "original_size": len(original),
        "reduced_size": len(reduced),
        "removed": len(original) - len(reduced),
    }


def parse_group(arg: str) -> tuple[str, int, list[str]]:
    """Parse ``NAME:K:FILE[,FILE...]`` as used on the command line."""
    try:
        name, k, files = arg.split(":", 2)
        return name, int(k), [f for f in files.split(",") if f]
    except ValueError:
        raise InputError(f"group must look like NAME:K:FILE[,FILE...], got {arg!r}") from None

