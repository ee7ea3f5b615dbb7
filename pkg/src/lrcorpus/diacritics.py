"""Yorùbá-style diacritics: normalization, stripping, seeded corruption and a
frequency-based restoration baseline."""

from __future__ import annotations

import hashlib
import re
import unicodedata
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import EmptyCorpus, LengthMismatch

GRAVE = "\u0300"
ACUTE = "\u0301"
MACRON = "\u0304"
DOT_BELOW = "\u0323"

TONAL_MARKS = frozenset({GRAVE, ACUTE, MACRON})
STRUCTURAL_MARKS = frozenset({DOT_BELOW})
ALL_MARKS = TONAL_MARKS | STRUCTURAL_MARKS
_TONAL_ORDER = (GRAVE, ACUTE, MACRON)

_WORD = re.compile(r"\S+")


def normalize(text: str, form: str = "NFC") -> str:
    if form not in ("NFC", "NFD"):
        raise ValueError(f"form must be NFC or NFD, not {form!r}")
    return unicodedata.normalize(form, text)


def strip(text: str, mode: str = "all") -> str:
    """Remove tonal marks (``mode="tonal"``) or tonal marks and under-dots (``"all"``)."""
    if mode == "tonal":
        drop = TONAL_MARKS
    elif mode == "all":
        drop = ALL_MARKS
    else:
        raise ValueError(f"mode must be 'tonal' or 'all', not {mode!r}")
    decomposed = unicodedata.normalize("NFD", text)
    return unicodedata.normalize("NFC", "".join(ch for ch in decomposed if ch not in drop))


def uniform(seed: int, index: int, draw: int) -> float:
    """A float in [0, 1) determined only by ``(seed, index, draw)``."""
    digest = hashlib.blake2b(f"{seed}:{index}:{draw}".encode(), digest_size=8).digest()
    return (int.from_bytes(digest, "big") >> 11) / float(1 << 53)


def _corrupt(text, p_remove, p_replace, seed, start):
    out = []
    index = start
    for ch in unicodedata.normalize("NFD", text):
        if ch not in TONAL_MARKS:
            out.append(ch)
            continue
        if uniform(seed, index, 0) < p_remove:
            pass
        elif uniform(seed, index, 1) < p_replace:
            others = [m for m in _TONAL_ORDER if m != ch]
            out.append(others[0] if uniform(seed, index, 2) < 0.5 else others[1])
        else:
            out.append(ch)
        index += 1
    return unicodedata.normalize("NFC", "".join(out)), index


def corrupt(text: str, p_remove: float = 0.3, p_replace: float = 0.3, seed: int = 0,
            start_index: int = 0) -> str:
    """Randomly delete or swap tonal marks.

    Each tonal mark is first deleted with probability ``p_remove``; a mark
    that survives is replaced with probability ``p_replace`` by one of the
    two other tonal marks. Random draws are keyed by ``seed`` and the running
    mark index (starting at ``start_index``), so the result does not depend
    on platform or on how a corpus is split into chunks.
    """
    for p in (p_remove, p_replace):
        if not 0.0 <= p <= 1.0:
            raise ValueError("probabilities must lie in [0, 1]")
    return _corrupt(text, p_remove, p_replace, seed, start_index)[0]


def count_tonal_marks(text: str) -> int:
    return sum(ch in TONAL_MARKS for ch in unicodedata.normalize("NFD", text))


def corrupt_lines(lines: Iterable[str], p_remove: float = 0.3, p_replace: float = 0.3,
                  seed: int = 0) -> list[str]:
    out = []
    index = 0
    for line in lines:
        corrupted, index = _corrupt(line, p_remove, p_replace, seed, index)
        out.append(corrupted)
    return out


@dataclass
class Restorer:
    mapping: dict = field(default_factory=dict)   # stripped -> restored form
    counts: dict = field(default_factory=dict)    # stripped -> count of the restored form
    n_tokens: int = 0

    def __getitem__(self, key):
        return self.mapping[key]

    def __contains__(self, key):
        return key in self.mapping

    def to_tsv(self) -> str:
        return "".join(
            f"{k}\t{self.mapping[k]}\t{self.counts.get(k, 0)}\n" for k in sorted(self.mapping)
        )

    @classmethod
    def from_tsv(cls, text: str) -> "Restorer":
        r = cls()
        for line in text.splitlines():
            if not line.strip():
                continue
            key, value, count = line.split("\t")
            r.mapping[key] = value
            r.counts[key] = int(count)
            r.n_tokens += int(count)
        return r


def train_restorer(words: Iterable[str]) -> Restorer:
    """Map each stripped word form to its most frequent diacritized spelling.

    Ties go to the lexicographically smallest spelling.
    """
    forms = defaultdict(Counter)
    n = 0
    for word in words:
        word = unicodedata.normalize("NFC", word)
        forms[strip(word, "all")][word] += 1
        n += 1
    if n == 0:
        raise EmptyCorpus("cannot train a restorer on an empty corpus")
    r = Restorer(n_tokens=n)
    for key, counter in forms.items():
        best = min(counter, key=lambda w: (-counter[w], w))
        r.mapping[key] = best
        r.counts[key] = counter[best]
    return r


def restore(text: str, r: Restorer) -> str:
    def sub(m):
        word = m.group(0)
        return r.mapping.get(strip(word, "all"), word)

    return _WORD.sub(sub, text)


def _mark_positions(word: str) -> set[tuple[int, str]]:
    """``(base character index, mark)`` pairs of the word in NFD."""
    pairs = set()
    base = -1
    for ch in unicodedata.normalize("NFD", word):
        if unicodedata.combining(ch):
            if ch in ALL_MARKS:
                pairs.add((base, ch))
        else:
            base += 1
    return pairs


def restoration_metrics(reference: Sequence[str], hypothesis: Sequence[str]) -> dict:
    """Word accuracy and diacritic precision/recall.

    Both sides are word lists (a string is split on whitespace). Diacritics
    are compared as ``(base index, mark)`` pairs within each aligned word.
    With nothing to count, precision/recall are 1.0 if both sides are empty
    of marks and 0.0 otherwise.
    """
    if isinstance(reference, str):
        reference = reference.split()
    if isinstance(hypothesis, str):
        hypothesis = hypothesis.split()
    if len(reference) != len(hypothesis):
        raise LengthMismatch(f"{len(reference)} reference vs {len(hypothesis)} hypothesis words")
    correct = tp = n_ref = n_hyp = 0
    for ref, hyp in zip(reference, hypothesis):
        ref = unicodedata.normalize("NFC", ref)
        hyp = unicodedata.normalize("NFC", hyp)
        correct += ref == hyp
        r, h = _mark_positions(ref), _mark_positions(hyp)
        tp += len(r & h)
        n_ref += len(r)
        n_hyp += len(h)
    vacuous = 1.0 if n_ref == n_hyp == 0 else 0.0
    return {
        "word_accuracy": correct / len(reference) if reference else 1.0,
        "diacritic_precision": tp / n_hyp if n_hyp else vacuous,
        "diacritic_recall": tp / n_ref if n_ref else vacuous,
    }
