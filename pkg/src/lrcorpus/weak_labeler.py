"""Distant supervision from entity lists and date keyword rules."""

from __future__ import annotations

import unicodedata
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .corpus import Span, TaggedSentence, tags_from
from .errors import MalformedLine, UnknownClass

GAZETTEER_CLASSES = ("PER", "LOC", "ORG")
DEFAULT_PRECEDENCE = ("PER", "LOC", "ORG")

DEFAULT_MIN_LEN = 2
# personal-name lists get a stricter cut-off
DEFAULT_SOURCE_MIN_LEN = {"nigerian-names": 3}

# Yoruba day/week/month/year/hour markers and their relative forms.
YORUBA_DATE_KEYWORDS = (
    "ọjọ",
    "oṣẹ",
    "oṣù",
    "ọdún",
    "wákàtí",
    "lọdún",
    "lọdún-un",
    "ọdún-un",
    "loṣẹ",
    "lojọ",
    "aago",
)


def nfc(text: str) -> str:
    return unicodedata.normalize("NFC", text)


@dataclass(frozen=True)
class GazetteerEntry:
    surface: tuple
    label: str
    source: str = ""

    @property
    def text(self) -> str:
        return " ".join(self.surface)


class Gazetteer:
    """A set of entity names indexed by a token trie.

    Each trie node is a dict of child token -> node; the key ``None`` holds
    the set of classes of entries ending at that node.
    """

    def __init__(self, entries: Iterable[GazetteerEntry] = (), min_len: Mapping[str, int] | None = None,
                 default_min_len: int = DEFAULT_MIN_LEN):
        self.min_len = dict(min_len or {})
        self.default_min_len = default_min_len
        self.entries = frozenset(entries)
        self._tries = {}

    def __len__(self):
        return len(self.entries)

    def __contains__(self, entry):
        return entry in self.entries

    def without(self, entry: GazetteerEntry) -> "Gazetteer":
        return Gazetteer(self.entries - {entry}, self.min_len, self.default_min_len)

    def trie(self, casefold: bool = False) -> dict:
        if casefold not in self._tries:
            root = {}
            for entry in self.entries:
                node = root
                for tok in entry.surface:
                    key = tok.casefold() if casefold else tok
                    node = node.setdefault(key, {})
                node.setdefault(None, set()).add(entry.label)
            self._tries[casefold] = root
        return self._tries[casefold]

    # Worker processes rebuild tries lazily instead of pickling them.
    def __getstate__(self):
        return {"entries": self.entries, "min_len": self.min_len,
                "default_min_len": self.default_min_len}

    def __setstate__(self, state):
        self.entries = state["entries"]
        self.min_len = state["min_len"]
        self.default_min_len = state["default_min_len"]
        self._tries = {}


@dataclass(frozen=True)
class DateRuleSet:
    keywords: frozenset = field(default_factory=frozenset)
    digit_rule: bool = True

    def __post_init__(self):
        object.__setattr__(self, "keywords", frozenset(nfc(k) for k in self.keywords))

    @classmethod
    def yoruba(cls) -> "DateRuleSet":
        return cls(frozenset(YORUBA_DATE_KEYWORDS))


def load_gazetteer(text: str, min_len_defaults: Mapping[str, int] | None = None,
                   default_min_len: int = DEFAULT_MIN_LEN) -> Gazetteer:
    """Parse ``name<TAB>class<TAB>source`` lines.

    Names are NFC-normalized and split on whitespace. An entry is kept only if
    its name (as written, spaces included) has at least as many characters as
    the minimum for its source; sources missing from ``min_len_defaults``
    use ``default_min_len``.
    """
    if min_len_defaults is None:
        min_len_defaults = DEFAULT_SOURCE_MIN_LEN
    entries = set()
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) not in (2, 3):
            raise MalformedLine(f"line {lineno}: expected name<TAB>class<TAB>source: {line!r}")
        name = nfc(fields[0]).strip()
        label = fields[1].strip()
        source = fields[2].strip() if len(fields) == 3 else ""
        if label not in GAZETTEER_CLASSES:
            raise UnknownClass(f"line {lineno}: class {label!r} not in {GAZETTEER_CLASSES}")
        surface = tuple(name.split())
        if not surface:
            raise MalformedLine(f"line {lineno}: empty name")
        if len(" ".join(surface)) < min_len_defaults.get(source, default_min_len):
            continue
        entries.add(GazetteerEntry(surface, label, source))
    return Gazetteer(entries, min_len_defaults, default_min_len)


def read_gazetteer(path, min_len_defaults=None, default_min_len=DEFAULT_MIN_LEN) -> Gazetteer:
    with open(path, encoding="utf-8") as f:
        return load_gazetteer(f.read(), min_len_defaults, default_min_len)


def read_keywords(path) -> DateRuleSet:
    with open(path, encoding="utf-8") as f:
        words = [w.strip() for w in f if w.strip() and not w.startswith("#")]
    return DateRuleSet(frozenset(words))


def match_entities(tokens: Sequence[str] | TaggedSentence, gaz: Gazetteer,
                   precedence: Sequence[str] = DEFAULT_PRECEDENCE,
                   casefold: bool = False) -> list[Span]:
    """Leftmost-longest, non-overlapping gazetteer matches over tokens."""
    if isinstance(tokens, TaggedSentence):
        tokens = tokens.tokens
    keys = [nfc(t) for t in tokens]
    if casefold:
        keys = [k.casefold() for k in keys]
    rank = {c: i for i, c in enumerate(precedence)}
    root = gaz.trie(casefold)
    spans = []
    n = len(keys)
    i = 0
    while i < n:
        node = root
        best_end, best_labels = None, None
        j = i
        while j < n:
            node = node.get(keys[j])
            if node is None:
                break
            j += 1
            labels = node.get(None)
            if labels:
                best_end, best_labels = j, labels
        if best_end is None:
            i += 1
            continue
        label = min(best_labels, key=lambda c: (rank.get(c, len(rank)), c))
        spans.append(Span(i, best_end, label))
        i = best_end
    return spans


def tag_dates(tokens: Sequence[str], rules: DateRuleSet) -> list[Span]:
    """DATE spans from keyword and digit rules.

    A token is marked if it is a keyword, if the token right before it is a
    keyword, or (with ``digit_rule``) if it is all decimal digits. Runs of
    marked tokens become one span.
    """
    keys = [nfc(t) for t in tokens]
    marked = []
    prev_kw = False
    for tok in keys:
        is_kw = tok in rules.keywords
        marked.append(is_kw or prev_kw or (rules.digit_rule and tok.isdecimal()))
        prev_kw = is_kw
    return _runs(marked, "DATE")


def _runs(marked, label):
    spans = []
    start = None
    for i, m in enumerate(marked):
        if m and start is None:
            start = i
        elif not m and start is not None:
            spans.append(Span(start, i, label))
            start = None
    if start is not None:
        spans.append(Span(start, len(marked), label))
    return spans


def annotate(tokens: Sequence[str], gaz: Gazetteer, rules: DateRuleSet | None = None,
             precedence: Sequence[str] = DEFAULT_PRECEDENCE,
             casefold: bool = False) -> TaggedSentence:
    """Tag one tokenized sentence: gazetteer matches first, then dates on free tokens."""
    tokens = tuple(tokens)
    spans = match_entities(tokens, gaz, precedence, casefold)
    if rules is not None:
        free = [True] * len(tokens)
        for s in spans:
            free[s.start:s.end] = [False] * len(s)
        date_marks = [False] * len(tokens)
        for s in tag_dates(tokens, rules):
            for k in range(s.start, s.end):
                date_marks[k] = free[k]
        spans.extend(_runs(date_marks, "DATE"))
    return TaggedSentence(tokens, tags_from(spans, len(tokens)))


_WORKER_STATE = None


def _init_worker(state):
    # the gazetteer reaches each worker once; its trie is then built once per worker
    global _WORKER_STATE
    _WORKER_STATE = state


def _annotate_in_worker(sentences):
    gaz, rules, precedence, casefold = _WORKER_STATE
    return [annotate(toks, gaz, rules, precedence, casefold) for toks in sentences]


def annotate_all(sentences: Sequence[Sequence[str]], gaz: Gazetteer, rules: DateRuleSet | None = None,
                 precedence: Sequence[str] = DEFAULT_PRECEDENCE, casefold: bool = False,
                 jobs: int = 1, chunk_size: int = 2000) -> list[TaggedSentence]:
    """Annotate many sentences; output order never depends on ``jobs``."""
    sentences = [tuple(s) for s in sentences]
    if jobs <= 1 or len(sentences) <= chunk_size:
        return [annotate(toks, gaz, rules, precedence, casefold) for toks in sentences]
    chunks = [sentences[i:i + chunk_size] for i in range(0, len(sentences), chunk_size)]
    with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker,
                             initargs=((gaz, rules, precedence, casefold),)) as pool:
        return [s for part in pool.map(_annotate_in_worker, chunks) for s in part]
