"""Tokenized, IOB2-tagged corpora and CoNLL-style reading/writing."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

from .errors import (
    EmptyCorpus,
    EmptyToken,
    Misaligned,
    OrphanInsideTag,
    OverlappingSpans,
    SpanOutOfRange,
    UnknownTag,
)

ENTITY_CLASSES = ("PER", "LOC", "ORG", "DATE")
OUTSIDE = "O"
TAGS = (OUTSIDE,) + tuple(f"{p}-{c}" for c in ENTITY_CLASSES for p in ("B", "I"))
_TAG_SET = frozenset(TAGS)

DOCSTART = "-DOCSTART-"


class Span(NamedTuple):
    start: int
    end: int  # exclusive
    label: str

    def __len__(self):
        return self.end - self.start

    def overlaps(self, other: "Span") -> bool:
        return self.start < other.end and other.start < self.end


def tag_class(tag: str) -> str:
    """Entity class of a tag, or ``"O"``."""
    return OUTSIDE if tag == OUTSIDE else tag[2:]


def _check_tags(tokens, tags):
    if len(tokens) != len(tags):
        raise ValueError(f"{len(tokens)} tokens but {len(tags)} tags")
    if not tokens:
        raise ValueError("a sentence needs at least one token")
    prev = OUTSIDE
    for i, (tok, tag) in enumerate(zip(tokens, tags)):
        if not tok or any(ch.isspace() for ch in tok):
            raise EmptyToken(f"token {i} is empty or contains whitespace: {tok!r}")
        if tag not in _TAG_SET:
            raise UnknownTag(f"unknown tag {tag!r} at token {i}")
        if tag[0] == "I" and tag_class(prev) != tag[2:]:
            raise OrphanInsideTag(f"{tag} at token {i} follows {prev}")
        prev = tag


@dataclass(frozen=True)
class TaggedSentence:
    tokens: tuple
    tags: tuple

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "tags", tuple(self.tags))
        _check_tags(self.tokens, self.tags)

    def __len__(self):
        return len(self.tokens)

    @property
    def spans(self) -> list[Span]:
        return spans_of(self)

    def classes(self) -> list[str]:
        """Per-token class (entity class of the covering span, else ``"O"``)."""
        return [tag_class(t) for t in self.tags]

    def surface(self, span: Span) -> str:
        return " ".join(self.tokens[span.start:span.end])


@dataclass(frozen=True)
class Corpus:
    sentences: tuple = ()
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "sentences", tuple(self.sentences))

    def __len__(self):
        return len(self.sentences)

    def __iter__(self):
        return iter(self.sentences)

    def __getitem__(self, i):
        return self.sentences[i]

    @property
    def n_tokens(self) -> int:
        return sum(len(s) for s in self.sentences)

    def entities(self) -> Iterable[tuple[int, Span]]:
        for i, sent in enumerate(self.sentences):
            for span in spans_of(sent):
                yield i, span


@dataclass
class CorpusStats:
    n_sentences: int
    n_tokens: int
    class_counts: dict = field(default_factory=dict)
    n_entity_tokens: int = 0

    @property
    def n_entities(self) -> int:
        return sum(self.class_counts.values())

    @property
    def entity_token_pct(self) -> float:
        return 100.0 * self.n_entity_tokens / self.n_tokens

    def to_dict(self) -> dict:
        return {
            "n_sentences": self.n_sentences,
            "n_tokens": self.n_tokens,
            "n_entities": self.n_entities,
            "entities": dict(self.class_counts),
            "entity_token_pct": round(self.entity_token_pct, 2),
        }


def spans_of(sentence: TaggedSentence) -> list[Span]:
    spans = []
    start = None
    label = None
    for i, tag in enumerate(sentence.tags):
        if start is not None and tag != "I-" + label:
            spans.append(Span(start, i, label))
            start = None
        if tag[0] == "B":
            start, label = i, tag[2:]
    if start is not None:
        spans.append(Span(start, len(sentence.tags), label))
    return spans


def tags_from(spans: Iterable[Sequence], length: int) -> list[str]:
    tags = [OUTSIDE] * length
    for span in sorted(Span(*s) for s in spans):
        if span.label not in ENTITY_CLASSES:
            raise UnknownTag(f"unknown entity class {span.label!r}")
        if not 0 <= span.start < span.end <= length:
            raise SpanOutOfRange(f"{span} outside sentence of length {length}")
        if any(t != OUTSIDE for t in tags[span.start:span.end]):
            raise OverlappingSpans(f"{span} overlaps an earlier span")
        tags[span.start] = "B-" + span.label
        for j in range(span.start + 1, span.end):
            tags[j] = "I-" + span.label
    return tags


def repair_tags(tags: Sequence[str]) -> list[str]:
    """Rewrite every I-X not preceded by B-X/I-X as B-X."""
    out = []
    prev = OUTSIDE
    for tag in tags:
        if tag[0] == "I" and tag_class(prev) != tag[2:]:
            tag = "B" + tag[1:]
        out.append(tag)
        prev = tag
    return out


def parse_conll(text: str, mode: str = "strict", name: str = "") -> Corpus:
    """Read ``token<TAB>tag`` lines separated into sentences by blank lines.

    Columns may also be separated by runs of spaces; when more than two
    columns are present the first is the token and the last the tag. Lines
    starting with ``#`` and ``-DOCSTART-`` lines are skipped. In ``repair``
    mode orphan ``I-X`` tags become ``B-X``; ``strict`` mode raises
    :class:`OrphanInsideTag` instead.
    """
    if mode not in ("strict", "repair"):
        raise ValueError(f"mode must be 'strict' or 'repair', not {mode!r}")
    sentences = []
    tokens, tags = [], []

    def flush():
        if tokens:
            fixed = repair_tags(tags) if mode == "repair" else tags
            sentences.append(TaggedSentence(tokens, fixed))
            tokens.clear()
            tags.clear()

    for lineno, raw in enumerate(text.split("\n"), 1):
        line = raw.rstrip("\r")
        if not line.strip():
            flush()
            continue
        fields = line.split("\t") if "\t" in line else line.split()
        # '#'-initial lines are comments unless they are exactly "token<TAB>tag"
        if line.startswith("#") and not (
            "\t" in line and len(fields) == 2 and fields[1] in _TAG_SET
        ):
            continue
        if fields[0] == DOCSTART:
            continue
        if len(fields) < 2:
            raise EmptyToken(f"line {lineno}: expected 'token<TAB>tag', got {line!r}")
        token, tag = fields[0], fields[-1].strip()
        if not token:
            raise EmptyToken(f"line {lineno}: empty token")
        if tag not in _TAG_SET:
            raise UnknownTag(f"line {lineno}: unknown tag {tag!r}")
        tokens.append(token)
        tags.append(tag)
    flush()
    return Corpus(sentences, name=name)


def write_conll(corpus: Corpus | Iterable[TaggedSentence]) -> str:
    parts = []
    for sent in corpus:
        for tok, tag in zip(sent.tokens, sent.tags):
            parts.append(f"{tok}\t{tag}\n")
        parts.append("\n")
    return "".join(parts)


def read_conll(path, mode: str = "strict") -> Corpus:
    with open(path, encoding="utf-8") as f:
        return parse_conll(f.read(), mode=mode, name=str(path))


def corpus_stats(corpus: Corpus) -> CorpusStats:
    n_tokens = corpus.n_tokens
    if n_tokens == 0:
        raise EmptyCorpus("entity-token percentage is undefined for an empty corpus")
    counts = Counter({c: 0 for c in ENTITY_CLASSES})
    inside = 0
    for _, span in corpus.entities():
        counts[span.label] += 1
        inside += len(span)
    return CorpusStats(len(corpus), n_tokens, dict(counts), inside)


def check_aligned(a: Corpus, b: Corpus, same_text: bool = False):
    """Raise :class:`Misaligned` unless the corpora pair up sentence by sentence."""
    if len(a) != len(b):
        raise Misaligned(f"{len(a)} sentences vs {len(b)}")
    for i, (x, y) in enumerate(zip(a, b)):
        if len(x) != len(y):
            raise Misaligned(f"sentence {i}: {len(x)} tokens vs {len(y)}")
        if same_text and x.tokens != y.tokens:
            raise Misaligned(f"sentence {i}: token text differs")
