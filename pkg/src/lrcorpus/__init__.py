"""Tooling for building and evaluating named-entity corpora in low-resource languages."""

from .corpus import Corpus, Span, TaggedSentence, parse_conll, read_conll, write_conll
from .errors import InputError, InvariantViolation

__version__ = "0.1.0"

__all__ = [
    "Corpus",
    "InputError",
    "InvariantViolation",
    "Span",
    "TaggedSentence",
    "parse_conll",
    "read_conll",
    "write_conll",
]
