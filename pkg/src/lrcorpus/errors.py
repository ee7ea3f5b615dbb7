"""Exception hierarchy.

Every error raised for bad user input derives from :class:`InputError`, which
the command line maps to exit status 1. :class:`InvariantViolation` marks a
broken internal invariant (exit status 2).
"""


class InputError(ValueError):
    pass


class InvariantViolation(RuntimeError):
    pass


# corpus
class UnknownTag(InputError):
    pass


class OrphanInsideTag(InputError):
    pass


class EmptyToken(InputError):
    pass


class OverlappingSpans(InputError):
    pass


class SpanOutOfRange(InputError):
    pass


class EmptyCorpus(InputError):
    pass


class Misaligned(InputError):
    pass


# gazetteer
class UnknownClass(InputError):
    pass


class MalformedLine(InputError):
    pass


# noise model
class EmptyInput(InputError):
    pass


# evaluation
class NoTestEntities(InputError):
    pass


# agreement
class DegenerateAgreement(InputError):
    pass


# transfer ranking
class DisjointTrees(InputError):
    pass


class NoSharedFeatures(InputError):
    pass


class ZeroVector(InputError):
    pass


class NoUsableFeatures(InputError):
    pass


class MissingScore(InputError):
    pass


class LengthMismatch(InputError):
    pass


class ZeroVariance(InputError):
    pass


# language model
class OrderTooLargeForData(InputError):
    pass


class ZeroProbability(InputError):
    pass


# vocabulary
class KExceedsVocab(InputError):
    pass
