"""Back-off n-gram language models (add-k or interpolated modified Kneser-Ney),
ARPA I/O, perplexity and vocabulary coverage.

Both smoothing methods are stored in ARPA back-off form: a table of
``log10 P(w | h)`` for listed n-grams plus ``log10`` back-off weights for
contexts. Scoring an unlisted n-gram multiplies the context's back-off weight
into the score of the next shorter context.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .correlation import pearson  # noqa: F401
from .errors import EmptyCorpus, InputError, OrderTooLargeForData, ZeroProbability

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"

NEG_INF = float("-inf")
ARPA_ZERO = -99.0  # log10(0) in ARPA files


@dataclass
class NGramModel:
    order: int
    probs: dict = field(default_factory=dict)      # ngram tuple -> log10 prob
    backoffs: dict = field(default_factory=dict)   # context tuple -> log10 weight
    smoothing: str = "kn"

    @property
    def vocab(self) -> set[str]:
        return {g[0] for g in self.probs if len(g) == 1}

    @property
    def predictable(self) -> list[str]:
        """Every token the model can predict (the vocabulary minus ``<s>``)."""
        return sorted(w for w in self.vocab if w != BOS)

    def map_token(self, token: str) -> str:
        return token if token == BOS or (token,) in self.probs else UNK

    def logprob(self, word: str, context: Sequence[str] = ()) -> float:
        """log10 P(word | context) with ARPA back-off; OOV words score as ``<unk>``."""
        word = self.map_token(word)
        context = tuple(self.map_token(t) for t in context)
        context = context[len(context) - (self.order - 1):] if self.order > 1 else ()
        total = 0.0
        while True:
            lp = self.probs.get(context + (word,))
            if lp is not None:
                return total + lp
            if not context:
                return NEG_INF
            total += self.backoffs.get(context, 0.0)
            context = context[1:]

    def sentence_logprobs(self, tokens: Sequence[str]) -> list[float]:
        """log10 probability of every token and of the final ``</s>``."""
        history = [BOS] * (self.order - 1)
        out = []
        for tok in list(tokens) + [EOS]:
            out.append(self.logprob(tok, history))
            history.append(tok)
        return out

    def sentence_logprob(self, tokens: Sequence[str]) -> float:
        return math.fsum(self.sentence_logprobs(tokens))

    def context_mass(self, context: Sequence[str]) -> float:
        """Sum of P(w | context) over the predictable vocabulary."""
        return math.fsum(10.0 ** self.logprob(w, context) for w in self.predictable)


def _events(sentences, order):
    """Yield ``(padded, position)`` for every predicted token."""
    for sent in sentences:
        padded = [BOS] * (order - 1) + list(sent) + [EOS]
        for i in range(order - 1, len(padded)):
            yield padded, i


def count_ngrams(sentences: Sequence[Sequence[str]], order: int) -> list[Counter]:
    """``counts[m]`` maps each m-gram ending in a predicted token to its count."""
    counts = [Counter() for _ in range(order + 1)]
    for padded, i in _events(sentences, order):
        for m in range(1, order + 1):
            counts[m][tuple(padded[i - m + 1:i + 1])] += 1
    return counts


def _prepare(sentences, open_vocab):
    sentences = [list(s) for s in sentences]
    if not sentences:
        raise EmptyCorpus("cannot train on an empty corpus")
    for s in sentences:
        for tok in s:
            if tok in (BOS, EOS):
                raise InputError(f"reserved token {tok!r} in training data")
    if open_vocab:
        freq = Counter(t for s in sentences for t in s)
        sentences = [[t if freq[t] > 1 else UNK for t in s] for s in sentences]
    return sentences


def _fill_context_entries(probs, backoffs):
    # every context carrying a back-off weight needs its own table entry;
    # the only unlisted ones end in <s>, which is never predicted
    for h in backoffs:
        if h and h not in probs:
            probs[h] = NEG_INF
    probs.setdefault((BOS,), NEG_INF)


def train_addk(sentences, order: int, k: float = 1.0, open_vocab: bool = False) -> NGramModel:
    """Add-k estimate for every observed context, stored densely.

    For an observed context ``h``: ``P(w | h) = (c(h w) + k) / (c(h) + k |V|)``
    with ``V`` the predictable vocabulary (training words, ``</s>``, ``<unk>``).
    Unobserved contexts back off to their longest observed suffix.
    """
    if order < 1:
        raise InputError("order must be >= 1")
    if k < 0:
        raise InputError("k must be non-negative")
    sentences = _prepare(sentences, open_vocab)
    counts = count_ngrams(sentences, order)
    vocab = sorted({g[0] for g in counts[1]} | {EOS, UNK})
    v = len(vocab)
    probs, backoffs = {}, {}
    for m in range(1, order + 1):
        ctx = Counter()
        for g, c in counts[m].items():
            ctx[g[:-1]] += c
        for h, ch in ctx.items():
            denom = ch + k * v
            for w in vocab:
                p = (counts[m].get(h + (w,), 0) + k) / denom
                probs[h + (w,)] = math.log10(p) if p > 0 else NEG_INF
            if h:
                backoffs[h] = 0.0
    _fill_context_entries(probs, backoffs)
    return NGramModel(order, probs, backoffs, smoothing=f"addk:{k!r}")


def kn_discounts(adjusted: Mapping, fallback: Sequence[float] | None = None,
                 label: str = "") -> tuple[float, float, float]:
    """Modified Kneser-Ney discounts D1, D2, D3+ from counts of counts."""
    coc = Counter(min(c, 5) for c in adjusted.values())
    n1, n2, n3, n4 = (coc[j] for j in (1, 2, 3, 4))
    d = None
    if 0 not in (n1, n2, n3, n4):
        y = n1 / (n1 + 2 * n2)
        d = (1 - 2 * y * n2 / n1, 2 - 3 * y * n3 / n2, 3 - 4 * y * n4 / n3)
        if not all(0 < dj < j for j, dj in enumerate(d, 1)):
            d = None
    if d is not None:
        return d
    if fallback is None:
        raise OrderTooLargeForData(
            f"Kneser-Ney discounts undefined{label} (counts of counts n1..n4 = {n1}, {n2}, {n3}, {n4}); "
            "use a lower order, more data, or a discount fallback"
        )
    return tuple(fallback)


def train_kn(sentences, order: int = 5, open_vocab: bool = False,
             discount_fallback: Sequence[float] | None = None) -> NGramModel:
    """Interpolated modified Kneser-Ney.

    The highest order uses raw counts; lower orders use continuation counts
    (number of distinct left neighbours), except n-grams that start with
    ``<s>``, which keep raw counts. Unigrams interpolate with the uniform
    distribution over the predictable vocabulary.
    """
    if order < 1:
        raise InputError("order must be >= 1")
    sentences = _prepare(sentences, open_vocab)
    counts = count_ngrams(sentences, order)

    adjusted = [None] * (order + 1)
    adjusted[order] = counts[order]
    for m in range(order - 1, 0, -1):
        left = Counter(g[1:] for g in counts[m + 1])
        adjusted[m] = Counter({g: (c if g[0] == BOS else left[g]) for g, c in counts[m].items()})

    vocab = sorted({g[0] for g in counts[1]} | {EOS, UNK})
    probs, backoffs = {}, {}
    for m in range(1, order + 1):
        d1, d2, d3 = kn_discounts(adjusted[m], discount_fallback, f" for order {m}")
        total = defaultdict(float)
        mass = defaultdict(float)
        for g, a in adjusted[m].items():
            h = g[:-1]
            total[h] += a
            mass[h] += d1 if a == 1 else d2 if a == 2 else d3
        gamma = {h: mass[h] / total[h] for h in total}
        model = NGramModel(m - 1, probs, backoffs) if m > 1 else None
        if m == 1:
            g0 = gamma[()]
            for w in vocab:
                a = adjusted[1].get((w,), 0)
                u = (a - (d1 if a == 1 else d2 if a == 2 else d3)) / total[()] if a else 0.0
                probs[(w,)] = math.log10(u + g0 / len(vocab))
        else:
            new = {}
            for g, a in adjusted[m].items():
                h, w = g[:-1], g[-1]
                u = (a - (d1 if a == 1 else d2 if a == 2 else d3)) / total[h]
                lower = 10.0 ** model.logprob(w, h[1:])
                new[g] = math.log10(u + gamma[h] * lower)
            probs.update(new)
        for h, gm in gamma.items():
            if h:
                backoffs[h] = math.log10(gm)
    _fill_context_entries(probs, backoffs)
    return NGramModel(order, probs, backoffs, smoothing="kn")


def train_lm(sentences, order: int = 5, smoothing: str = "kn", k: float = 1.0,
             open_vocab: bool = False, discount_fallback=None) -> NGramModel:
    if smoothing == "kn":
        return train_kn(sentences, order, open_vocab, discount_fallback)
    if smoothing == "addk":
        return train_addk(sentences, order, k, open_vocab)
    raise InputError(f"smoothing must be 'kn' or 'addk', not {smoothing!r}")


def perplexity(model: NGramModel, sentences: Iterable[Sequence[str]]) -> float:
    """``10 ** (-sum(log10 P) / N)`` over every token and every ``</s>``."""
    total = 0.0
    n = 0
    for sent in sentences:
        for lp in model.sentence_logprobs(sent):
            if lp == NEG_INF:
                raise ZeroProbability("an event has probability zero under the model")
            total += lp
            n += 1
    if n == 0:
        raise EmptyCorpus("no events to score")
    return 10.0 ** (-total / n)


def vocab_coverage(train: Iterable[Sequence[str]], test: Iterable[Sequence[str]]) -> float:
    """Percentage of test token occurrences whose surface occurs in ``train``."""
    known = {t for s in train for t in s}
    tokens = [t for s in test for t in s]
    if not known or not tokens:
        raise EmptyCorpus("coverage needs non-empty train and test corpora")
    return 100.0 * sum(t in known for t in tokens) / len(tokens)


# -- ARPA ----------------------------------------------------------------------

def _fmt(x: float) -> str:
    # repr() is the shortest string that reads back to the identical double
    return repr(ARPA_ZERO) if x == NEG_INF else repr(x)


def _parse(s: str) -> float:
    x = float(s)
    return NEG_INF if x <= ARPA_ZERO else x


def write_arpa(model: NGramModel) -> str:
    by_order = defaultdict(list)
    for g in model.probs:
        by_order[len(g)].append(g)
    lines = ["\\data\\"]
    for m in range(1, model.order + 1):
        lines.append(f"ngram {m}={len(by_order[m])}")
    for m in range(1, model.order + 1):
        lines.append("")
        lines.append(f"\\{m}-grams:")
        for g in sorted(by_order[m]):
            row = f"{_fmt(model.probs[g])}\t{' '.join(g)}"
            if g in model.backoffs:
                row += f"\t{_fmt(model.backoffs[g])}"
            lines.append(row)
    lines.append("")
    lines.append("\\end\\")
    return "\n".join(lines) + "\n"


def read_arpa(text: str) -> NGramModel:
    lines = iter(text.splitlines())
    for line in lines:
        if line.strip() == "\\data\\":
            break
    else:
        raise InputError("not an ARPA file: no \\data\\ section")
    declared = {}
    probs, backoffs = {}, {}
    m = None
    for line in lines:
        line = line.strip()
        if not line:
            continue
        if line.startswith("ngram "):
            k, v = line[6:].split("=")
            declared[int(k)] = int(v)
        elif line == "\\end\\":
            break
        elif line.startswith("\\") and line.endswith("-grams:"):
            m = int(line[1:line.index("-")])
        else:
            if m is None:
                raise InputError(f"unexpected line in ARPA header: {line!r}")
            parts = line.split("\t") if "\t" in line else line.split()
            if "\t" in line:
                lp, words, *rest = parts
                g = tuple(words.split())
            else:
                lp, g, rest = parts[0], tuple(parts[1:m + 1]), parts[m + 1:]
            if len(g) != m:
                raise InputError(f"expected a {m}-gram: {line!r}")
            probs[g] = _parse(lp)
            if rest:
                backoffs[g] = _parse(rest[0])
    order = max(declared) if declared else 0
    for k, v in declared.items():
        found = sum(1 for g in probs if len(g) == k)
        if found != v:
            raise InputError(f"ARPA header declares {v} {k}-grams, found {found}")
    return NGramModel(order, probs, backoffs, smoothing="arpa")


# -- domain analysis ------------------------------------------------------------

@dataclass
class DomainReport:
    cells: dict = field(default_factory=dict)  # (train name, test name) -> metrics

    def to_tsv(self) -> str:
        rows = ["train\ttest\tperplexity\tvocab_coverage_pct"]
        for (tr, te), c in self.cells.items():
            rows.append(f"{tr}\t{te}\t{c['perplexity']:.4f}\t{c['vocab_coverage_pct']:.4f}")
        return "\n".join(rows) + "\n"


def domain_report(train_sets: Mapping[str, Sequence], test_domains: Mapping[str, Sequence],
                  order: int = 5, smoothing: str = "kn", **lm_kwargs) -> DomainReport:
    report = DomainReport()
    for tr_name, tr in train_sets.items():
        model = train_lm(tr, order, smoothing, **lm_kwargs)
        for te_name, te in test_domains.items():
            report.cells[(tr_name, te_name)] = {
                "perplexity": perplexity(model, te),
                "vocab_coverage_pct": vocab_coverage(tr, te),
            }
    return report


def read_sentences(path) -> list[list[str]]:
    """One whitespace-tokenized sentence per non-empty line."""
    with open(path, encoding="utf-8") as f:
        return [line.split() for line in f if line.strip()]
