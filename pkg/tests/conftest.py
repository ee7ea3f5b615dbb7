import sys
import random

import pytest

from lrcorpus.corpus import ENTITY_CLASSES, Corpus, TaggedSentence, tags_from


def random_sentence(rng: random.Random, max_len=20, vocab=("a", "b", "c", "d", "Kano", "Lagos", "2018")):
    n = rng.randint(1, max_len)
    tokens = [rng.choice(vocab) for _ in range(n)]
    spans = []
    i = 0
    while i < n:
        if rng.random() < 0.3:
            length = rng.randint(1, min(4, n - i))
            spans.append((i, i + length, rng.choice(ENTITY_CLASSES)))
            i += length
        else:
            i += 1
    return TaggedSentence(tokens, tags_from(spans, n))


def random_corpus(rng: random.Random, max_sentences=10, max_len=20) -> Corpus:
    return Corpus([random_sentence(rng, max_len) for _ in range(rng.randint(1, max_sentences))])


def retag(corpus: Corpus, rng: random.Random, p=0.5) -> Corpus:
    """Same tokens, independently perturbed spans."""
    out = []
    for s in corpus:
        out.append(random_sentence_on(s.tokens, rng) if rng.random() < p else s)
    return Corpus(out)


def random_sentence_on(tokens, rng):
    n = len(tokens)
    spans = []
    i = 0
    while i < n:
        if rng.random() < 0.3:
            length = rng.randint(1, min(4, n - i))
            spans.append((i, i + length, rng.choice(ENTITY_CLASSES)))
            i += length
        else:
            i += 1
    return TaggedSentence(list(tokens), tags_from(spans, n))


@pytest.fixture
def rng():
    return random.Random(1234)


def zipf_corpus(seed=0, n_sentences=2000, n_types=5000, max_len=15, prefix="w"):
    """Sentences drawn from a Zipf(1) unigram distribution over ``n_types`` words."""
    rng = random.Random(seed)
    words = [f"{prefix}{i}" for i in range(n_types)]
    weights = [1.0 / (i + 1) for i in range(n_types)]
    return [rng.choices(words, weights, k=rng.randint(3, max_len)) for _ in range(n_sentences)]


def markov_corpus(seed, n_sentences, n_types=300, fanout=6, prefix="w", chain_seed=None):
    """Sentences from a sparse first-order Markov chain: each word has ``fanout``
    Zipf-weighted successors, so n-gram statistics genuinely help."""
    crng = random.Random(seed if chain_seed is None else chain_seed)
    words = [f"{prefix}{i}" for i in range(n_types)]
    succ = {w: crng.sample(words, fanout) for w in words}
    starts = crng.sample(words, 20)
    weights = [1.0 / (i + 1) for i in range(fanout)]
    rng = random.Random(seed)
    out = []
    for _ in range(n_sentences):
        w = rng.choice(starts)
        s = [w]
        while len(s) < 20 and rng.random() > 0.1:
            w = rng.choices(succ[w], weights)[0]
            s.append(w)
        out.append(s)
    return out


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.summary_line(n))
