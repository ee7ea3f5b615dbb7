import math
import random
from collections import Counter

import pytest

from lrcorpus.errors import EmptyCorpus, InputError, OrderTooLargeForData, ZeroProbability
from lrcorpus.ngram import (
    BOS,
    EOS,
    UNK,
    NGramModel,
    domain_report,
    perplexity,
    read_arpa,
    train_addk,
    train_kn,
    train_lm,
    vocab_coverage,
    write_arpa,
)

from conftest import markov_corpus, zipf_corpus


def addk_oracle(sentences, order, k):
    """P(w | h) by direct count-and-normalize over padded sentences."""
    vocab = sorted({t for s in sentences for t in s} | {EOS, UNK})
    events = []
    for s in sentences:
        padded = [BOS] * (order - 1) + list(s) + [EOS]
        for i in range(order - 1, len(padded)):
            events.append((tuple(padded[i - order + 1:i]), padded[i]))

    def prob(w, h):
        h = tuple(h)[-(order - 1):] if order > 1 else ()
        while True:
            n = len(h)
            ctx = [e for e in events if e[0][len(e[0]) - n:] == h] if n else events
            if ctx:
                hits = sum(1 for e in ctx if e[1] == w)
                return (hits + k) / (len(ctx) + k * len(vocab))
            h = h[1:]

    return vocab, prob


def small_corpus(rng, max_tokens=50):
    sents, total = [], 0
    while True:
        s = [rng.choice("abcde") for _ in range(rng.randint(1, 6))]
        if total + len(s) > max_tokens:
            return sents or [s[:max_tokens]]
        sents.append(s)
        total += len(s)


def test_hand_counts_order1_add0():
    m = train_addk([["a", "a", "a"]], order=1, k=0)
    assert 10 ** m.logprob("a") == pytest.approx(0.75, abs=1e-15)
    assert 10 ** m.logprob(EOS) == pytest.approx(0.25, abs=1e-15)


def test_perplexity_hand_product():
    m = train_addk([["a", "a", "a"]], order=1, k=0)
    expected = (0.75 ** 3 * 0.25) ** (-1 / 4)
    assert perplexity(m, [["a", "a", "a"]]) == pytest.approx(expected, rel=1e-12)


def test_uniform_model_perplexity_is_vocab_size():
    words = ["x", "y", "z", EOS]
    lp = math.log10(1 / len(words))
    m = NGramModel(1, {(w,): lp for w in words} | {(BOS,): float("-inf")}, {})
    assert perplexity(m, [["x", "z", "z", "y"], ["y"]]) == pytest.approx(4.0, rel=1e-12)


@pytest.mark.parametrize("order", [1, 2, 3])
def test_addk_matches_enumeration_small(order):
    rng = random.Random(order)
    for _ in range(20):
        sents = small_corpus(rng)
        k = rng.choice([0.5, 1.0, 2.0])
        m = train_addk(sents, order, k)
        vocab, prob = addk_oracle(sents, order, k)
        for h in [(), ("a",), ("b", "c"), ("e", "e"), (BOS,), (BOS, "a"), ("zz", "a")]:
            for w in vocab:
                assert abs(10 ** m.logprob(w, h) - prob(w, h)) <= 1e-12


def test_addk_matches_enumeration_100_sentences():
    rng = random.Random(7)
    sents = [[rng.choice("abcdefgh") for _ in range(rng.randint(1, 8))] for _ in range(100)]
    m = train_addk(sents, 3, 1.0)
    vocab, prob = addk_oracle(sents, 3, 1.0)
    for _ in range(200):
        h = tuple(rng.choice(list("abcdefgh") + [BOS]) for _ in range(2))
        w = rng.choice(vocab)
        assert abs(10 ** m.logprob(w, h) - prob(w, h)) <= 1e-12


def test_addk_contexts_normalize():
    rng = random.Random(3)
    sents = small_corpus(rng, 50)
    m = train_addk(sents, 3, 0.3)
    for h in [(), (BOS, BOS), ("a", "b"), ("q", "r")]:
        assert abs(m.context_mass(h) - 1) <= 1e-12


def kn_oracle(sentences, order, discounts=None):
    """Interpolated modified Kneser-Ney evaluated recursively from counts."""
    padded_events = []
    for s in sentences:
        p = [BOS] * (order - 1) + list(s) + [EOS]
        padded_events.extend(p[i - order + 1:i + 1] for i in range(order - 1, len(p)))
    raw = {m: Counter(tuple(e[order - m:]) for e in padded_events) for m in range(1, order + 1)}
    adj = {order: raw[order]}
    for m in range(1, order):
        left = {}
        for g in raw[m + 1]:
            left.setdefault(g[1:], set()).add(g[0])
        adj[m] = {g: (c if g[0] == BOS else len(left[g])) for g, c in raw[m].items()}
    vocab = sorted({t for s in sentences for t in s} | {EOS, UNK})

    def disc(m):
        if discounts:
            return discounts
        n = Counter(min(c, 5) for c in adj[m].values())
        y = n[1] / (n[1] + 2 * n[2])
        return (1 - 2 * y * n[2] / n[1], 2 - 3 * y * n[3] / n[2], 3 - 4 * y * n[4] / n[3])

    D = {m: disc(m) for m in adj}

    def d_of(m, c):
        return 0 if c == 0 else D[m][min(c, 3) - 1]

    def p(w, h):
        m = len(h) + 1
        rows = {g: c for g, c in adj[m].items() if g[:-1] == h}
        lower = 1 / len(vocab) if m == 1 else p(w, h[1:])
        if not rows:
            return lower
        total = sum(rows.values())
        c = rows.get(h + (w,), 0)
        gamma = sum(d_of(m, x) for x in rows.values()) / total
        return max(c - d_of(m, c), 0) / total + gamma * lower

    def prob(w, h):
        h = tuple(h)[-(order - 1):] if order > 1 else ()
        return p(w if w in vocab else UNK, tuple(t if t in vocab or t == BOS else UNK for t in h))

    return vocab, prob


def test_kn_matches_recursive_oracle():
    sents = zipf_corpus(seed=1, n_sentences=300, n_types=300, max_len=8)
    model = train_kn(sents, order=3)
    vocab, prob = kn_oracle(sents, 3)
    rng = random.Random(0)
    contexts = [(BOS, BOS)] + [tuple(rng.choice(s) for _ in range(2)) for s in sents[:40]]
    contexts += [(BOS, sents[0][0]), ("unseen", "w1")]
    for h in contexts:
        for w in rng.sample(vocab, 40) + [EOS, UNK]:
            assert 10 ** model.logprob(w, h) == pytest.approx(prob(w, h), rel=1e-9)


def test_kn_with_fallback_matches_oracle():
    sents = [["a", "b", "c"], ["a", "c"], ["b", "b", "a", "c"]]
    fb = (0.5, 1.0, 1.5)
    model = train_kn(sents, order=2, discount_fallback=fb)
    vocab, prob = kn_oracle(sents, 2, fb)
    for h in [(BOS,), ("a",), ("b",), ("c",), ("zzz",)]:
        for w in vocab:
            assert 10 ** model.logprob(w, h) == pytest.approx(prob(w, h), rel=1e-12)
        assert abs(model.context_mass(h) - 1) <= 1e-12


def test_kn_normalizes_on_sampled_contexts():
    sents = zipf_corpus(seed=2, n_sentences=1000, n_types=2000)
    model = train_kn(sents, order=4)
    rng = random.Random(5)
    for _ in range(30):
        s = rng.choice(sents)
        i = rng.randrange(len(s))
        h = ([BOS] * 3 + s)[i:i + 3]
        assert abs(model.context_mass(h) - 1) <= 1e-6
    assert abs(model.context_mass(("never", "seen", "ctx")) - 1) <= 1e-6


def test_kn_tiny_data_needs_fallback():
    with pytest.raises(OrderTooLargeForData):
        train_kn([["a", "b"], ["a", "b"]], order=3)


def test_arpa_roundtrip():
    sents = zipf_corpus(seed=3, n_sentences=500, n_types=800)
    for model in (train_kn(sents, 3), train_addk(sents[:50], 2, 0.5)):
        text = write_arpa(model)
        back = read_arpa(text)
        assert write_arpa(back) == text
        for s in sents[:50]:
            assert abs(back.sentence_logprob(s) - model.sentence_logprob(s)) < 1e-6


def test_arpa_zero_probabilities():
    m = train_addk([["a", "a"]], 1, k=0)
    back = read_arpa(write_arpa(m))
    assert back.logprob(UNK) == float("-inf")


def test_arpa_bad_counts():
    text = write_arpa(train_addk([["a"]], 1))
    with pytest.raises(InputError):
        read_arpa(text.replace("ngram 1=", "ngram 1=9"))


def test_zero_probability_perplexity():
    m = train_addk([["a"]], 1, k=0)
    with pytest.raises(ZeroProbability):
        perplexity(m, [["b"]])


def test_empty_inputs():
    with pytest.raises(EmptyCorpus):
        train_lm([], 2)
    m = train_addk([["a"]], 1)
    with pytest.raises(EmptyCorpus):
        perplexity(m, [])


def test_reserved_tokens_rejected():
    with pytest.raises(InputError):
        train_addk([["a", EOS]], 2)


def test_open_vocab_maps_singletons():
    m = train_addk([["a", "a", "b"]], 1, open_vocab=True)
    assert ("b",) not in m.probs
    assert m.logprob("b") == m.logprob(UNK)


def test_coverage():
    assert vocab_coverage([["a", "b"]], [["a", "c", "a", "d"]]) == 50.0
    assert vocab_coverage([["a", "b"]], [["b", "a"]]) == 100.0
    assert vocab_coverage([["a"]], [["z"]]) == 0.0
    small, big = [["a", "b"]], [["a", "b"], ["c"]]
    test = [["a", "c", "d"]]
    assert vocab_coverage(big, test) >= vocab_coverage(small, test)


def two_domains(seed=0):
    # same word types, different transition structure
    news = markov_corpus(seed, 1500, chain_seed=100)
    bible = markov_corpus(seed + 1, 1500, chain_seed=200)
    return news, bible


def test_domain_fixture_in_domain_lower():
    news, bible = two_domains()
    rep = domain_report({"news": news[:1200], "bible": bible[:1200]},
                        {"news": news[1200:], "bible": bible[1200:]}, order=3)
    c = rep.cells
    assert c["news", "news"]["perplexity"] < c["news", "bible"]["perplexity"]
    assert c["bible", "bible"]["perplexity"] < c["bible", "news"]["perplexity"]
    assert rep.to_tsv().count("\n") == 5


def test_more_in_domain_data_never_hurts():
    for seed in range(3):
        news = markov_corpus(seed, 3000)
        test = news[2500:]
        ppl = [perplexity(train_kn(news[:n], 3), test) for n in (300, 600, 1200, 2500)]
        assert all(a >= b for a, b in zip(ppl, ppl[1:])), ppl


def test_single_cell_report():
    news, _ = two_domains()
    rep = domain_report({"n": news[:500]}, {"n": news[500:600]}, order=2)
    assert list(rep.cells) == [("n", "n")]
