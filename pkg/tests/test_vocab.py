import random
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lrcorpus.errors import InputError, KExceedsVocab
from lrcorpus.vocab import (
    SPECIALS,
    UNK,
    Group,
    GroupSpec,
    SubwordVocab,
    count_subwords,
    coverage_stats,
    coverage_table,
    parse_group,
    reduce_vocab,
    subword_tokenize,
)

M = "▁"


def preference(word, pos, vocab):
    """Option order at a position: marked longest first (word start), bare longest first, <unk>."""
    opts = []
    if pos == 0:
        opts += [(M + word[:n], n) for n in range(len(word), 0, -1) if M + word[:n] in vocab]
    opts += [(word[pos:pos + n], n) for n in range(len(word) - pos, 0, -1)
             if word[pos:pos + n] in vocab and word[pos:pos + n] not in SPECIALS]
    return opts + [(UNK, 1)]


def all_segmentations(word, vocab, pos=0):
    if pos == len(word):
        yield []
        return
    for rank, (piece, n) in enumerate(preference(word, pos, vocab)):
        for rest in all_segmentations(word, vocab, pos + n):
            yield [(rank, piece)] + rest


def oracle_segment(word, vocab):
    best = min(all_segmentations(word, vocab),
               key=lambda seg: (sum(p == UNK for _, p in seg), [r for r, _ in seg]))
    return [p for _, p in best]


def test_word_in_vocab_is_one_token():
    v = SubwordVocab([M + "kano"])
    assert subword_tokenize("kano", v) == [M + "kano"]


def test_empty_text():
    assert subword_tokenize("", SubwordVocab(["a"])) == []


def test_longest_first_example():
    v = SubwordVocab([M + "ab", "c", M + "a", "bc"])
    assert subword_tokenize("abc", v) == [M + "ab", "c"]
    assert oracle_segment("abc", set(v)) == [M + "ab", "c"]


def test_avoidable_unk_is_avoided():
    v = SubwordVocab([M + "ab", M + "a", "bc"])
    assert subword_tokenize("abc", v) == [M + "a", "bc"]


@settings(max_examples=300, deadline=None)
@given(st.sets(st.text("abc", min_size=1, max_size=3).flatmap(
    lambda t: st.sampled_from([t, M + t])), max_size=10),
       st.text("abcd", min_size=1, max_size=7))
def test_segmentation_matches_exhaustive_oracle(tokens, word):
    v = SubwordVocab(sorted(tokens))
    assert subword_tokenize(word, v) == oracle_segment(word, set(v))


def test_unk_per_unmatched_char():
    v = SubwordVocab([M + "a"])
    assert subword_tokenize("axy", v) == [M + "a", UNK, UNK]


def test_specials_prepended():
    v = SubwordVocab(["x", "<unk>"])
    assert v.tokens[:3] == ("<s>", "<pad>", "</s>")
    assert set(SPECIALS) <= set(v.tokens)


def test_count_empty_corpus():
    v = SubwordVocab([M + "a", "b"])
    counts = count_subwords([], v)
    assert set(counts) == set(v.tokens) and sum(counts.values()) == 0


def test_count_repeated_word():
    v = SubwordVocab([M + "ile"])
    assert count_subwords(["ile ile ile", "ile ile"], v)[M + "ile"] == 5


def test_count_brute_force():
    v = SubwordVocab([M + "ab", "c", M + "a", "bc", "d"])
    lines = ["abc abd", "a c abcd"]
    recount = Counter()
    for line in lines:
        for w in line.split():
            recount.update(oracle_segment(w, set(v)))
    counts = count_subwords(lines, v)
    assert all(counts[t] == recount[t] for t in set(recount) | set(v.tokens))


def test_reduce_saturated_group():
    v = SubwordVocab([M + "a", M + "b", "c", M + "z"])
    lines = ["a bc", "b"]
    red = reduce_vocab(v, GroupSpec([Group("g", [lines], len(v.regular()))]))
    assert set(red.tokens) <= set(v.tokens)
    seen = {t for t, c in count_subwords(lines, v).items() if c and t not in SPECIALS}
    assert seen <= set(red.tokens)
    assert M + "z" not in red


def test_group_union_arithmetic_disjoint():
    v = SubwordVocab([M + w for w in "abcdefghij"])
    g1 = Group("one", [["a a a b b c"]], 3)
    g2 = Group("two", [["d d e e f g h"]], 4)
    red = reduce_vocab(v, GroupSpec([g1, g2]))
    assert len(red) == 7 + len(SPECIALS)


def test_group_union_overlapping_and_top_m():
    v = SubwordVocab([M + w for w in "abcdefghij"])
    g1 = Group("one", [["a b c"]], 3)
    g2 = Group("two", [["b c d"]], 3)
    red = reduce_vocab(v, GroupSpec([g1, g2], extra_top_m=len(SPECIALS) + 2))
    # {a,b,c} | {b,c,d} | first two regular tokens {a,b}
    assert [t for t in red.tokens if t not in SPECIALS] == [M + x for x in "abcd"]


def test_reduced_preserves_rank_order():
    v = SubwordVocab([M + w for w in "jihgfedcba"])
    red = reduce_vocab(v, GroupSpec([Group("g", [["a c e"]], 3)]))
    assert [t for t in red.tokens if t not in SPECIALS] == [M + "e", M + "c", M + "a"]


def test_k_exceeds_vocab():
    v = SubwordVocab([M + "a"])
    with pytest.raises(KExceedsVocab):
        reduce_vocab(v, GroupSpec([Group("g", [["a"]], 5)]))
    with pytest.raises(KExceedsVocab):
        reduce_vocab(v, GroupSpec([], extra_top_m=100))


def test_empty_group_with_positive_k():
    v = SubwordVocab([M + "a"])
    with pytest.raises(InputError):
        reduce_vocab(v, GroupSpec([Group("g", [[]], 1)]))


def random_vocab_chain(rng):
    pieces = {"".join(rng.choice("abcxyz") for _ in range(rng.randint(1, 3))) for _ in range(60)}
    tokens = sorted(pieces | {M + p for p in rng.sample(sorted(pieces), 20)})
    rng.shuffle(tokens)
    v1 = SubwordVocab(tokens)
    v2 = SubwordVocab(t for t in v1.tokens if rng.random() < 0.6)
    v3 = SubwordVocab(t for t in v2.tokens if rng.random() < 0.5)
    return v1, v2, v3


def test_unk_monotone_on_vocab_chain():
    rng = random.Random(0)
    for _ in range(30):
        v1, v2, v3 = random_vocab_chain(rng)
        assert set(v3.tokens) <= set(v2.tokens) <= set(v1.tokens)
        lines = [" ".join("".join(rng.choice("abcxyzq") for _ in range(rng.randint(1, 8)))
                          for _ in range(10)) for _ in range(20)]
        u = [coverage_stats(v, lines)["unk_count"] for v in (v1, v2, v3)]
        assert u[0] <= u[1] <= u[2]


def test_reduce_is_subset_on_random_fixtures():
    rng = random.Random(1)
    for _ in range(20):
        v1, _, _ = random_vocab_chain(rng)
        lines = [" ".join("".join(rng.choice("abcxyz") for _ in range(5)) for _ in range(5))]
        k = rng.randint(1, len(v1.regular()))
        red = reduce_vocab(v1, GroupSpec([Group("g", [lines], k)], rng.randint(0, 10)))
        assert set(red.tokens) <= set(v1.tokens)


def test_coverage_single_char_vocab():
    v = SubwordVocab(list("abc") + [M + x for x in "abc"])
    assert coverage_stats(v, ["abc cab", "ba"])["unk_count"] == 0


def test_missing_script_costs_unks():
    v = SubwordVocab([M + "ab", "c", "ሰ", M + "ሰ"])
    reduced = SubwordVocab([M + "ab", "c"])
    lines = ["ab ሰላም ሰ", "ሰሰ"]
    pieces = [subword_tokenize(w, reduced) for line in lines for w in line.split()]
    for w, p in zip([w for line in lines for w in line.split()], pieces):
        if "ሰ" in w:
            assert UNK in p
    assert coverage_table({"full": v, "red": reduced}, {"t": lines})["red"]["t"] > 0


def test_parse_group():
    assert parse_group("amh:52000:a.txt,b.txt") == ("amh", 52000, ["a.txt", "b.txt"])
    with pytest.raises(InputError):
        parse_group("nope")


def test_load_sentencepiece_vocab(tmp_path):
    p = tmp_path / "v.vocab"
    p.write_text("<unk>\t0\n▁a\t-1.5\nb\t-2\n", encoding="utf-8")
    v = SubwordVocab.load(p)
    assert v.regular() == [M + "a", "b"]
