import io
from collections import Counter

import pytest

from otvocab.bpe import (learn_bpe, read_candidates_tsv, top_candidates,
                         write_candidates_tsv, write_merges)
from otvocab.corpus import RawCorpus, pre_tokenize
from otvocab.errors import InvalidSizeError
from tests.conftest import zipf_words


def words_of(*pairs):
    from otvocab.corpus import WordSequence

    return WordSequence(words=tuple(pairs))


def reference_bpe(words, num_merges):
    """Naive trainer: recount every pair from scratch each round."""
    segs = {w: list(w) for w, _ in words.words}
    counts = dict(words.words)
    rules = []
    for _ in range(num_merges):
        stats = Counter()
        for w, syms in segs.items():
            for pair in zip(syms, syms[1:]):
                stats[pair] += counts[w]
        if not stats:
            break
        best = min(stats, key=lambda p: (-stats[p], p))
        if stats[best] < 2:
            break
        rules.append(best)
        merged = best[0] + best[1]
        for w, syms in segs.items():
            out, i = [], 0
            while i < len(syms):
                if i < len(syms) - 1 and (syms[i], syms[i + 1]) == best:
                    out.append(merged)
                    i += 2
                else:
                    out.append(syms[i])
                    i += 1
            segs[w] = out
    state = Counter()
    for w, syms in segs.items():
        for s in syms:
            state[s] += counts[w]
    return rules, state


def test_first_merge_prefers_most_frequent_pair():
    # In "aaab" the pair (a,a) occurs twice, (a,b) once.
    cl = learn_bpe(words_of(("aaab", 1)), num_merges=1)
    assert cl.merge_rules[0].left == "a"
    assert cl.merge_rules[0].right == "a"
    assert cl.merge_rules[0].merged == "aa"


def test_early_stop_when_no_pair_repeats():
    cl = learn_bpe(words_of(("ab", 3)), num_merges=5)
    assert len(cl.merge_rules) == 1
    assert cl.merge_rules[0].merged == "ab"


def test_tie_break_is_lexicographic():
    # (a,b) and (c,d) both occur twice; (a,b) wins lexicographically.
    cl = learn_bpe(words_of(("ab", 2), ("cd", 2)), num_merges=1)
    assert (cl.merge_rules[0].left, cl.merge_rules[0].right) == ("a", "b")


def test_counts_come_from_final_segmentation_state():
    # After merging (a,a), "aaab" segments as [aa, a, b].
    cl = learn_bpe(words_of(("aaab", 1)), num_merges=1)
    assert dict(cl.tokens) == {"aa": 1, "a": 1, "b": 1}


def test_all_corpus_chars_listed_even_when_merged_away():
    cl = learn_bpe(words_of(("ab", 5)), num_merges=1)
    counts = dict(cl.tokens)
    assert counts == {"ab": 5, "a": 0, "b": 0}


def test_matches_reference_trainer_on_zipf_corpus():
    words = zipf_words(4000, 300, seed=3)
    cl = learn_bpe(words, num_merges=500)
    ref_rules, ref_state = reference_bpe(words, 500)
    assert [(r.left, r.right) for r in cl.merge_rules] == ref_rules
    got = {t: c for t, c in cl.tokens if c > 0}
    assert got == {t: c for t, c in ref_state.items() if c > 0}


def test_deterministic_tsv_output():
    words = zipf_words(2000, 200, seed=5)
    buf1, buf2 = io.StringIO(), io.StringIO()
    write_candidates_tsv(learn_bpe(words, 100), buf1)
    write_candidates_tsv(learn_bpe(words, 100), buf2)
    assert buf1.getvalue() == buf2.getvalue()


def test_candidates_tsv_roundtrip():
    cl = learn_bpe(words_of(("abab", 2), ("ab", 1)), num_merges=3)
    cbuf, mbuf = io.StringIO(), io.StringIO()
    write_candidates_tsv(cl, cbuf)
    write_merges(cl, mbuf)
    back = read_candidates_tsv(io.StringIO(cbuf.getvalue()),
                               io.StringIO(mbuf.getvalue()))
    assert back.tokens == cl.tokens
    assert [(r.left, r.right, r.merged) for r in back.merge_rules] == \
        [(r.left, r.right, r.merged) for r in cl.merge_rules]


def test_top_candidates_prefix():
    cl = learn_bpe(words_of(("ab", 2), ("a", 3), ("b", 1)), num_merges=1)
    top = top_candidates(cl, 2)
    assert len(top.tokens) >= 2
    assert top.tokens[:2] == cl.tokens[:2]


def test_top_candidates_truncation_flag():
    cl = learn_bpe(words_of(("ab", 2)), num_merges=1)
    top = top_candidates(cl, 10)
    assert top.truncated
    assert top.tokens == cl.tokens


def test_top_candidates_zero_is_error():
    cl = learn_bpe(words_of(("ab", 2)), num_merges=1)
    with pytest.raises(InvalidSizeError):
        top_candidates(cl, 0)


def test_top_candidates_forces_rare_chars():
    # "z" occurs once; a tiny budget must still include it.
    words = words_of(("aaaa", 50), ("aaab", 30), ("z", 1))
    cl = learn_bpe(words, num_merges=3)
    top = top_candidates(cl, 2)
    toks = {t for t, _ in top.tokens}
    assert "z" in toks
    assert "z" in top.forced_chars


def test_merge_rules_reproduce_state_counts():
    words = zipf_words(3000, 250, seed=9)
    cl = learn_bpe(words, num_merges=200)
    counts = Counter()
    for w, c in words.words:
        syms = list(w)
        for rule in cl.merge_rules:
            out, i = [], 0
            while i < len(syms):
                if i < len(syms) - 1 and syms[i] == rule.left and syms[i + 1] == rule.right:
                    out.append(rule.merged)
                    i += 2
                else:
                    out.append(syms[i])
                    i += 1
            syms = out
        for s in syms:
            counts[s] += c
    assert {t: c for t, c in cl.tokens if c > 0} == dict(counts)
