"""Shared fixtures: deterministic synthetic corpora with Zipfian word
frequencies and natural-ish letter statistics."""

from __future__ import annotations

import numpy as np
import pytest

from otvocab.corpus import RawCorpus, pre_tokenize

# Rough English letter frequencies, enough to give BPE realistic pair
# statistics without shipping a real corpus.
_LETTERS = np.array(list("abcdefghijklmnopqrstuvwxyz"))
_LETTER_W = np.array([
    8.2, 1.5, 2.8, 4.3, 12.7, 2.2, 2.0, 6.1, 7.0, 0.15, 0.77, 4.0, 2.4,
    6.7, 7.5, 1.9, 0.095, 6.0, 6.3, 9.1, 2.8, 0.98, 2.4, 0.15, 2.0, 0.074,
])
_LETTER_P = _LETTER_W / _LETTER_W.sum()


def make_lexicon(n_types: int, rng: np.random.Generator) -> list[str]:
    """Distinct words, lengths 2..12, letters drawn from _LETTER_P."""
    seen: dict[str, None] = {}
    while len(seen) < n_types:
        need = n_types - len(seen)
        lengths = rng.integers(2, 13, size=need)
        for ln in lengths:
            word = "".join(rng.choice(_LETTERS, size=ln, p=_LETTER_P))
            if word not in seen:
                seen[word] = None
    return list(seen)


def zipf_lines(n_tokens: int, n_types: int, seed: int = 0,
               words_per_line: int = 12, exponent: float = 1.05) -> list[str]:
    """Lines of text whose word frequencies follow a Zipf law."""
    rng = np.random.default_rng(seed)
    lexicon = np.array(make_lexicon(n_types, rng))
    ranks = np.arange(1, n_types + 1, dtype=np.float64)
    probs = ranks ** -exponent
    probs /= probs.sum()
    idx = rng.choice(n_types, size=n_tokens, p=probs)
    words = lexicon[idx]
    lines = []
    for start in range(0, n_tokens, words_per_line):
        lines.append(" ".join(words[start : start + words_per_line]))
    return lines


def zipf_words(n_tokens: int, n_types: int, seed: int = 0):
    lines = zipf_lines(n_tokens, n_types, seed=seed)
    corpus = RawCorpus(lines=tuple(lines), byte_count=0, source_id="zipf")
    return pre_tokenize(corpus)


@pytest.fixture(scope="session")
def small_zipf_words():
    """~10K-token corpus, used by the derived-oracle tests."""
    return zipf_words(10_000, 800, seed=7)


@pytest.fixture(scope="session")
def medium_zipf_lines():
    """~50K-token corpus as raw lines."""
    return zipf_lines(50_000, 3000, seed=11)


@pytest.fixture(scope="session")
def medium_zipf_words(medium_zipf_lines):
    corpus = RawCorpus(lines=tuple(medium_zipf_lines), byte_count=0, source_id="zipf")
    return pre_tokenize(corpus)
