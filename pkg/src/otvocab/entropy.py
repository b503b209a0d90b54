"""Length-normalized corpus entropy and marginal-utility scoring.

The entropy of a vocabulary is the Shannon entropy of the token distribution
obtained by greedily segmenting the corpus with that vocabulary, divided by
the average token length over the whole vocabulary.  The marginal utility of
growing a vocabulary is the negative entropy difference per added token.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .corpus import WordSequence, count_tokens
from .errors import InvalidSizePairError, InvalidVocabularyError
from .vocab import Vocabulary


@dataclass(frozen=True)
class EntropyReport:
    entropy: float  # nats per character
    avg_token_len: float
    token_count: int
    distribution_size: int  # tokens with nonzero corpus frequency


@dataclass(frozen=True)
class MuvScore:
    value: float  # nats per character per token of size increase
    size_gap: int


def corpus_entropy(words: WordSequence, vocab: Vocabulary,
                   merge_order: str = "leftmost") -> EntropyReport:
    """Segment the corpus with ``vocab`` and score the token distribution.

    The average token length runs over every vocabulary member, including
    tokens the segmentation never emits; zero-frequency tokens contribute
    nothing to the entropy sum (0 log 0 = 0).  OOV fallback characters are
    counted under the fallback tokens.
    """
    if not vocab.tokens:
        raise InvalidVocabularyError("cannot score an empty vocabulary")
    table = count_tokens(words, vocab, merge_order=merge_order)
    total = table.total
    h_raw = 0.0
    for count in table.entries.values():
        p = count / total
        h_raw -= p * math.log(p)
    avg_len = sum(len(t) for t in vocab.tokens) / len(vocab.tokens)
    return EntropyReport(
        entropy=h_raw / avg_len,
        avg_token_len=avg_len,
        token_count=len(vocab.tokens),
        distribution_size=len(table.entries),
    )


def muv(smaller_entropy: float, smaller_size: int,
        larger_entropy: float, larger_size: int) -> MuvScore:
    """Negative entropy difference per token of vocabulary growth."""
    gap = larger_size - smaller_size
    if gap <= 0:
        raise InvalidSizePairError(
            f"size pair must be increasing, got {smaller_size} -> {larger_size}")
    return MuvScore(value=-(larger_entropy - smaller_entropy) / gap, size_gap=gap)
