"""Greedy merge segmentation: apply a vocabulary to text, losslessly.

A word is split into characters and adjacent pairs are repeatedly merged
whenever the concatenation is a vocabulary member, until no merge applies.
Characters absent from the vocabulary survive as flagged fallback tokens.
"""

from __future__ import annotations

from dataclasses import dataclass

from .vocab import Vocabulary


@dataclass(frozen=True)
class TokenSequence:
    """Per-word token lists with parallel OOV flags."""

    words: tuple[tuple[str, ...], ...]
    oov_flags: tuple[tuple[bool, ...], ...]


def encode_word(word: str, vocab: Vocabulary,
                merge_order: str = "leftmost") -> tuple[tuple[str, ...], tuple[bool, ...]]:
    """Segment a single word.

    ``merge_order`` selects which mergeable pair wins when several are
    available: ``leftmost`` (scan left to right, restart after each merge) or
    ``frequency`` (highest candidate frequency first, leftmost on ties; falls
    back to leftmost when the vocabulary carries no frequencies).
    """
    syms = list(word)
    if merge_order == "frequency" and vocab.frequencies:
        freqs = vocab.frequencies
        while len(syms) > 1:
            best = None  # (-(freq), position)
            for i in range(len(syms) - 1):
                merged = syms[i] + syms[i + 1]
                if merged in vocab:
                    key = (-freqs.get(merged, 0), i)
                    if best is None or key < best[0]:
                        best = (key, i)
            if best is None:
                break
            i = best[1]
            syms[i : i + 2] = [syms[i] + syms[i + 1]]
    else:
        merged_any = True
        while merged_any and len(syms) > 1:
            merged_any = False
            for i in range(len(syms) - 1):
                merged = syms[i] + syms[i + 1]
                if merged in vocab:
                    syms[i : i + 2] = [merged]
                    merged_any = True
                    break
    flags = tuple(s not in vocab for s in syms)
    return tuple(syms), flags


def encode(text, vocab: Vocabulary, merge_order: str = "leftmost",
           unk_token: str | None = None) -> TokenSequence:
    """Segment a string (split on whitespace) or an iterable of words.

    Identical words always segment identically, so results are cached per
    distinct word within the call.
    """
    if isinstance(text, str):
        words = text.split()
    else:
        words = list(text)
    cache: dict[str, tuple[tuple[str, ...], tuple[bool, ...]]] = {}
    out_words = []
    out_flags = []
    for word in words:
        if word not in cache:
            cache[word] = encode_word(word, vocab, merge_order=merge_order)
        tokens, flags = cache[word]
        if unk_token is not None and any(flags):
            tokens = tuple(unk_token if f else t for t, f in zip(tokens, flags))
        out_words.append(tokens)
        out_flags.append(flags)
    return TokenSequence(words=tuple(out_words), oov_flags=tuple(out_flags))


def decode(tokens: TokenSequence, boundary_marker: str = "") -> str:
    """Concatenate tokens per word and join words with single spaces."""
    words = []
    for toks in tokens.words:
        word = "".join(toks)
        if boundary_marker and word.endswith(boundary_marker):
            word = word[: -len(boundary_marker)]
        words.append(word)
    return " ".join(words)
