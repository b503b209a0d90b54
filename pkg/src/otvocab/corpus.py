"""Corpus ingestion and frequency statistics.

Everything downstream (candidate generation, transport marginals, entropy)
is derived from the tables produced here.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from .errors import EmptyCorpusError
from .vocab import Vocabulary


@dataclass(frozen=True)
class RawCorpus:
    """Decoded text lines plus the number of raw bytes they covered."""

    lines: tuple[str, ...]
    byte_count: int
    source_id: str = ""


@dataclass(frozen=True)
class WordSequence:
    """Distinct whitespace-delimited words with occurrence counts.

    Order is first-appearance order, which keeps every downstream artifact
    deterministic.
    """

    words: tuple[tuple[str, int], ...]

    @property
    def total(self) -> int:
        return sum(c for _, c in self.words)


@dataclass(frozen=True)
class CharTable:
    entries: dict[str, int]
    total: int

    def probabilities(self) -> dict[str, float]:
        return {ch: c / self.total for ch, c in self.entries.items()}


@dataclass(frozen=True)
class FrequencyTable:
    entries: dict[str, int]
    total: int

    def probabilities(self) -> dict[str, float]:
        return {tok: c / self.total for tok, c in self.entries.items()}


def load_corpus(path, max_bytes=None, source_id=None) -> RawCorpus:
    """Read a UTF-8 text file into a RawCorpus.

    Invalid UTF-8 sequences are replaced with U+FFFD.  When ``max_bytes`` is
    set, the corpus is truncated at the last full line that fits within the
    cap (line terminators count toward the cap).
    """
    with open(path, "rb") as f:
        raw = f.read()
    if not raw:
        raise EmptyCorpusError(f"empty corpus file: {path}")
    lines = []
    consumed = 0
    for chunk in raw.splitlines(keepends=True):
        if max_bytes is not None and consumed + len(chunk) > max_bytes:
            break
        consumed += len(chunk)
        text = chunk.decode("utf-8", errors="replace").rstrip("\r\n")
        lines.append(text)
    if not lines:
        raise EmptyCorpusError(f"no complete line fits within max_bytes={max_bytes}: {path}")
    return RawCorpus(lines=tuple(lines), byte_count=consumed,
                     source_id=source_id if source_id is not None else str(path))


def pre_tokenize(corpus: RawCorpus, boundary_marker: str = "") -> WordSequence:
    """Split lines on Unicode whitespace and aggregate word counts.

    ``boundary_marker``, when non-empty, is appended to every word (end-of-word
    convention); merges never cross the marker because it becomes part of the
    word string itself.
    """
    counts: Counter[str] = Counter()
    order: dict[str, None] = {}
    for line in corpus.lines:
        for word in line.split():
            if boundary_marker:
                word = word + boundary_marker
            counts[word] += 1
            if word not in order:
                order[word] = None
    if not counts:
        raise EmptyCorpusError("corpus contains only whitespace")
    return WordSequence(words=tuple((w, counts[w]) for w in order))


def count_chars(words: WordSequence) -> CharTable:
    """Per-character counts weighted by word counts."""
    counts: Counter[str] = Counter()
    for word, c in words.words:
        for ch in word:
            counts[ch] += c
    return CharTable(entries=dict(counts), total=sum(counts.values()))


def count_tokens(words: WordSequence, vocab: Vocabulary,
                 merge_order: str = "leftmost") -> FrequencyTable:
    """Token counts under a greedy segmentation of the corpus with ``vocab``.

    Each distinct word is segmented once; its token counts are multiplied by
    the word count.  OOV fallback characters are counted like any other token.
    """
    from .segmenter import encode_word  # local import: segmenter depends on vocab only

    counts: Counter[str] = Counter()
    for word, c in words.words:
        tokens, _ = encode_word(word, vocab, merge_order=merge_order)
        for tok in tokens:
            counts[tok] += c
    return FrequencyTable(entries=dict(counts), total=sum(counts.values()))


def write_frequency_tsv(entries: dict[str, int], fileobj) -> None:
    """Serialize a frequency table as ``token<TAB>count`` lines.

    Rows are sorted by descending count, ties broken lexicographically.
    """
    for tok, c in sorted(entries.items(), key=lambda kv: (-kv[1], kv[0])):
        fileobj.write(f"{tok}\t{c}\n")


def read_frequency_tsv(fileobj) -> dict[str, int]:
    entries: dict[str, int] = {}
    for line in fileobj:
        line = line.rstrip("\n")
        if not line:
            continue
        tok, _, c = line.rpartition("\t")
        entries[tok] = int(c)
    return entries
