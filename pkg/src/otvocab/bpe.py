"""Byte-pair-encoding candidate generation.

Trains merge rules over the word table and exposes the ranked candidate
list that the transport solver draws its top-N sets from.  The merge loop
uses an index from pair to affected words plus a lazy max-heap, so each
merge only touches the words that actually contain the pair.
"""

from __future__ import annotations

import heapq
from collections import Counter, defaultdict
from dataclasses import dataclass, field

from .corpus import WordSequence
from .errors import InvalidSizeError

# BPE state-count sort places characters after merged tokens on count ties;
# any deterministic rule works, this one keeps rule order visible.
_CHAR_RANK = 1 << 60


@dataclass(frozen=True)
class MergeRule:
    left: str
    right: str
    merged: str
    rank: int


@dataclass(frozen=True)
class CandidateList:
    """Tokens ranked by descending count, plus the rules that created them."""

    tokens: tuple[tuple[str, int], ...]
    merge_rules: tuple[MergeRule, ...]
    truncated: bool = False
    forced_chars: tuple[str, ...] = ()

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def token_strings(self) -> tuple[str, ...]:
        return tuple(t for t, _ in self.tokens)

    def char_set(self) -> frozenset[str]:
        return frozenset(t for t, _ in self.tokens if len(t) == 1)


def _pair_stats(segmentations, counts):
    stats: Counter[tuple[str, str]] = Counter()
    index: defaultdict[tuple[str, str], Counter] = defaultdict(Counter)
    for wi, syms in enumerate(segmentations):
        c = counts[wi]
        for pair in zip(syms, syms[1:]):
            stats[pair] += c
            index[pair][wi] += 1
    return stats, index


def _merge_word(syms, left, right, merged):
    out = []
    i = 0
    n = len(syms)
    while i < n:
        if i < n - 1 and syms[i] == left and syms[i + 1] == right:
            out.append(merged)
            i += 2
        else:
            out.append(syms[i])
            i += 1
    return out


def learn_bpe(words: WordSequence, num_merges: int) -> CandidateList:
    """Train BPE merge rules and return the ranked candidate list.

    The most frequent adjacent pair is merged each round, ties broken
    lexicographically on (left, right).  Training stops early once no pair
    occurs at least twice.  Candidate counts come from the final segmentation
    state, so nested tokens are not double-counted.
    """
    if not words.words:
        raise InvalidSizeError("empty word sequence")
    if num_merges < 1:
        raise InvalidSizeError(f"num_merges must be >= 1, got {num_merges}")

    counts = [c for _, c in words.words]
    segs = [list(w) for w, _ in words.words]
    stats, index = _pair_stats(segs, counts)

    heap = [(-c, pair) for pair, c in stats.items()]
    heapq.heapify(heap)

    rules: list[MergeRule] = []
    while len(rules) < num_merges and heap:
        neg, pair = heapq.heappop(heap)
        if stats.get(pair, 0) != -neg:
            continue  # stale heap entry
        if -neg < 2:
            break
        left, right = pair
        merged = left + right
        rules.append(MergeRule(left=left, right=right, merged=merged, rank=len(rules)))

        touched = sorted(index.pop(pair).keys())
        del stats[pair]
        for wi in touched:
            old = segs[wi]
            new = _merge_word(old, left, right, merged)
            if new == old:
                continue
            c = counts[wi]
            for p in zip(old, old[1:]):
                stats[p] -= c
                if stats[p] <= 0:
                    stats.pop(p, None)
                else:
                    heapq.heappush(heap, (-stats[p], p))
                if p in index:
                    index[p].pop(wi, None)
            for p in zip(new, new[1:]):
                stats[p] += c
                index[p][wi] += 1
                heapq.heappush(heap, (-stats[p], p))
            segs[wi] = new

    # Counts from the final segmentation state.
    token_counts: Counter[str] = Counter()
    for wi, syms in enumerate(segs):
        for s in syms:
            token_counts[s] += counts[wi]
    # Every corpus character and every merged token stays listed even if
    # fully absorbed by a later merge.
    for word, _ in words.words:
        for ch in word:
            if ch not in token_counts:
                token_counts[ch] = 0
    for rule in rules:
        if rule.merged not in token_counts:
            token_counts[rule.merged] = 0

    rank_of = {r.merged: r.rank for r in rules}
    ordered = sorted(
        token_counts.items(),
        key=lambda kv: (-kv[1], rank_of.get(kv[0], _CHAR_RANK), kv[0]),
    )
    return CandidateList(tokens=tuple(ordered), merge_rules=tuple(rules))


def top_candidates(candidates: CandidateList, n: int) -> CandidateList:
    """Prefix of the canonical order, with all characters force-included.

    Without force-inclusion a character outside the top-n would make the
    solver's char marginal unsatisfiable.
    """
    if n < 1:
        raise InvalidSizeError(f"candidate budget must be >= 1, got {n}")
    truncated = n > len(candidates.tokens)
    prefix = list(candidates.tokens[:n])
    present = {t for t, _ in prefix}
    forced = []
    for tok, c in candidates.tokens:
        if len(tok) == 1 and tok not in present:
            prefix.append((tok, c))
            forced.append(tok)
    return CandidateList(
        tokens=tuple(prefix),
        merge_rules=candidates.merge_rules,
        truncated=truncated,
        forced_chars=tuple(forced),
    )


def write_candidates_tsv(candidates: CandidateList, fileobj) -> None:
    for tok, c in candidates.tokens:
        fileobj.write(f"{tok}\t{c}\n")


def write_merges(candidates: CandidateList, fileobj) -> None:
    for rule in candidates.merge_rules:
        fileobj.write(f"{rule.left} {rule.right}\n")


def read_candidates_tsv(fileobj, merges_fileobj=None) -> CandidateList:
    tokens = []
    for line in fileobj:
        line = line.rstrip("\n")
        if not line:
            continue
        tok, _, c = line.rpartition("\t")
        tokens.append((tok, int(c)))
    rules: list[MergeRule] = []
    if merges_fileobj is not None:
        for rank, line in enumerate(merges_fileobj):
            line = line.rstrip("\n")
            if not line:
                continue
            left, _, right = line.partition(" ")
            rules.append(MergeRule(left=left, right=right, merged=left + right, rank=rank))
    return CandidateList(tokens=tuple(tokens), merge_rules=tuple(rules))
