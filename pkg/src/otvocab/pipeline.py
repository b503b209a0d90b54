"""Outer loop: one transport instance per timestep, MUV-based selection.

Each element of the schedule bounds the candidate set handed to the solver;
the vocabulary read off each plan is scored by length-normalized entropy and
consecutive timesteps are compared by marginal utility.  The baseline
``muv_search`` skips the solver and sweeps BPE vocabularies directly.
"""

from __future__ import annotations

import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bpe import CandidateList, learn_bpe, top_candidates
from .corpus import WordSequence, count_chars, count_tokens
from .entropy import EntropyReport, corpus_entropy
from .errors import (InfeasibleTransportError, InvalidScheduleError,
                     PipelineError)
from .ot import (SinkhornConfig, build_distance_matrix, extract_vocabulary,
                 sinkhorn)
from .vocab import Vocabulary

DEFAULT_BILINGUAL_SCHEDULE = "1000:10000:1000"
DEFAULT_MUV_SEARCH_SIZES = (1000, 2000, 3000, 4000, 5000, 6000, 7000, 8000,
                            9000, 10000, 20000)


@dataclass(frozen=True)
class TimestepSchedule:
    sizes: tuple[int, ...]
    interval: int

    def __post_init__(self):
        if not self.sizes:
            raise InvalidScheduleError("schedule is empty")
        if any(s <= 0 for s in self.sizes):
            raise InvalidScheduleError("schedule sizes must be positive")
        if any(b <= a for a, b in zip(self.sizes, self.sizes[1:])):
            raise InvalidScheduleError("schedule must be strictly increasing")

    @classmethod
    def from_spec(cls, spec: str) -> "TimestepSchedule":
        """Parse ``start:stop:step`` into an arithmetic schedule."""
        m = re.fullmatch(r"(\d+):(\d+):(\d+)", spec)
        if not m:
            raise InvalidScheduleError(f"bad schedule spec {spec!r}, want start:stop:step")
        start, stop, step = map(int, m.groups())
        if step <= 0 or stop < start:
            raise InvalidScheduleError(f"bad schedule spec {spec!r}")
        return cls(sizes=tuple(range(start, stop + 1, step)), interval=step)


@dataclass
class TraceEntry:
    timestep: int
    candidate_size: int
    vocab_size: int | None = None
    entropy: float | None = None
    muv: float | None = None
    sinkhorn_iterations: int | None = None
    converged: bool | None = None
    error: str | None = None


@dataclass
class VoltReport:
    trace: list[TraceEntry]
    selected_timestep: int
    selected_vocabulary: Vocabulary
    schedule: TimestepSchedule


def _solve_timestep(words, candidates, size, char_table, config, merge_order):
    sub = top_candidates(candidates, size)
    cand_vocab = Vocabulary.from_tokens(sub.token_strings)
    table = count_tokens(words, cand_vocab, merge_order=merge_order)
    token_dist = np.array(
        [table.entries.get(t, 0) for t in sub.token_strings], dtype=np.float64)
    token_dist /= token_dist.sum()
    dist = build_distance_matrix(char_table, sub)
    char_dist = np.array(
        [char_table.entries[ch] for ch in dist.chars], dtype=np.float64)
    char_dist /= char_dist.sum()
    plan = sinkhorn(dist, char_dist, token_dist, config)
    vocab = extract_vocabulary(plan, sub, token_dist)
    report = corpus_entropy(words, vocab, merge_order=merge_order)
    return vocab, report, plan


def run_volt(words: WordSequence, candidates: CandidateList,
             schedule: TimestepSchedule, config: SinkhornConfig | None = None,
             selection: str = "muv", merge_order: str = "leftmost",
             jobs: int = 1) -> VoltReport:
    """Solve one transport instance per schedule element and select by MUV.

    ``selection="muv"`` picks the timestep with the maximum marginal utility
    (ties to the earlier timestep); ``selection="literal-eq3"`` instead
    maximizes the raw per-interval entropy difference.  A solver failure at
    one timestep is recorded in the trace and skipped; fewer than two
    successful timesteps is fatal.
    """
    if config is None:
        config = SinkhornConfig()
    if schedule.sizes[-1] > len(candidates.tokens):
        raise InvalidScheduleError(
            f"schedule top {schedule.sizes[-1]} exceeds candidate list size "
            f"{len(candidates.tokens)}")
    char_table = count_chars(words)

    def solve(item):
        t, size = item
        entry = TraceEntry(timestep=t, candidate_size=size)
        try:
            vocab, report, plan = _solve_timestep(
                words, candidates, size, char_table, config, merge_order)
        except InfeasibleTransportError as exc:
            entry.error = str(exc)
            return entry, None, None
        entry.vocab_size = len(vocab)
        entry.entropy = report.entropy
        entry.sinkhorn_iterations = plan.iterations_used
        entry.converged = plan.converged
        return entry, vocab, report

    items = list(enumerate(schedule.sizes))
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(solve, items))
    else:
        results = [solve(item) for item in items]

    trace = []
    vocabs: dict[int, Vocabulary] = {}
    prev: tuple[int, float] | None = None  # (size, entropy) of last success
    for (entry, vocab, report), size in zip(results, schedule.sizes):
        if vocab is not None:
            vocabs[entry.timestep] = vocab
            if prev is not None:
                gap = size - prev[0]
                entry.muv = -(report.entropy - prev[1]) / gap
            prev = (size, report.entropy)
        trace.append(entry)

    scored = [e for e in trace if e.muv is not None]
    if len(vocabs) < 2 or not scored:
        raise PipelineError("fewer than two timesteps produced a vocabulary")
    if selection == "literal-eq3":
        best = max(scored, key=lambda e: (-e.muv, -e.timestep))
    elif selection == "muv":
        best = max(scored, key=lambda e: (e.muv, -e.timestep))
    else:
        raise ValueError(f"unknown selection rule {selection!r}")

    selected = vocabs[best.timestep]
    selected = Vocabulary(
        tokens=selected.tokens,
        frequencies=selected.frequencies,
        provenance={**selected.provenance,
                    "strategy": "volt",
                    "timestep": best.timestep,
                    "size_budget": schedule.sizes[best.timestep]},
    )
    return VoltReport(trace=trace, selected_timestep=best.timestep,
                      selected_vocabulary=selected, schedule=schedule)


def bpe_sweep(words: WordSequence, sizes, merge_order: str = "leftmost"):
    """BPE vocabularies at each achievable size, derived from one merge run.

    A vocabulary of size s is the character set plus the tokens created by
    the first s - |chars| merges; sizes below the character count or beyond
    the learned merges are skipped.  Returns (size, Vocabulary, EntropyReport)
    triples.
    """
    sizes = sorted(set(int(s) for s in sizes))
    if len(sizes) < 2:
        raise InvalidScheduleError("need at least two sizes")
    chars = sorted(count_chars(words).entries)
    n_chars = len(chars)
    candidates = learn_bpe(words, num_merges=max(sizes))
    rules = candidates.merge_rules
    out = []
    for size in sizes:
        n_merges = size - n_chars
        if n_merges < 0 or n_merges > len(rules):
            continue
        vocab = Vocabulary.from_tokens(
            chars + [r.merged for r in rules[:n_merges]],
            provenance={"strategy": "bpe", "size": size},
        )
        report = corpus_entropy(words, vocab, merge_order=merge_order)
        out.append((size, vocab, report))
    return out


def muv_search(words: WordSequence, sizes=DEFAULT_MUV_SEARCH_SIZES,
               merge_order: str = "leftmost") -> Vocabulary:
    """Sweep BPE sizes and return the vocabulary with the highest MUV.

    Consecutive sweep entries are scored with the actual size difference as
    the gap; ties go to the smaller vocabulary.
    """
    sweep = bpe_sweep(words, sizes, merge_order=merge_order)
    if len(sweep) < 2:
        raise InvalidScheduleError("fewer than two sizes are achievable on this corpus")
    best = None  # (muv, -index, vocab)
    for (s0, _, r0), (s1, vocab, r1), i in zip(sweep, sweep[1:], range(len(sweep))):
        score = -(r1.entropy - r0.entropy) / (s1 - s0)
        if best is None or score > best[0]:
            best = (score, i, vocab)
    vocab = best[2]
    return Vocabulary(tokens=vocab.tokens, frequencies=vocab.frequencies,
                      provenance={**vocab.provenance, "strategy": "muv-search",
                                  "muv": best[0]})
