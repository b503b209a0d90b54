"""Scikit-learn style wrappers around the functional core.

These make the vocabularizers and the segmenter usable inside sklearn
pipelines: ``fit`` consumes an iterable of text lines, ``transform`` turns
lines into space-joined token strings, and ``get_params`` exposes every
hyper-parameter for grid search and cloning.
"""

from __future__ import annotations

from sklearn.base import BaseEstimator, TransformerMixin

from .bpe import learn_bpe
from .corpus import RawCorpus, pre_tokenize
from .errors import EmptyCorpusError
from .ot import SinkhornConfig
from .pipeline import (DEFAULT_MUV_SEARCH_SIZES, TimestepSchedule, muv_search,
                       run_volt)
from .segmenter import decode, encode
from .vocab import Vocabulary


def _lines_to_words(X, boundary_marker=""):
    lines = tuple(str(x) for x in X)
    byte_count = sum(len(ln.encode("utf-8")) + 1 for ln in lines)
    corpus = RawCorpus(lines=lines, byte_count=byte_count, source_id="<memory>")
    return pre_tokenize(corpus, boundary_marker=boundary_marker)


class _SegmentingMixin:
    """Shared transform/inverse_transform once ``vocabulary_`` is fitted."""

    def transform(self, X):
        self._check_fitted()
        out = []
        for line in X:
            seq = encode(str(line), self.vocabulary_, merge_order=self.merge_order)
            out.append(" ".join(tok for word in seq.words for tok in word))
        return out

    def inverse_transform(self, X):
        """Best-effort detokenization: tokens are joined back greedily."""
        self._check_fitted()
        out = []
        for line in X:
            seq = encode(str(line), self.vocabulary_, merge_order=self.merge_order)
            out.append(decode(seq))
        return out

    def _check_fitted(self):
        if getattr(self, "vocabulary_", None) is None:
            raise EmptyCorpusError("estimator is not fitted; call fit first")


class VoltVocabularizer(_SegmentingMixin, BaseEstimator, TransformerMixin):
    """Learn a vocabulary by entropic optimal transport over BPE candidates.

    Parameters mirror the CLI flags: ``candidates`` is the BPE merge budget,
    ``schedule`` a ``start:stop:step`` size schedule, ``gamma`` the entropic
    regularizer.  After ``fit``, ``vocabulary_`` holds the selected
    vocabulary and ``report_`` the per-timestep trace.
    """

    def __init__(self, candidates=100_000, schedule="1000:10000:1000",
                 gamma=0.1, max_iters=5000, tolerance=1e-8, epsilon_relax=1e-3,
                 selection="muv", merge_order="leftmost", jobs=1):
        self.candidates = candidates
        self.schedule = schedule
        self.gamma = gamma
        self.max_iters = max_iters
        self.tolerance = tolerance
        self.epsilon_relax = epsilon_relax
        self.selection = selection
        self.merge_order = merge_order
        self.jobs = jobs

    def fit(self, X, y=None):
        words = _lines_to_words(X)
        candidate_list = learn_bpe(words, num_merges=self.candidates)
        schedule = TimestepSchedule.from_spec(self.schedule)
        # Clip the schedule to what the candidate list can support.
        sizes = tuple(s for s in schedule.sizes if s <= len(candidate_list.tokens))
        if len(sizes) < 2:
            sizes = schedule.sizes[:2]
        schedule = TimestepSchedule(sizes=sizes, interval=schedule.interval)
        config = SinkhornConfig(gamma=self.gamma, max_iters=self.max_iters,
                                tolerance=self.tolerance,
                                epsilon_relax=self.epsilon_relax)
        report = run_volt(words, candidate_list, schedule, config,
                          selection=self.selection, merge_order=self.merge_order,
                          jobs=self.jobs)
        self.vocabulary_ = report.selected_vocabulary
        self.report_ = report
        self.candidate_list_ = candidate_list
        return self


class MuvSearchVocabularizer(_SegmentingMixin, BaseEstimator, TransformerMixin):
    """BPE-size sweep picking the vocabulary with the highest marginal utility."""

    def __init__(self, sizes=DEFAULT_MUV_SEARCH_SIZES, merge_order="leftmost"):
        self.sizes = sizes
        self.merge_order = merge_order

    def fit(self, X, y=None):
        words = _lines_to_words(X)
        self.vocabulary_ = muv_search(words, self.sizes, merge_order=self.merge_order)
        return self


class GreedySegmenter(_SegmentingMixin, BaseEstimator, TransformerMixin):
    """Apply a fixed, already-learned vocabulary to text lines."""

    def __init__(self, vocabulary=None, merge_order="leftmost"):
        self.vocabulary = vocabulary
        self.merge_order = merge_order

    def fit(self, X=None, y=None):
        if self.vocabulary is None:
            raise EmptyCorpusError("GreedySegmenter requires a vocabulary")
        if isinstance(self.vocabulary, Vocabulary):
            self.vocabulary_ = self.vocabulary
        else:
            self.vocabulary_ = Vocabulary.from_tokens(self.vocabulary)
        return self
