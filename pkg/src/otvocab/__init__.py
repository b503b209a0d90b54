"""Corpus-in, vocabulary-out subword toolkit.

Vocabulary construction by maximizing the marginal utility of vocabulary
growth, solved through entropy-regularized optimal transport, plus a
MUV-driven BPE sweep baseline and a greedy segmenter for applying learned
vocabularies.
"""

__version__ = "0.1.0"

from .bpe import CandidateList, MergeRule, learn_bpe, top_candidates
from .corpus import (CharTable, FrequencyTable, RawCorpus, WordSequence,
                     count_chars, count_tokens, load_corpus, pre_tokenize)
from .entropy import EntropyReport, MuvScore, corpus_entropy, muv
from .errors import (EmptyCorpusError, InconsistentInputsError,
                     InfeasibleTransportError, InvalidScheduleError,
                     InvalidSizeError, InvalidSizePairError,
                     InvalidVocabularyError, OtvocabError, PipelineError)
from .estimators import (GreedySegmenter, MuvSearchVocabularizer,
                         VoltVocabularizer)
from .ot import (DistanceMatrix, SinkhornConfig, TransportPlan,
                 build_distance_matrix, extract_vocabulary, sinkhorn,
                 transport_cost)
from .pipeline import (TimestepSchedule, VoltReport, bpe_sweep, muv_search,
                       run_volt)
from .segmenter import TokenSequence, decode, encode, encode_word
from .vocab import Vocabulary

__all__ = [
    "CandidateList", "MergeRule", "learn_bpe", "top_candidates",
    "CharTable", "FrequencyTable", "RawCorpus", "WordSequence",
    "count_chars", "count_tokens", "load_corpus", "pre_tokenize",
    "EntropyReport", "MuvScore", "corpus_entropy", "muv",
    "EmptyCorpusError", "InconsistentInputsError", "InfeasibleTransportError",
    "InvalidScheduleError", "InvalidSizeError", "InvalidSizePairError",
    "InvalidVocabularyError", "OtvocabError", "PipelineError",
    "GreedySegmenter", "MuvSearchVocabularizer", "VoltVocabularizer",
    "DistanceMatrix", "SinkhornConfig", "TransportPlan",
    "build_distance_matrix", "extract_vocabulary", "sinkhorn", "transport_cost",
    "TimestepSchedule", "VoltReport", "bpe_sweep", "muv_search", "run_volt",
    "TokenSequence", "decode", "encode", "encode_word",
    "Vocabulary",
]
