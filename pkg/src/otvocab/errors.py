"""Exception hierarchy for the toolkit."""


class OtvocabError(Exception):
    """Base class for all toolkit errors."""


class EmptyCorpusError(OtvocabError):
    """Corpus file is empty or contains only whitespace."""


class InvalidSizeError(OtvocabError):
    """A requested size or budget is not a positive integer."""


class InvalidVocabularyError(OtvocabError):
    """A vocabulary is empty or otherwise unusable."""


class InvalidSizePairError(OtvocabError):
    """Marginal-utility score requested for a non-increasing size pair."""


class InconsistentInputsError(OtvocabError):
    """Candidate tokens reference characters absent from the char table."""


class InfeasibleTransportError(OtvocabError):
    """The transport instance has a character or token with no feasible cell."""

    def __init__(self, message, row=None, col=None):
        super().__init__(message)
        self.row = row
        self.col = col


class InvalidScheduleError(OtvocabError):
    """Timestep schedule is empty, non-increasing, or exceeds the candidate list."""


class PipelineError(OtvocabError):
    """Too few timesteps succeeded for a vocabulary to be selected."""
