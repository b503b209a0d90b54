"""Vocabulary carrier shared by the segmenter, entropy, and pipeline layers."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Vocabulary:
    """An ordered token set with optional frequencies and provenance.

    ``provenance`` records which strategy and size budget produced the
    vocabulary plus a digest of the configuration, so that report files can
    always be traced back to a run.
    """

    tokens: tuple[str, ...]
    frequencies: dict[str, int] | None = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "_token_set", frozenset(self.tokens))

    @property
    def token_set(self) -> frozenset[str]:
        return self._token_set

    def __contains__(self, token: str) -> bool:
        return token in self._token_set

    def __len__(self) -> int:
        return len(self.tokens)

    @classmethod
    def from_tokens(cls, tokens, **kwargs) -> "Vocabulary":
        seen: dict[str, None] = {}
        for t in tokens:
            if t and t not in seen:
                seen[t] = None
        return cls(tokens=tuple(seen), **kwargs)
