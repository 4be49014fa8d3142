"""
Technical term candidate extraction

A candidate is a maximal run of morphemes whose part of speech is one of
nouns, prefixes, suffixes, unknown words, numbers or alphabetic characters,
filtered by edge stop lists, symbol/number exclusions and a minimum length.
"""

from dataclasses import dataclass, field
from typing import FrozenSet, List, Tuple

from TermNMT.corpus.corpus import TaggedSentence

DEFAULT_ELIGIBLE_POS = frozenset({"noun", "prefix", "suffix", "unknown", "number", "alpha"})


@dataclass(frozen=True)
class TermSpan:
    """Half-open morpheme range [start, end) of a sentence"""

    start: int
    end: int
    surface: str
    constituents: Tuple[str, ...] = ()

    def __post_init__(self):
        if not 0 <= self.start < self.end:
            raise ValueError(f"Invalid span [{self.start}, {self.end})")

    def __len__(self) -> int:
        return self.end - self.start

    @property
    def phrase(self) -> str:
        """Space-joined constituents, the phrase table key"""
        return " ".join(self.constituents)

    @classmethod
    def from_tokens(cls, tokens, start: int, end: int) -> "TermSpan":
        constituents = tuple(tokens[start:end])
        return cls(start, end, "".join(constituents), constituents)


@dataclass(frozen=True)
class ExtractConfig:
    eligible_pos: FrozenSet[str] = DEFAULT_ELIGIBLE_POS
    forbidden_edge_prefixes: FrozenSet[str] = field(default_factory=frozenset)
    forbidden_edge_suffixes: FrozenSet[str] = field(default_factory=frozenset)
    min_len: int = 1
    exclude_symbol_or_number_only: bool = True
    exclude_number_containing: bool = False
    symbol_pos: str = "symbol"
    number_like_pos: FrozenSet[str] = frozenset({"number", "alpha"})

    def __post_init__(self):
        if self.min_len < 1:
            raise ValueError(f"min_len must be >= 1, got {self.min_len}")

    @classmethod
    def from_dict(cls, data: dict) -> "ExtractConfig":
        values = dict(data)
        for key in ("eligible_pos", "forbidden_edge_prefixes", "forbidden_edge_suffixes", "number_like_pos"):
            if key in values:
                values[key] = frozenset(values[key])
        return cls(**values)

    def to_dict(self) -> dict:
        return {
            "eligible_pos": sorted(self.eligible_pos),
            "forbidden_edge_prefixes": sorted(self.forbidden_edge_prefixes),
            "forbidden_edge_suffixes": sorted(self.forbidden_edge_suffixes),
            "min_len": self.min_len,
            "exclude_symbol_or_number_only": self.exclude_symbol_or_number_only,
            "exclude_number_containing": self.exclude_number_containing,
            "symbol_pos": self.symbol_pos,
            "number_like_pos": sorted(self.number_like_pos),
        }


def _eligible_runs(tags: List[str], eligible: FrozenSet[str]) -> List[Tuple[int, int]]:
    runs = []
    start = None
    for i, tag in enumerate(tags):
        if tag in eligible:
            if start is None:
                start = i
        elif start is not None:
            runs.append((start, i))
            start = None
    if start is not None:
        runs.append((start, len(tags)))
    return runs


def _keep_run(tags: List[str], config: ExtractConfig) -> bool:
    if config.symbol_pos in tags:
        return False
    number_like = [t in config.number_like_pos for t in tags]
    if config.exclude_symbol_or_number_only and all(number_like):
        return False
    if config.exclude_number_containing and any(number_like):
        return False
    return len(tags) >= config.min_len


def extract_candidate_terms(sentence: TaggedSentence, config: ExtractConfig = ExtractConfig()) -> List[TermSpan]:
    """
    Extract technical term candidates from a tagged sentence

    Args:
        sentence: POS-tagged source sentence
        config: Extraction rules

    Returns:
        Non-overlapping spans sorted by start position
    """
    surfaces = sentence.surfaces
    tags = sentence.tags
    spans = []
    for start, end in _eligible_runs(tags, config.eligible_pos):
        while start < end and surfaces[start] in config.forbidden_edge_prefixes:
            start += 1
        while start < end and surfaces[end - 1] in config.forbidden_edge_suffixes:
            end -= 1
        if start < end and _keep_run(tags[start:end], config):
            spans.append(TermSpan.from_tokens(surfaces, start, end))
    return spans
