"""
Bilingual technical term pair identification

Step 1 matches phrase-table translations of a source term against the
target sentence and keeps the most probable one found. Step 2 projects the
term through the word alignment and keeps the projection when it is a
contiguous target range.
"""

import math
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, TextIO, Tuple, Union

from TermNMT.corpus.corpus import ParallelPair
from TermNMT.errors import AlignmentMissingError, PhraseTableFormatError
from TermNMT.logger.logging_config import get_logger
from TermNMT.terms.term_extract import TermSpan

logger = get_logger("TermNMT.TermAlign")

FIELD_SEPARATOR = " ||| "


class PhraseTable:
    """Source phrase -> [(target phrase, P(target|source))], immutable after load"""

    def __init__(self, entries: Optional[Dict[str, Dict[str, float]]] = None):
        self._entries: Dict[str, List[Tuple[str, float]]] = {}
        for source, targets in (entries or {}).items():
            self._entries[source] = _rank(targets.items())

    def __len__(self) -> int:
        return sum(len(v) for v in self._entries.values())

    def __contains__(self, source: str) -> bool:
        return source in self._entries

    def sources(self) -> List[str]:
        return sorted(self._entries)

    def candidates(self, source: str) -> List[Tuple[str, float]]:
        """Translations ranked by probability, then longest, then lexicographic"""
        return list(self._entries.get(source, ()))

    def lexical(self) -> "PhraseTable":
        """Sub-table of single-word source entries"""
        return PhraseTable(
            {s: dict(t) for s, t in self._entries.items() if len(s.split()) == 1}
        )

    def best(self, source: str) -> Optional[Tuple[str, float]]:
        ranked = self._entries.get(source)
        return ranked[0] if ranked else None

    def items(self):
        for source in self.sources():
            for target, prob in self._entries[source]:
                yield source, target, prob


def _rank(targets: Iterable[Tuple[str, float]]) -> List[Tuple[str, float]]:
    return sorted(targets, key=lambda tp: (-tp[1], -len(tp[0]), tp[0]))


def load_phrase_table(stream: Union[TextIO, Iterable[str]], prob_column: int = 0) -> PhraseTable:
    """
    Load a Moses-style phrase table

    Args:
        stream: Lines of `src ||| tgt ||| p1 p2 ... [||| more fields]`
        prob_column: 0-based column of P(tgt|src) among the scores

    Returns:
        PhraseTable; duplicate (src, tgt) rows keep the maximal probability

    Raises:
        PhraseTableFormatError: Malformed line or non-numeric/invalid probability
    """
    table: Dict[str, Dict[str, float]] = {}
    for line_number, raw in enumerate(stream, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            continue
        fields = [f.strip() for f in line.split("|||")]
        if len(fields) < 3 or not fields[0] or not fields[1]:
            raise PhraseTableFormatError("expected `src ||| tgt ||| scores`", line_number)
        scores = fields[2].split()
        if prob_column >= len(scores):
            raise PhraseTableFormatError(
                f"no score in column {prob_column} (found {len(scores)} scores)", line_number
            )
        try:
            prob = float(scores[prob_column])
        except ValueError:
            raise PhraseTableFormatError(f"non-numeric probability {scores[prob_column]!r}", line_number)
        if not math.isfinite(prob) or prob <= 0.0 or prob > 1.0:
            raise PhraseTableFormatError(f"probability {prob} outside (0, 1]", line_number)
        source = " ".join(fields[0].split())
        target = " ".join(fields[1].split())
        targets = table.setdefault(source, {})
        targets[target] = max(prob, targets.get(target, 0.0))
    result = PhraseTable(table)
    logger.info(f"Loaded phrase table with {len(result)} entries for {len(table)} source phrases")
    return result


def write_phrase_table(table: PhraseTable) -> str:
    return "".join(f"{s}{FIELD_SEPARATOR}{t}{FIELD_SEPARATOR}{p!r}\n" for s, t, p in table.items())


class Method(str, Enum):
    PHRASE_TABLE = "phrase_table"
    WORD_ALIGNMENT = "word_alignment"


@dataclass(frozen=True)
class TermPair:
    source_span: TermSpan
    target_span: TermSpan
    method: Method
    prob: Optional[float] = None

    def __post_init__(self):
        if (self.prob is not None) != (self.method is Method.PHRASE_TABLE):
            raise ValueError("prob must be present exactly for phrase-table pairs")

    @property
    def source_surface(self) -> str:
        return self.source_span.surface

    @property
    def target_surface(self) -> str:
        return self.target_span.surface

    @property
    def source_constituents(self) -> Tuple[str, ...]:
        return self.source_span.constituents

    @property
    def target_tokens(self) -> Tuple[str, ...]:
        return self.target_span.constituents


def find_subsequence(tokens: Sequence[str], needle: Sequence[str], start: int = 0) -> int:
    """Index of the first contiguous occurrence of needle at or after start, -1 if absent"""
    n = len(needle)
    if n == 0:
        return -1
    for i in range(start, len(tokens) - n + 1):
        if tuple(tokens[i : i + n]) == tuple(needle):
            return i
    return -1


def identify_pair_phrase_table(pair: ParallelPair, term: TermSpan, table: PhraseTable) -> Optional[TermPair]:
    """
    Step 1: the most probable phrase-table translation present in the target

    Returns:
        TermPair over the first target occurrence, or None
    """
    target_tokens = pair.target.surfaces
    for translation, prob in table.candidates(term.phrase):
        words = translation.split()
        position = find_subsequence(target_tokens, words)
        if position >= 0:
            target_span = TermSpan.from_tokens(target_tokens, position, position + len(words))
            return TermPair(term, target_span, Method.PHRASE_TABLE, prob)
    return None


def identify_pair_word_alignment(pair: ParallelPair, term: TermSpan) -> Optional[TermPair]:
    """
    Step 2: project the term through the word alignment

    Returns:
        TermPair when the linked target positions form one contiguous range, else None

    Raises:
        AlignmentMissingError: The pair carries no word alignment
    """
    if pair.word_alignment is None:
        raise AlignmentMissingError("Word alignment required for alignment-based term pairing")
    linked = sorted({j for i, j in pair.word_alignment if term.start <= i < term.end})
    if not linked:
        return None
    low, high = linked[0], linked[-1]
    # Discontinuous projections are discarded
    if high - low + 1 != len(linked):
        return None
    target_span = TermSpan.from_tokens(pair.target.surfaces, low, high + 1)
    return TermPair(term, target_span, Method.WORD_ALIGNMENT)


def _overlaps(a: TermSpan, b: TermSpan) -> bool:
    return a.start < b.end and b.start < a.end


@dataclass
class TermPairStatistics:
    """Occurrence and type counters over a corpus"""

    by_phrase_table: int = 0
    by_word_alignment: int = 0
    unmatched: int = 0
    pair_types: Counter = field(default_factory=Counter)

    @property
    def extracted(self) -> int:
        return self.by_phrase_table + self.by_word_alignment + self.unmatched

    def add(self, pairs: Sequence[TermPair], unmatched: int):
        for term_pair in pairs:
            if term_pair.method is Method.PHRASE_TABLE:
                self.by_phrase_table += 1
            else:
                self.by_word_alignment += 1
            self.pair_types[(term_pair.source_span.phrase, term_pair.target_span.phrase)] += 1
        self.unmatched += unmatched

    def to_dict(self) -> dict:
        total = self.extracted
        return {
            "extracted_term_occurrences": total,
            "identified_by_phrase_table": self.by_phrase_table,
            "identified_by_word_alignment": self.by_word_alignment,
            "unmatched": self.unmatched,
            "unmatched_ratio": (self.unmatched / total) if total else 0.0,
            "term_pair_types": len(self.pair_types),
            "source_term_types": len({s for s, _ in self.pair_types}),
            "target_term_types": len({t for _, t in self.pair_types}),
        }


def identify_term_pairs(
    pair: ParallelPair,
    terms: Sequence[TermSpan],
    table: PhraseTable,
    use_word_alignment: bool = True,
    statistics: Optional[TermPairStatistics] = None,
) -> List[TermPair]:
    """
    Identify term pairs: phrase table first, word alignment as fallback

    Args:
        pair: Parallel sentence pair
        terms: Sorted, disjoint source terms of pair.source
        table: Phrase table
        use_word_alignment: Consult Step 2 when the pair carries alignment
        statistics: Optional counters updated in place

    Returns:
        Term pairs in source order with pairwise disjoint target spans. A later
        occurrence of an already paired source term is covered by that pair.
    """
    result: List[TermPair] = []
    seen_sources: Dict[str, TermPair] = {}
    repeats: List[TermPair] = []
    unmatched = 0
    for term in terms:
        if term.phrase in seen_sources:
            repeats.append(seen_sources[term.phrase])
            continue
        found = identify_pair_phrase_table(pair, term, table)
        if found is None and use_word_alignment and pair.word_alignment is not None:
            found = identify_pair_word_alignment(pair, term)
        if found is None:
            unmatched += 1
            continue
        if any(_overlaps(found.target_span, kept.target_span) for kept in result):
            logger.debug(f"Target span conflict for term {term.surface!r}, keeping the earlier term")
            unmatched += 1
            continue
        seen_sources[term.phrase] = found
        result.append(found)
    if statistics is not None:
        statistics.add(result + repeats, unmatched)
    return result
