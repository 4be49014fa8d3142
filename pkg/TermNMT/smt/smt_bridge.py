"""
SMT Bridge Module for TermNMT
Term translation through the phrase table and n-best list ingestion
"""

import math
from dataclasses import dataclass
from itertools import groupby
from typing import Iterable, List, Optional, Sequence, TextIO, Tuple, Union

from TermNMT.errors import NBestFormatError
from TermNMT.logger.logging_config import get_logger
from TermNMT.terms.term_align import FIELD_SEPARATOR, PhraseTable

logger = get_logger("TermNMT.SMTBridge")

PHRASE_TABLE = "phrase_table"
COMPOSITIONAL = "compositional"
PASSTHROUGH = "passthrough"


def _unique_best(table: PhraseTable, source: str) -> Optional[str]:
    ranked = table.candidates(source)
    if not ranked:
        return None
    if len(ranked) > 1 and ranked[1][1] == ranked[0][1]:
        return None
    return ranked[0][0]


def _compose(constituents: Sequence[str], table: PhraseTable) -> Tuple[List[str], int]:
    """Greedy left-to-right longest sub-phrase translation; returns (words, covered constituents)"""
    words: List[str] = []
    covered = 0
    i = 0
    n = len(constituents)
    while i < n:
        for j in range(n, i, -1):
            if j - i == n:
                # the full term was already consulted
                continue
            best = table.best(" ".join(constituents[i:j]))
            if best is not None:
                words.extend(best[0].split())
                covered += j - i
                i = j
                break
        else:
            words.append(constituents[i])
            i += 1
    return words, covered


def translate_term_with_method(term_surface: str, constituents: Sequence[str], table: PhraseTable) -> Tuple[str, str]:
    """
    Translate one technical term

    Args:
        term_surface: Concatenated term surface
        constituents: Term morphemes in order
        table: Phrase table

    Returns:
        Tuple of (translation, method) with method one of
        "phrase_table", "compositional", "passthrough"
    """
    keys = [" ".join(constituents)] if constituents else []
    if term_surface not in keys:
        keys.append(term_surface)
    for key in keys:
        if key in table:
            best = _unique_best(table, key)
            if best is not None:
                return best, PHRASE_TABLE
            break

    parts = list(constituents) or [term_surface]
    if len(parts) == 1:
        # a single morpheme has no smaller constituents to compose from
        best = table.best(parts[0])
        if best is not None:
            return best[0], COMPOSITIONAL
        logger.warning(f"No phrase table entry for term {term_surface!r}; passed through untranslated")
        return parts[0], PASSTHROUGH

    words, covered = _compose(parts, table)
    if covered == 0:
        logger.warning(f"No phrase table entry for any constituent of {term_surface!r}; passed through")
        return " ".join(words), PASSTHROUGH
    return " ".join(words), COMPOSITIONAL


def translate_term(term_surface: str, constituents: Sequence[str], table: PhraseTable) -> str:
    return translate_term_with_method(term_surface, constituents, table)[0]


@dataclass(frozen=True)
class NBestEntry:
    sentence_index: int
    candidate_tokens: Tuple[str, ...]
    feature_scores: Tuple[float, ...]
    total_score: float
    feature_labels: Tuple[Optional[str], ...] = ()

    def features_text(self) -> str:
        parts = []
        labels = self.feature_labels or (None,) * len(self.feature_scores)
        for label, score in zip(labels, self.feature_scores):
            if label:
                parts.append(label)
            parts.append(repr(score))
        return " ".join(parts)

    def to_text(self) -> str:
        return FIELD_SEPARATOR.join(
            [str(self.sentence_index), " ".join(self.candidate_tokens), self.features_text(), repr(self.total_score)]
        )


def _parse_features(text: str, line_number: int) -> Tuple[Tuple[float, ...], Tuple[Optional[str], ...]]:
    scores: List[float] = []
    labels: List[Optional[str]] = []
    pending: Optional[str] = None
    for token in text.split():
        if token.endswith("="):
            pending = token
            continue
        try:
            scores.append(float(token))
        except ValueError:
            raise NBestFormatError(f"non-numeric feature score {token!r}", line_number)
        labels.append(pending)
        pending = None
    if not any(labels):
        labels = []
    return tuple(scores), tuple(labels)


def load_nbest(stream: Union[TextIO, Iterable[str]]) -> List[NBestEntry]:
    """
    Load an n-best list

    Args:
        stream: Lines of `idx ||| tokens ||| feature scores ||| total`

    Returns:
        Entries in file order

    Raises:
        NBestFormatError: Malformed line or sentence index going backwards
    """
    entries: List[NBestEntry] = []
    last_index = -1
    for line_number, raw in enumerate(stream, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            continue
        fields = [f.strip() for f in line.split("|||")]
        if len(fields) != 4:
            raise NBestFormatError(f"expected 4 `|||`-separated fields, got {len(fields)}", line_number)
        try:
            index = int(fields[0])
            total = float(fields[3])
        except ValueError:
            raise NBestFormatError("sentence index must be an integer and total score a number", line_number)
        if not math.isfinite(total):
            raise NBestFormatError(f"non-finite total score {fields[3]!r}", line_number)
        if index < last_index:
            raise NBestFormatError(f"sentence index {index} after {last_index}", line_number)
        last_index = index
        scores, labels = _parse_features(fields[2], line_number)
        entries.append(NBestEntry(index, tuple(fields[1].split()), scores, total, labels))
    logger.info(f"Loaded {len(entries)} n-best entries for {len({e.sentence_index for e in entries})} sentences")
    return entries


def write_nbest(entries: Iterable[NBestEntry]) -> str:
    return "".join(entry.to_text() + "\n" for entry in entries)


def group_nbest(entries: Sequence[NBestEntry]) -> List[Tuple[int, List[NBestEntry]]]:
    """Contiguous (sentence_index, candidates) groups"""
    return [(index, list(group)) for index, group in groupby(entries, key=lambda e: e.sentence_index)]
