"""
Technical term token substitution

Terms are replaced by placeholder tokens TT_1, TT_2, ... numbered by the
position of their first source occurrence. The same symbols are used for
every sentence, so the NMT model learns them as ordinary vocabulary items.
"""

import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

from TermNMT.corpus.corpus import ParallelPair, TaggedSentence
from TermNMT.corpus.vocabulary import DEFAULT_NUM_PLACEHOLDERS, placeholder
from TermNMT.logger.logging_config import get_logger
from TermNMT.terms.term_align import TermPair
from TermNMT.terms.term_extract import TermSpan

logger = get_logger("TermNMT.TokenSub")

_PLACEHOLDER_RE = re.compile(r"^TT_(\d+)$")


def is_placeholder(token: str) -> bool:
    return _PLACEHOLDER_RE.match(token) is not None


def placeholder_index(token: str) -> Optional[int]:
    match = _PLACEHOLDER_RE.match(token)
    return int(match.group(1)) if match else None


@dataclass
class TokenizedPair:
    source_tokens: List[str]
    target_tokens: Optional[List[str]]
    term_map: Dict[int, Union[TermPair, TermSpan]] = field(default_factory=dict)
    warnings: List[str] = field(default_factory=list)


def _replace_all(
    tokens: Sequence[str],
    phrases: Sequence[Tuple[int, Tuple[str, ...]]],
    anchors: Sequence[Tuple[int, int, int]] = (),
) -> List[str]:
    """
    Replace every non-overlapping occurrence of each phrase by its placeholder

    Anchors (index, start, end) are claimed first; phrases are then tried in
    the given order and positions already claimed are never rewritten.
    """
    claimed: List[Optional[int]] = [None] * len(tokens)
    starts: Dict[int, Tuple[int, int]] = {}
    for index, start, end in anchors:
        if all(claimed[k] is None for k in range(start, end)):
            for k in range(start, end):
                claimed[k] = index
            starts[start] = (index, end - start)
    for index, words in phrases:
        n = len(words)
        if n == 0:
            continue
        i = 0
        while i <= len(tokens) - n:
            if all(claimed[k] is None for k in range(i, i + n)) and tuple(tokens[i : i + n]) == tuple(words):
                for k in range(i, i + n):
                    claimed[k] = index
                starts[i] = (index, n)
                i += n
            else:
                i += 1
    out = []
    i = 0
    while i < len(tokens):
        if i in starts:
            index, n = starts[i]
            out.append(placeholder(index))
            i += n
        else:
            out.append(tokens[i])
            i += 1
    return out


def _limit(items: list, max_placeholders: int, what: str, warnings: List[str]) -> list:
    if len(items) > max_placeholders:
        message = f"{len(items)} {what} exceed the {max_placeholders} placeholder tokens; the excess stays untokenized"
        logger.warning(message)
        warnings.append(message)
        return items[:max_placeholders]
    return items


def tokenize_training_pair(
    pair: ParallelPair, term_pairs: Sequence[TermPair], max_placeholders: int = DEFAULT_NUM_PLACEHOLDERS
) -> TokenizedPair:
    """
    Replace identified term pairs by TT_i on both sides of a training pair

    Args:
        pair: Parallel sentence pair
        term_pairs: Term pairs, disjoint on both sides
        max_placeholders: Number K of available TT_i tokens

    Returns:
        TokenizedPair with term_map {i: TermPair}
    """
    warnings: List[str] = []
    ordered = sorted(term_pairs, key=lambda tp: tp.source_span.start)
    ordered = _limit(ordered, max_placeholders, "term pairs", warnings)
    numbered = list(enumerate(ordered, start=1))
    longest_first = sorted(numbered, key=lambda item: (-len(item[1].source_constituents), item[0]))
    source_tokens = _replace_all(
        pair.source.surfaces,
        [(i, tp.source_constituents) for i, tp in longest_first],
        [(i, tp.source_span.start, tp.source_span.end) for i, tp in numbered],
    )
    longest_first = sorted(numbered, key=lambda item: (-len(item[1].target_tokens), item[0]))
    target_tokens = _replace_all(
        pair.target.surfaces,
        [(i, tp.target_tokens) for i, tp in longest_first],
        [(i, tp.target_span.start, tp.target_span.end) for i, tp in numbered],
    )
    return TokenizedPair(source_tokens, target_tokens, dict(numbered), warnings)


def tokenize_source(
    sentence: TaggedSentence, terms: Sequence[TermSpan], max_placeholders: int = DEFAULT_NUM_PLACEHOLDERS
) -> Tuple[List[str], List[TermSpan], List[str]]:
    """
    Replace extracted terms of a source sentence by TT_i

    Repeated occurrences of one term share its index.

    Returns:
        Tuple of (tokens, term list, warnings) where term list[i - 1] is the term behind TT_i
    """
    warnings: List[str] = []
    unique: List[TermSpan] = []
    index_of: Dict[Tuple[str, ...], int] = {}
    for term in sorted(terms, key=lambda t: t.start):
        if term.constituents not in index_of:
            index_of[term.constituents] = len(unique) + 1
            unique.append(term)
    unique = _limit(unique, max_placeholders, "terms", warnings)
    anchors = [
        (index_of[t.constituents], t.start, t.end) for t in terms if index_of[t.constituents] <= len(unique)
    ]
    tokens = _replace_all(sentence.surfaces, [], anchors)
    return tokens, unique, warnings


def restore_tokens(translation_tokens: Sequence[str], translations: Dict[int, str]) -> Tuple[str, List[str]]:
    """
    Replace TT_i tokens of a translation by term translations

    Args:
        translation_tokens: Decoded target tokens
        translations: Term index -> translation (may be several space-separated words)

    Returns:
        Tuple of (final sentence, warnings). Unmapped TT_i tokens are dropped.
    """
    words: List[str] = []
    warnings: List[str] = []
    for token in translation_tokens:
        index = placeholder_index(token)
        if index is None:
            words.append(token)
        elif index in translations:
            words.extend(translations[index].split())
        else:
            message = f"No translation for {token}; token removed"
            logger.warning(message)
            warnings.append(message)
    return " ".join(words), warnings


def tokenize_candidate(candidate_tokens: Sequence[str], source_terms: Dict[int, str]) -> List[str]:
    """
    Replace term translations in an n-best candidate by the source term's TT_i

    Matching is longest translation first, left to right, non-overlapping.
    """
    phrases = [(i, tuple(text.split())) for i, text in source_terms.items() if text.split()]
    phrases.sort(key=lambda item: (-len(item[1]), -len(" ".join(item[1])), item[0]))
    tokens = _replace_all(candidate_tokens, phrases)
    counts: Dict[int, int] = {}
    for token in tokens:
        index = placeholder_index(token)
        if index is not None:
            counts[index] = counts.get(index, 0) + 1
    for index, count in counts.items():
        if count > 1:
            logger.debug(f"Candidate contains the translation of term {index} {count} times; all replaced")
    return tokens
