"""
Tagged parallel corpus for TermNMT
Reads and writes the `surface/POS` tab-separated corpus format

One pair per line:

    SRC<TAB>TGT[<TAB>ALIGN]

where SRC and TGT are single-space separated `surface/POS` tokens and ALIGN
is a Pharaoh alignment (`i-j` pairs separated by spaces).
"""

import random
import re
from dataclasses import dataclass
from typing import FrozenSet, Iterable, List, Optional, Sequence, TextIO, Tuple, Union

from TermNMT.errors import CorpusFormatError
from TermNMT.logger.logging_config import get_logger

logger = get_logger("TermNMT.Corpus")

DEFAULT_MAX_SENTENCE_LEN = 40

_PLACEHOLDER_RE = re.compile(r"^TT_\d+$")


@dataclass(frozen=True)
class Morpheme:
    """One segmented unit with its part-of-speech tag"""

    surface: str
    pos: str

    def __post_init__(self):
        if not self.surface or any(ch.isspace() for ch in self.surface):
            raise ValueError(f"Invalid morpheme surface: {self.surface!r}")
        if not self.pos:
            raise ValueError(f"Morpheme {self.surface!r} has an empty POS tag")

    def to_text(self) -> str:
        return f"{self.surface}/{self.pos}"


@dataclass(frozen=True)
class TaggedSentence:
    morphemes: Tuple[Morpheme, ...]

    def __len__(self) -> int:
        return len(self.morphemes)

    @property
    def surfaces(self) -> List[str]:
        return [m.surface for m in self.morphemes]

    @property
    def tags(self) -> List[str]:
        return [m.pos for m in self.morphemes]

    def surface_text(self) -> str:
        return " ".join(self.surfaces)

    def to_text(self) -> str:
        return " ".join(m.to_text() for m in self.morphemes)

    @classmethod
    def from_pairs(cls, pairs: Iterable[Tuple[str, str]]) -> "TaggedSentence":
        """Build a sentence from (surface, pos) tuples"""
        return cls(tuple(Morpheme(surface, pos) for surface, pos in pairs))


@dataclass(frozen=True)
class ParallelPair:
    source: TaggedSentence
    target: TaggedSentence
    word_alignment: Optional[FrozenSet[Tuple[int, int]]] = None

    def __post_init__(self):
        if self.word_alignment is None:
            return
        for i, j in self.word_alignment:
            if not (0 <= i < len(self.source)) or not (0 <= j < len(self.target)):
                raise ValueError(
                    f"Alignment link {i}-{j} out of range for sentence lengths "
                    f"{len(self.source)}/{len(self.target)}"
                )

    def to_text(self) -> str:
        fields = [self.source.to_text(), self.target.to_text()]
        if self.word_alignment is not None:
            fields.append(format_alignment(self.word_alignment))
        return "\t".join(fields)


def format_alignment(links: Iterable[Tuple[int, int]]) -> str:
    return " ".join(f"{i}-{j}" for i, j in sorted(links))


def _parse_sentence(field: str, line_number: int, side: str) -> TaggedSentence:
    if not field:
        raise CorpusFormatError(f"empty {side} sentence", line_number)
    morphemes = []
    for token in field.split(" "):
        surface, sep, pos = token.rpartition("/")
        if not sep or not surface or not pos:
            raise CorpusFormatError(f"malformed {side} token {token!r} (expected surface/POS)", line_number)
        if _PLACEHOLDER_RE.match(surface):
            raise CorpusFormatError(f"{side} token {surface!r} collides with the placeholder format", line_number)
        try:
            morphemes.append(Morpheme(surface, pos))
        except ValueError as e:
            raise CorpusFormatError(str(e), line_number) from e
    return TaggedSentence(tuple(morphemes))


def _parse_alignment(field: str, source_len: int, target_len: int, line_number: int) -> FrozenSet[Tuple[int, int]]:
    links = set()
    for item in field.split():
        i_text, sep, j_text = item.partition("-")
        if not sep or not i_text.isdigit() or not j_text.isdigit():
            raise CorpusFormatError(f"malformed alignment link {item!r}", line_number)
        i, j = int(i_text), int(j_text)
        if i >= source_len or j >= target_len:
            raise CorpusFormatError(
                f"alignment link {item} out of range (source {source_len}, target {target_len})", line_number
            )
        links.add((i, j))
    return frozenset(links)


def parse_corpus_line(line: str, line_number: int) -> ParallelPair:
    """Parse one corpus record (without its trailing newline)"""
    fields = line.split("\t")
    if len(fields) not in (2, 3):
        raise CorpusFormatError(f"expected 2 or 3 tab-separated fields, got {len(fields)}", line_number)
    source = _parse_sentence(fields[0], line_number, "source")
    target = _parse_sentence(fields[1], line_number, "target")
    alignment = None
    if len(fields) == 3:
        alignment = _parse_alignment(fields[2], len(source), len(target), line_number)
    return ParallelPair(source, target, alignment)


def load_tagged_corpus(stream: Union[TextIO, Iterable[str]]) -> List[ParallelPair]:
    """
    Load a tagged parallel corpus

    Args:
        stream: Text stream or iterable of lines in the corpus format

    Returns:
        Parallel pairs in file order

    Raises:
        CorpusFormatError: On the first malformed line (carries the line number)
    """
    pairs = []
    aligned = 0
    for line_number, raw in enumerate(stream, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            continue
        pair = parse_corpus_line(line, line_number)
        if pair.word_alignment is not None:
            aligned += 1
        pairs.append(pair)
    logger.info(f"Loaded {len(pairs)} parallel pairs ({aligned} with word alignment)")
    return pairs


def load_tagged_sentences(stream: Union[TextIO, Iterable[str]]) -> List[TaggedSentence]:
    """
    Load monolingual tagged sentences, one `surface/POS ...` sentence per line

    Blank lines are not skipped: they are reported as errors so that output
    lines stay aligned with input lines.
    """
    sentences = []
    for line_number, raw in enumerate(stream, start=1):
        sentences.append(_parse_sentence(raw.rstrip("\r\n").strip(), line_number, "source"))
    logger.info(f"Loaded {len(sentences)} tagged sentences")
    return sentences


def serialize_corpus(pairs: Iterable[ParallelPair]) -> str:
    """Inverse of load_tagged_corpus: one record per line, newline terminated"""
    return "".join(pair.to_text() + "\n" for pair in pairs)


def filter_by_length(pairs: Sequence[ParallelPair], max_len: int = DEFAULT_MAX_SENTENCE_LEN):
    """
    Keep pairs whose sides are both non-empty and at most `max_len` units long

    Returns:
        Tuple of (kept pairs, number dropped)
    """
    kept = [p for p in pairs if 1 <= len(p.source) <= max_len and 1 <= len(p.target) <= max_len]
    dropped = len(pairs) - len(kept)
    if dropped:
        logger.info(f"Dropped {dropped} of {len(pairs)} pairs longer than {max_len} units")
    return kept, dropped


def split_corpus(pairs: Sequence[ParallelPair], dev_size: int, test_size: int, seed: int):
    """
    Draw random development and test sets; the rest is training data

    Returns:
        Tuple of (train, dev, test), each keeping the original corpus order
    """
    if dev_size < 0 or test_size < 0 or dev_size + test_size > len(pairs):
        raise ValueError(f"Cannot split {len(pairs)} pairs into dev={dev_size}, test={test_size}")
    order = list(range(len(pairs)))
    random.Random(seed).shuffle(order)
    dev_ids = set(order[:dev_size])
    test_ids = set(order[dev_size : dev_size + test_size])
    train = [p for i, p in enumerate(pairs) if i not in dev_ids and i not in test_ids]
    dev = [p for i, p in enumerate(pairs) if i in dev_ids]
    test = [p for i, p in enumerate(pairs) if i in test_ids]
    return train, dev, test


def warn_if_long(sentence: TaggedSentence, max_len: int = DEFAULT_MAX_SENTENCE_LEN) -> bool:
    """Decode-time check: long sentences are accepted but logged"""
    if len(sentence) > max_len:
        logger.warning(f"Sentence of {len(sentence)} units exceeds the training maximum of {max_len}")
        return True
    return False
