"""
Frequency-capped vocabularies with reserved special tokens

Reserved ids occupy the lowest range, in this order:
UNK, BOS, EOS, PAD, TT_1 .. TT_K
"""

import json
from collections import Counter
from typing import Dict, Iterable, List, Sequence, Union

from TermNMT.corpus.corpus import TaggedSentence
from TermNMT.errors import VocabularyError
from TermNMT.logger.logging_config import get_logger

UNK = "<unk>"
BOS = "<s>"
EOS = "</s>"
PAD = "<pad>"
SPECIAL_TOKENS = (UNK, BOS, EOS, PAD)

UNK_ID, BOS_ID, EOS_ID, PAD_ID = range(4)

DEFAULT_NUM_PLACEHOLDERS = 20

logger = get_logger("TermNMT.Vocabulary")


def placeholder(index: int) -> str:
    """Surface form of the index-th technical term token (1-based)"""
    return f"TT_{index}"


class Vocabulary:
    """Bijective token <-> id mapping"""

    def __init__(self, tokens: Sequence[str], num_placeholders: int):
        self.id_to_token: List[str] = list(tokens)
        self.token_to_id: Dict[str, int] = {t: i for i, t in enumerate(self.id_to_token)}
        if len(self.token_to_id) != len(self.id_to_token):
            raise VocabularyError("Vocabulary contains duplicate tokens")
        self.num_placeholders = num_placeholders
        reserved = reserved_tokens(num_placeholders)
        if self.id_to_token[: len(reserved)] != reserved:
            raise VocabularyError("Vocabulary does not start with the reserved tokens")

    def __len__(self) -> int:
        return len(self.id_to_token)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_id

    @property
    def num_reserved(self) -> int:
        return len(SPECIAL_TOKENS) + self.num_placeholders

    def lookup(self, token: str) -> int:
        return self.token_to_id.get(token, UNK_ID)

    def encode(self, tokens: Iterable[str], add_eos: bool = False) -> List[int]:
        """Map tokens to ids, unknown tokens to UNK"""
        ids = [self.lookup(t) for t in tokens]
        if add_eos:
            ids.append(EOS_ID)
        return ids

    def decode(self, ids: Iterable[int]) -> List[str]:
        """Map ids back to tokens, stopping at EOS"""
        tokens = []
        for i in ids:
            if i == EOS_ID:
                break
            tokens.append(self.id_to_token[i])
        return tokens

    def to_dict(self) -> dict:
        return {"num_placeholders": self.num_placeholders, "tokens": self.id_to_token}

    @classmethod
    def from_dict(cls, data: dict) -> "Vocabulary":
        return cls(data["tokens"], int(data["num_placeholders"]))

    def save(self, path: str):
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, ensure_ascii=False, indent=1)

    @classmethod
    def load(cls, path: str) -> "Vocabulary":
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_dict(json.load(f))


def reserved_tokens(num_placeholders: int) -> List[str]:
    return list(SPECIAL_TOKENS) + [placeholder(i) for i in range(1, num_placeholders + 1)]


def build_vocabulary(
    sentences: Iterable[Union[TaggedSentence, Sequence[str]]],
    cap: int,
    num_placeholders: int = DEFAULT_NUM_PLACEHOLDERS,
) -> Vocabulary:
    """
    Build a vocabulary of the most frequent tokens

    Args:
        sentences: Tagged sentences or token lists
        cap: Maximum vocabulary size, reserved tokens included
        num_placeholders: Number K of TT_i tokens to reserve

    Returns:
        Vocabulary ranked by descending frequency, ties broken lexicographically

    Raises:
        VocabularyError: If cap does not leave room for one regular token
    """
    reserved = reserved_tokens(num_placeholders)
    if cap <= len(reserved):
        raise VocabularyError(f"Vocabulary cap {cap} must exceed the {len(reserved)} reserved tokens")

    counts = Counter()
    for sentence in sentences:
        tokens = sentence.surfaces if isinstance(sentence, TaggedSentence) else sentence
        counts.update(tokens)
    for token in reserved:
        counts.pop(token, None)

    ranked = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    kept = [token for token, _ in ranked[: cap - len(reserved)]]
    if len(kept) < len(ranked):
        logger.info(f"Vocabulary capped at {cap}: {len(ranked) - len(kept)} of {len(ranked)} types excluded")
    return Vocabulary(reserved + kept, num_placeholders)
