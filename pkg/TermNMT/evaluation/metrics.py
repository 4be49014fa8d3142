"""
Evaluation metrics for TermNMT
Corpus BLEU, RIBES and the pairwise human-judgment score
"""

import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Sequence, Tuple

from sacrebleu.metrics import BLEU
from scipy.stats import kendalltau

from TermNMT.errors import EvaluationError
from TermNMT.logger.logging_config import get_logger

logger = get_logger("TermNMT.Metrics")

Tokens = Sequence[str]

SMOOTH_METHODS = ("none", "floor")
FLOOR_VALUE = 0.1
RIBES_ALPHA = 0.25
RIBES_BETA = 0.10


def _check_corpus(hypotheses: Sequence[Tokens], references: Sequence[Tokens]):
    if len(hypotheses) != len(references):
        raise EvaluationError(f"{len(hypotheses)} hypotheses but {len(references)} references")
    if not hypotheses:
        raise EvaluationError("Cannot score an empty corpus")


@dataclass(frozen=True)
class NgramStatistics:
    """Clipped n-gram matches and totals per order, plus lengths"""

    counts: Tuple[int, ...]
    totals: Tuple[int, ...]
    hyp_len: int
    ref_len: int

    @property
    def brevity_penalty(self) -> float:
        if self.hyp_len == 0:
            return 0.0
        if self.hyp_len >= self.ref_len:
            return 1.0
        return math.exp(1.0 - self.ref_len / self.hyp_len)


def ngram_statistics(hypotheses: Sequence[Tokens], references: Sequence[Tokens], max_n: int = 4) -> NgramStatistics:
    """Sufficient statistics of corpus BLEU, counted by sacrebleu on pre-tokenized text"""
    scorer = BLEU(tokenize="none", smooth_method="none", max_ngram_order=max_n, effective_order=False)
    result = scorer.corpus_score([" ".join(h) for h in hypotheses], [[" ".join(r) for r in references]])
    return NgramStatistics(tuple(result.counts), tuple(result.totals), int(result.sys_len), int(result.ref_len))


def bleu_from_statistics(stats: NgramStatistics, smooth: str = "none") -> float:
    """100 * geometric mean of n-gram precisions * brevity penalty"""
    if smooth not in SMOOTH_METHODS:
        raise EvaluationError(f"Unknown BLEU smoothing {smooth!r}; expected one of {SMOOTH_METHODS}")
    if stats.hyp_len == 0:
        return 0.0
    log_precisions = []
    for count, total in zip(stats.counts, stats.totals):
        if total == 0:
            return 0.0
        if count == 0:
            if smooth == "none":
                return 0.0
            count = FLOOR_VALUE
        log_precisions.append(math.log(count / total))
    return 100.0 * math.exp(sum(log_precisions) / len(log_precisions)) * stats.brevity_penalty


def bleu(hypotheses: Sequence[Tokens], references: Sequence[Tokens], max_n: int = 4, smooth: str = "none") -> float:
    """
    Corpus-level BLEU on the 0-100 scale

    Args:
        hypotheses: Tokenized system outputs
        references: Tokenized references, one per hypothesis
        max_n: Highest n-gram order
        smooth: "none" (any zero match count gives 0) or "floor"

    Raises:
        EvaluationError: Length mismatch or empty corpus
    """
    _check_corpus(hypotheses, references)
    return bleu_from_statistics(ngram_statistics(hypotheses, references, max_n), smooth)


def _ngram_count(words: Tokens, ngram: Tokens) -> int:
    n = len(ngram)
    return sum(1 for i in range(len(words) - n + 1) if tuple(words[i : i + n]) == tuple(ngram))


def _ngram_index(words: Tokens, ngram: Tokens) -> int:
    n = len(ngram)
    for i in range(len(words) - n + 1):
        if tuple(words[i : i + n]) == tuple(ngram):
            return i
    return -1


def ribes_alignment(hypothesis: Tokens, reference: Tokens) -> List[int]:
    """
    Reference positions of aligned hypothesis words, in hypothesis order

    A word is aligned when it occurs exactly once in both sentences, or when
    a context n-gram (right context first, then left) grown around it does.
    Each reference position is used at most once.
    """
    positions: List[int] = []
    used = set()
    ref_counts = Counter(reference)
    hyp_counts = Counter(hypothesis)
    for i, word in enumerate(hypothesis):
        if word not in ref_counts:
            continue
        position = -1
        if hyp_counts[word] == 1 and ref_counts[word] == 1:
            position = reference.index(word)
        else:
            for window in range(1, len(hypothesis)):
                if i + window < len(hypothesis):
                    ngram = hypothesis[i : i + window + 1]
                    if _ngram_count(hypothesis, ngram) == 1 and _ngram_count(reference, ngram) == 1:
                        position = _ngram_index(reference, ngram)
                        break
                if window <= i:
                    ngram = hypothesis[i - window : i + 1]
                    if _ngram_count(hypothesis, ngram) == 1 and _ngram_count(reference, ngram) == 1:
                        position = _ngram_index(reference, ngram) + window
                        break
                if i + window >= len(hypothesis) and window > i:
                    break
        if position >= 0 and position not in used:
            used.add(position)
            positions.append(position)
    return positions


def normalized_kendall_tau(positions: Sequence[int]) -> float:
    """(tau + 1) / 2 of the aligned positions against hypothesis order"""
    tau, _ = kendalltau(list(range(len(positions))), list(positions))
    return (float(tau) + 1.0) / 2.0


def ribes_sentence(
    hypothesis: Tokens, reference: Tokens, alpha: float = RIBES_ALPHA, beta: float = RIBES_BETA
) -> float:
    """Sentence RIBES on the 0-1 scale"""
    if not hypothesis or not reference:
        return 0.0
    positions = ribes_alignment(hypothesis, reference)
    if len(positions) < 2:
        if len(positions) == 1 and len(hypothesis) == 1 and len(reference) == 1:
            return 1.0
        return 0.0
    nkt = normalized_kendall_tau(positions)
    precision = len(positions) / len(hypothesis)
    brevity = min(1.0, math.exp(1.0 - len(reference) / len(hypothesis)))
    return nkt * precision**alpha * brevity**beta


def ribes(
    hypotheses: Sequence[Tokens], references: Sequence[Tokens], alpha: float = RIBES_ALPHA, beta: float = RIBES_BETA
) -> float:
    """
    Corpus RIBES on the 0-100 scale: mean of sentence scores

    Raises:
        EvaluationError: Length mismatch or empty corpus
    """
    _check_corpus(hypotheses, references)
    scores = [ribes_sentence(h, r, alpha, beta) for h, r in zip(hypotheses, references)]
    return 100.0 * sum(scores) / len(scores)


def pairwise_score(wins: int, losses: int, ties: int) -> float:
    """
    100 * (W - L) / (W + L + T), ranging from -100 to 100

    Raises:
        EvaluationError: Negative counts or all counts zero
    """
    if min(wins, losses, ties) < 0:
        raise EvaluationError(f"Judgment counts must be non-negative, got W={wins} L={losses} T={ties}")
    total = wins + losses + ties
    if total == 0:
        raise EvaluationError("Pairwise score needs at least one judgment")
    return 100.0 * (wins - losses) / total


def count_unknown_tokens(sentences: Sequence[Tokens], unk_symbol: str = "<unk>") -> int:
    return sum(sum(1 for token in sentence if token == unk_symbol) for sentence in sentences)


@dataclass
class EvalReport:
    bleu: float
    ribes: float
    num_sentences: int
    ngram_counts: List[int] = field(default_factory=list)
    ngram_totals: List[int] = field(default_factory=list)
    hyp_len: int = 0
    ref_len: int = 0
    brevity_penalty: float = 0.0
    sentence_ribes: List[float] = field(default_factory=list)
    hyp_lengths: List[int] = field(default_factory=list)
    ref_lengths: List[int] = field(default_factory=list)

    def __post_init__(self):
        for name in ("bleu", "ribes"):
            value = getattr(self, name)
            if not 0.0 <= value <= 100.0 + 1e-9:
                raise EvaluationError(f"{name} score {value} outside [0, 100]")

    def to_dict(self) -> Dict:
        return asdict(self)

    def summary(self) -> str:
        return (
            f"BLEU = {self.bleu:.2f}  RIBES = {self.ribes:.2f}  "
            f"({self.num_sentences} sentences, BP {self.brevity_penalty:.4f})"
        )


def evaluate_corpus(
    hypotheses: Sequence[Tokens],
    references: Sequence[Tokens],
    max_n: int = 4,
    smooth: str = "none",
    alpha: float = RIBES_ALPHA,
    beta: float = RIBES_BETA,
) -> EvalReport:
    """BLEU and RIBES with per-sentence diagnostics"""
    _check_corpus(hypotheses, references)
    stats = ngram_statistics(hypotheses, references, max_n)
    sentence_ribes = [ribes_sentence(h, r, alpha, beta) for h, r in zip(hypotheses, references)]
    report = EvalReport(
        bleu=bleu_from_statistics(stats, smooth),
        ribes=100.0 * sum(sentence_ribes) / len(sentence_ribes),
        num_sentences=len(hypotheses),
        ngram_counts=list(stats.counts),
        ngram_totals=list(stats.totals),
        hyp_len=stats.hyp_len,
        ref_len=stats.ref_len,
        brevity_penalty=stats.brevity_penalty,
        sentence_ribes=sentence_ribes,
        hyp_lengths=[len(h) for h in hypotheses],
        ref_lengths=[len(r) for r in references],
    )
    logger.info(f"Evaluated corpus: {report.summary()}")
    return report
