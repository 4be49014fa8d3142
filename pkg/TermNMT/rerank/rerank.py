"""
N-best reranking with NMT rescoring

Each SMT candidate is tokenized with the technical term tokens of its source
sentence, scored by the NMT model, and the list is reordered by the average
of the SMT total score and the NMT log-probability.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from TermNMT.corpus.corpus import TaggedSentence
from TermNMT.corpus.vocabulary import EOS_ID, Vocabulary
from TermNMT.errors import ModelError
from TermNMT.logger.logging_config import get_logger
from TermNMT.nmt.model import NmtModel, encode_memory, step_logprobs
from TermNMT.smt.smt_bridge import NBestEntry, translate_term
from TermNMT.terms.term_align import PhraseTable
from TermNMT.terms.term_extract import ExtractConfig, extract_candidate_terms
from TermNMT.terms.token_sub import restore_tokens, tokenize_candidate, tokenize_source

logger = get_logger("TermNMT.Rerank")


@dataclass(frozen=True)
class RankedCandidate:
    entry: NBestEntry
    nmt_score: float
    combined: float
    rank: int
    smt_rank: int


def rescore_candidates(
    model: NmtModel, source_ids: Sequence[int], candidates_ids: Sequence[Sequence[int]]
) -> List[float]:
    """
    NMT log-probability of each candidate given the source

    The source is encoded once; the i-th score equals
    sentence_logprob(model, source_ids, candidates_ids[i]).

    Args:
        source_ids: Token-substituted, id-mapped source
        candidates_ids: Token-substituted, id-mapped candidates ending with EOS
    """
    if not candidates_ids:
        return []
    memory = encode_memory(model, source_ids)
    scores = []
    for candidate in candidates_ids:
        if len(candidate) == 0 or candidate[-1] != EOS_ID:
            raise ModelError("Candidate must end with EOS")
        scores.append(float(sum(step_logprobs(model, memory, candidate))))
    return scores


def length_normalize(entry: NBestEntry, nmt_score: float) -> Tuple[float, float]:
    """Per-token scores: SMT by candidate length, NMT by candidate length plus EOS"""
    n = len(entry.candidate_tokens)
    return entry.total_score / max(1, n), nmt_score / (n + 1)


def combine_and_rank(
    candidates: Sequence[NBestEntry], nmt_scores: Sequence[float], use_length_normalization: bool = False
) -> List[RankedCandidate]:
    """
    Rank candidates by the average of SMT and NMT scores

    Args:
        candidates: One sentence's n-best entries in SMT order
        nmt_scores: NMT log-probability per candidate
        use_length_normalization: Average per-token scores instead of raw totals

    Returns:
        Candidates by descending combined score; ties keep SMT order; ranks 1..n

    Raises:
        ValueError: Length mismatch
    """
    if len(candidates) != len(nmt_scores):
        raise ValueError(f"{len(candidates)} candidates but {len(nmt_scores)} NMT scores")
    scored = []
    for smt_rank, (entry, nmt_score) in enumerate(zip(candidates, nmt_scores), start=1):
        if use_length_normalization:
            smt, nmt = length_normalize(entry, nmt_score)
        else:
            smt, nmt = entry.total_score, nmt_score
        scored.append((-(smt + nmt) / 2.0, smt_rank, entry, nmt_score))
    scored.sort(key=lambda item: (item[0], item[1]))
    return [
        RankedCandidate(entry, nmt_score, -negated, rank, smt_rank)
        for rank, (negated, smt_rank, entry, nmt_score) in enumerate(scored, start=1)
    ]


@dataclass
class RerankResult:
    sentence_index: int
    ranked: List[RankedCandidate]
    final_sentence: str
    tokenized_candidates: List[List[str]] = field(default_factory=list)
    term_translations: Dict[int, str] = field(default_factory=dict)
    warnings: List[str] = field(default_factory=list)

    def records(self) -> List[str]:
        """`sentence_idx<TAB>rank<TAB>smt<TAB>nmt<TAB>combined<TAB>sentence` per candidate"""
        return [
            "\t".join(
                [
                    str(self.sentence_index),
                    str(c.rank),
                    repr(c.entry.total_score),
                    repr(c.nmt_score),
                    repr(c.combined),
                    " ".join(c.entry.candidate_tokens),
                ]
            )
            for c in self.ranked
        ]


def rerank_sentence(
    model: NmtModel,
    source_vocab: Vocabulary,
    target_vocab: Vocabulary,
    source: TaggedSentence,
    candidates: Sequence[NBestEntry],
    table: Optional[PhraseTable],
    extract_config: ExtractConfig = ExtractConfig(),
    use_terms: bool = True,
    use_length_normalization: bool = False,
) -> RerankResult:
    """
    Rerank one sentence's n-best list

    Terms of the source are replaced by TT_i, their phrase-table translations
    are replaced by the same TT_i inside every candidate, the tokenized
    candidates are rescored and the winner's tokens are restored.
    """
    if not candidates:
        raise ValueError("Empty n-best group")
    if use_terms and table is None:
        raise ValueError("A phrase table is required to translate terms")
    index = candidates[0].sentence_index
    if use_terms:
        terms = extract_candidate_terms(source, extract_config)
        source_tokens, term_list, token_warnings = tokenize_source(source, terms, source_vocab.num_placeholders)
        translations = {
            i: translate_term(term.surface, term.constituents, table) for i, term in enumerate(term_list, start=1)
        }
    else:
        source_tokens, translations, token_warnings = source.surfaces, {}, []
    tokenized = [
        tokenize_candidate(entry.candidate_tokens, translations) if translations else list(entry.candidate_tokens)
        for entry in candidates
    ]
    nmt_scores = rescore_candidates(
        model,
        source_vocab.encode(source_tokens),
        [target_vocab.encode(tokens, add_eos=True) for tokens in tokenized],
    )
    ranked = combine_and_rank(candidates, nmt_scores, use_length_normalization)
    winner = tokenized[ranked[0].smt_rank - 1]
    final_sentence, warnings = restore_tokens(winner, translations)
    if ranked[0].smt_rank != 1:
        logger.debug(f"Sentence {index}: SMT candidate {ranked[0].smt_rank} promoted to the top")
    return RerankResult(index, ranked, final_sentence, tokenized, translations, token_warnings + warnings)
