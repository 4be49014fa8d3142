"""
Test script for n-best reranking
"""

import math

import numpy as np
import pytest

from TermNMT.corpus.corpus import TaggedSentence
from TermNMT.corpus.vocabulary import EOS_ID, build_vocabulary
from TermNMT.errors import ModelError
from TermNMT.nmt.config import NmtConfig
from TermNMT.nmt.model import init_model, sentence_logprob
from TermNMT.ops.translate_op import translate_sentence
from TermNMT.rerank.rerank import combine_and_rank, length_normalize, rerank_sentence, rescore_candidates
from TermNMT.smt.smt_bridge import NBestEntry
from TermNMT.terms.term_align import PhraseTable


def entry(tokens, total, index=0):
    return NBestEntry(index, tuple(tokens.split()), (), float(total))


def small_model(source_size, target_size, seed=0):
    config = NmtConfig(
        source_vocab_size=source_size,
        target_vocab_size=target_size,
        layers=1,
        hidden_size=6,
        embed_size=4,
        attention_size=4,
        init_range=0.3,
    )
    return init_model(config, seed)


def test_nmt_score_can_overturn_smt_order():
    a, b = entry("a", -1.0), entry("b", -2.0)
    ranked = combine_and_rank([a, b], [-9.0, -2.0])
    assert [r.entry for r in ranked] == [b, a]
    assert [r.rank for r in ranked] == [1, 2]
    assert ranked[0].smt_rank == 2
    assert ranked[0].combined == pytest.approx(-2.0)
    assert ranked[1].combined == pytest.approx(-5.0)


def test_equal_nmt_scores_keep_smt_order():
    candidates = [entry("a", -1.0), entry("b", -2.0), entry("c", -2.0), entry("d", -7.5)]
    ranked = combine_and_rank(candidates, [-3.0] * 4)
    assert [r.smt_rank for r in ranked] == [1, 2, 3, 4]


def test_single_candidate_and_mismatch():
    only = entry("a", -1.0)
    ranked = combine_and_rank([only], [-4.0])
    assert len(ranked) == 1
    assert ranked[0].rank == 1
    with pytest.raises(ValueError):
        combine_and_rank([only], [-4.0, -1.0])


def test_ranking_is_invariant_to_shifting_nmt_scores():
    rng = np.random.default_rng(3)
    for _ in range(100):
        n = int(rng.integers(1, 8))
        totals = sorted((float(v) for v in rng.integers(-20, 0, size=n)), reverse=True)
        candidates = [entry(f"w{i}", t) for i, t in enumerate(totals)]
        nmt = [float(v) for v in rng.integers(-30, 0, size=n)]
        shift = float(rng.integers(-50, 50))
        base = [r.smt_rank for r in combine_and_rank(candidates, nmt)]
        shifted = [r.smt_rank for r in combine_and_rank(candidates, [s + shift for s in nmt])]
        assert base == shifted


def test_length_normalization():
    long, short = entry("a b c", -3.0), entry("a", -2.0)
    assert length_normalize(long, -8.0) == (-1.0, -2.0)
    # raw totals favour the short candidate, per-token scores the long one
    assert combine_and_rank([long, short], [-8.0, -4.0])[0].entry == short
    assert combine_and_rank([long, short], [-8.0, -4.0], use_length_normalization=True)[0].entry == long


def test_rescore_matches_sentence_logprob():
    model = small_model(7, 6)
    source = [4, 5, 6]
    candidates = [[EOS_ID], [4, EOS_ID], [5, 5, 4, EOS_ID]]
    scores = rescore_candidates(model, source, candidates)
    for candidate, score in zip(candidates, scores):
        assert math.isclose(score, sentence_logprob(model, source, candidate), rel_tol=1e-12)
    assert rescore_candidates(model, source, []) == []
    with pytest.raises(ModelError):
        rescore_candidates(model, source, [[4]])


def test_rerank_sentence_substitutes_term_translations():
    source = TaggedSentence.from_pairs([("x", "noun"), ("y", "noun"), ("wa", "particle"), ("z", "verb")])
    table = PhraseTable({"x y": {"XY": 0.9}})
    source_vocab = build_vocabulary([["TT_1", "wa", "z"]], cap=100, num_placeholders=2)
    target_vocab = build_vocabulary([["is", "z"]], cap=100, num_placeholders=2)
    model = small_model(len(source_vocab), len(target_vocab))
    candidates = [entry("XY is z", -1.0, 4), entry("z XY", -1.5, 4), entry("z is", -6.0, 4)]

    result = rerank_sentence(model, source_vocab, target_vocab, source, candidates, table)
    assert result.sentence_index == 4
    assert result.term_translations == {1: "XY"}
    assert result.tokenized_candidates == [["TT_1", "is", "z"], ["z", "TT_1"], ["z", "is"]]
    assert [r.rank for r in result.ranked] == [1, 2, 3]
    winner = result.ranked[0].entry
    assert result.final_sentence == " ".join(winner.candidate_tokens)
    assert len(result.records()) == 3
    assert result.records()[0].split("\t")[:2] == ["4", "1"]

    baseline = rerank_sentence(model, source_vocab, target_vocab, source, candidates, table, use_terms=False)
    assert baseline.term_translations == {}
    assert baseline.tokenized_candidates == [list(c.candidate_tokens) for c in candidates]

    with pytest.raises(ValueError):
        rerank_sentence(model, source_vocab, target_vocab, source, [], table)
    with pytest.raises(ValueError, match="phrase table"):
        rerank_sentence(model, source_vocab, target_vocab, source, candidates, None)
    assert rerank_sentence(model, source_vocab, target_vocab, source, candidates, None, use_terms=False).ranked
    with pytest.raises(ValueError, match="phrase table"):
        translate_sentence(model, source_vocab, target_vocab, source, None)
    assert translate_sentence(model, source_vocab, target_vocab, source, None, use_terms=False, max_len=3).terms == []
