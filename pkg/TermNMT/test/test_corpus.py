"""
Test script for corpus loading, vocabulary building and synthetic corpora
"""

import io

import pytest

from TermNMT.corpus.corpus import (
    Morpheme,
    ParallelPair,
    TaggedSentence,
    filter_by_length,
    load_tagged_corpus,
    load_tagged_sentences,
    serialize_corpus,
    split_corpus,
    warn_if_long,
)
from TermNMT.corpus.synthetic import SyntheticGrammar, generate_synthetic_corpus, make_nbest_fixture
from TermNMT.corpus.vocabulary import (
    BOS_ID,
    EOS_ID,
    PAD_ID,
    UNK_ID,
    Vocabulary,
    build_vocabulary,
    placeholder,
)
from TermNMT.errors import CorpusFormatError, VocabularyError
from TermNMT.smt.smt_bridge import group_nbest


def sentence(*tokens):
    return TaggedSentence.from_pairs(t.split("/") for t in tokens)


def test_load_corpus_line_with_alignment():
    """A three-field record keeps both sides and its Pharaoh links"""
    pairs = load_tagged_corpus(["a/noun b/noun c/particle\tx/noun y/particle\t0-0 1-0 2-1\n"])
    assert len(pairs) == 1
    pair = pairs[0]
    assert pair.source.surfaces == ["a", "b", "c"]
    assert pair.source.tags == ["noun", "noun", "particle"]
    assert pair.target.surfaces == ["x", "y"]
    assert pair.word_alignment == frozenset({(0, 0), (1, 0), (2, 1)})


def test_load_corpus_without_alignment_and_blank_lines():
    pairs = load_tagged_corpus(io.StringIO("a/noun\tx/noun\n\nb/verb\ty/verb\n"))
    assert [p.source.surfaces for p in pairs] == [["a"], ["b"]]
    assert all(p.word_alignment is None for p in pairs)


def test_empty_stream_gives_empty_corpus():
    assert load_tagged_corpus(io.StringIO("")) == []


@pytest.mark.parametrize(
    "line",
    [
        "a/noun",  # one field
        "a/noun\tx/noun\t0-0\textra",
        "anoun\tx/noun",  # no POS separator
        "a/\tx/noun",
        "a/noun\tx/noun\t0-5",  # link out of range
        "a/noun\tx/noun\t0_0",
        "TT_3/noun\tx/noun",  # collides with placeholder tokens
    ],
)
def test_malformed_line_reports_line_number(line):
    with pytest.raises(CorpusFormatError) as info:
        load_tagged_corpus(["a/noun\tx/noun\n", line + "\n"])
    assert info.value.line_number == 2
    assert "line 2" in str(info.value)


def test_surface_may_contain_slash():
    pairs = load_tagged_corpus(["km/h/symbol\tkm/h/symbol\n"])
    assert pairs[0].source.morphemes[0] == Morpheme("km/h", "symbol")


def test_serialize_round_trip_is_byte_identical():
    pairs, _, _ = generate_synthetic_corpus(3, 50)
    text = serialize_corpus(pairs)
    assert serialize_corpus(load_tagged_corpus(io.StringIO(text))) == text


def test_load_tagged_sentences_rejects_blank_line():
    sentences = load_tagged_sentences(["a/noun b/particle\n", "c/verb\n"])
    assert [s.surfaces for s in sentences] == [["a", "b"], ["c"]]
    with pytest.raises(CorpusFormatError) as info:
        load_tagged_sentences(["a/noun\n", "\n"])
    assert info.value.line_number == 2


def test_filter_by_length():
    short = ParallelPair(sentence("a/noun"), sentence("x/noun"))
    long = ParallelPair(sentence(*["a/noun"] * 5), sentence("x/noun"))
    kept, dropped = filter_by_length([short, long, short], max_len=4)
    assert kept == [short, short]
    assert dropped == 1


def test_split_corpus_is_deterministic_and_disjoint():
    pairs, _, _ = generate_synthetic_corpus(1, 30)
    train, dev, test = split_corpus(pairs, 5, 4, seed=9)
    assert (len(train), len(dev), len(test)) == (21, 5, 4)
    assert split_corpus(pairs, 5, 4, seed=9) == (train, dev, test)
    with pytest.raises(ValueError):
        split_corpus(pairs, 20, 20, seed=9)


def test_warn_if_long():
    assert warn_if_long(sentence(*["a/noun"] * 3), max_len=2) is True
    assert warn_if_long(sentence("a/noun"), max_len=2) is False


def test_vocabulary_ranks_by_frequency_and_caps():
    vocab = build_vocabulary([["a", "b", "a"], ["a"]], cap=6, num_placeholders=1)
    assert vocab.id_to_token == ["<unk>", "<s>", "</s>", "<pad>", "TT_1", "a"]
    assert vocab.lookup("b") == UNK_ID


def test_vocabulary_of_empty_corpus_holds_reserved_tokens():
    vocab = build_vocabulary([], cap=100, num_placeholders=2)
    assert vocab.id_to_token == ["<unk>", "<s>", "</s>", "<pad>", "TT_1", "TT_2"]
    assert (UNK_ID, BOS_ID, EOS_ID, PAD_ID) == (0, 1, 2, 3)


def test_vocabulary_without_truncation_and_lexicographic_ties():
    vocab = build_vocabulary([sentence("c/noun", "b/noun", "a/noun")], cap=100, num_placeholders=0)
    assert vocab.id_to_token[4:] == ["a", "b", "c"]


def test_vocabulary_cap_too_small():
    with pytest.raises(VocabularyError):
        build_vocabulary([["a"]], cap=4 + 20, num_placeholders=20)


def test_frequency_cap_property():
    """Every kept regular token is at least as frequent as every excluded one"""
    pairs, _, _ = generate_synthetic_corpus(5, 200)
    sentences = [p.source.surfaces for p in pairs]
    counts = {}
    for tokens in sentences:
        for t in tokens:
            counts[t] = counts.get(t, 0) + 1
    vocab = build_vocabulary(sentences, cap=60, num_placeholders=20)
    kept = set(vocab.id_to_token[vocab.num_reserved :])
    excluded = set(counts) - kept
    assert excluded
    assert min(counts[t] for t in kept) >= max(counts[t] for t in excluded)
    for token in vocab.id_to_token:
        assert vocab.id_to_token[vocab.token_to_id[token]] == token


def test_vocabulary_encode_decode_and_save(tmp_path):
    vocab = build_vocabulary([["x", "y"]], cap=100, num_placeholders=2)
    ids = vocab.encode(["x", "TT_2", "zzz"], add_eos=True)
    assert ids[-1] == EOS_ID
    assert ids[2] == UNK_ID
    assert vocab.decode(ids + [vocab.lookup("y")]) == ["x", placeholder(2), "<unk>"]
    path = tmp_path / "vocab.json"
    vocab.save(str(path))
    loaded = Vocabulary.load(str(path))
    assert loaded.id_to_token == vocab.id_to_token
    assert loaded.num_placeholders == 2


def test_vocabulary_rejects_missing_reserved_prefix():
    with pytest.raises(VocabularyError):
        Vocabulary(["a", "b"], num_placeholders=0)


def test_synthetic_corpus_is_deterministic():
    first = generate_synthetic_corpus(7, 40)
    second = generate_synthetic_corpus(7, 40)
    assert serialize_corpus(first[0]) == serialize_corpus(second[0])
    assert list(first[1].items()) == list(second[1].items())


def test_synthetic_corpus_zero_pairs_and_negative():
    pairs, table, lexicon = generate_synthetic_corpus(7, 0)
    assert pairs == []
    assert lexicon.terms
    assert len(table) > 0
    with pytest.raises(ValueError):
        generate_synthetic_corpus(7, -1)


def test_synthetic_targets_follow_grammar_map():
    grammar = SyntheticGrammar(held_out_fraction=0.3)
    pairs, table, lexicon = generate_synthetic_corpus(11, 1000, grammar)
    assert len(pairs) == 1000
    held = {t.source for t in lexicon.held_out_terms()}
    for pair in pairs:
        assert lexicon.reference_translation(pair.source.surfaces) == pair.target.surfaces
        assert 0 <= sum(1 for t in pair.source.tags if t == "noun") <= 3 * grammar.max_term_len
    for term in lexicon.terms:
        assert table.best(term.phrase) == (" ".join(term.target), 1.0)
    # training data never draws held-out terms
    for pair in pairs:
        runs, run = [], []
        for surface, tag in zip(pair.source.surfaces + [None], pair.source.tags + [None]):
            if tag == "noun":
                run.append(surface)
            elif run:
                runs.append(tuple(run))
                run = []
        assert not held.intersection(runs)


def test_nbest_fixture_contains_reference():
    pairs, _, lexicon = generate_synthetic_corpus(2, 5)
    entries = make_nbest_fixture(pairs, lexicon, size=4, seed=3)
    groups = group_nbest(entries)
    assert [index for index, _ in groups] == list(range(5))
    for (index, candidates), pair in zip(groups, pairs):
        assert tuple(pair.target.surfaces) in [c.candidate_tokens for c in candidates]
        totals = [c.total_score for c in candidates]
        assert totals == sorted(totals, reverse=True)
