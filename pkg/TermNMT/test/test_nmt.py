"""
Test script for the encoder-decoder: scoring, gradients, decoding and training
"""

import itertools
import math

import numpy as np
import pytest

from TermNMT.corpus.vocabulary import BOS_ID, EOS_ID, PAD_ID, UNK_ID, build_vocabulary
from TermNMT.errors import ConfigError, ModelError
from TermNMT.nmt.backprop import loss_and_gradients, make_batch, score_batch
from TermNMT.nmt.beam import beam_decode, greedy_decode
from TermNMT.nmt.checkpoint import load_checkpoint, save_checkpoint
from TermNMT.nmt.config import NmtConfig
from TermNMT.nmt.model import (
    NmtModel,
    attention_context,
    decode_step,
    encode,
    encode_memory,
    init_model,
    initial_state,
    parameter_shapes,
    sentence_logprob,
    step_logprobs,
)
from TermNMT.nmt.trainer import LearningRateSchedule, NmtTrainer, clip_gradients, perplexity


def tiny_config(**changes):
    values = dict(
        source_vocab_size=6,
        target_vocab_size=5,
        layers=2,
        hidden_size=4,
        embed_size=3,
        attention_size=3,
        init_range=0.5,
        minibatch=4,
        epochs=1,
        eval_every_batches=1,
        seed=0,
    )
    values.update(changes)
    return NmtConfig(**values)


def zero_model(config):
    return NmtModel(config, {name: np.zeros(shape) for name, shape in parameter_shapes(config).items()})


def random_pairs(rng, config, count, max_source=4, max_target=3):
    pairs = []
    for _ in range(count):
        source = list(rng.integers(0, config.source_vocab_size, size=rng.integers(1, max_source + 1)))
        target = list(rng.integers(0, config.target_vocab_size, size=rng.integers(0, max_target + 1)))
        pairs.append((source, target + [EOS_ID]))
    return pairs


def test_config_validation():
    with pytest.raises(ConfigError):
        tiny_config(hidden_size=0)
    with pytest.raises(ConfigError):
        tiny_config(lr_decay=1.5)
    with pytest.raises(ConfigError):
        tiny_config(decay_rule="sometimes")
    assert tiny_config(embed_size=None).embed_dim == 4


def test_init_is_seeded_and_bounded():
    cfg = tiny_config(init_range=0.1)
    first = init_model(cfg, 3)
    second = init_model(cfg, 3)
    for name, shape in parameter_shapes(cfg).items():
        assert first.params[name].shape == shape
        assert np.array_equal(first.params[name], second.params[name])
        assert np.all(np.abs(first.params[name]) <= 0.1)
    assert not np.array_equal(init_model(cfg, 4).params["out_W"], first.params["out_W"])


def test_model_rejects_wrong_shapes():
    cfg = tiny_config()
    params = dict(init_model(cfg).params)
    params["out_b"] = np.zeros(7)
    with pytest.raises(ModelError):
        NmtModel(cfg, params)


def test_encode_shape_and_zero_weights():
    cfg = tiny_config()
    states = encode(init_model(cfg), [1, 4, 5])
    assert states.shape == (3, cfg.hidden_size)
    # zero weights leave every cell at zero
    assert np.allclose(encode(zero_model(cfg), [1, 4, 5]), 0.0)


def test_encode_palindrome_reversal():
    model = init_model(tiny_config(layers=1))
    palindrome = [4, 1, 5, 1, 4]
    forward = encode(model, palindrome, reverse=False)
    backward = encode(model, palindrome, reverse=True)
    assert np.allclose(backward, forward[::-1])


def test_encode_rejects_empty_and_unknown_ids():
    model = init_model(tiny_config())
    with pytest.raises(ModelError):
        encode(model, [])
    with pytest.raises(ModelError):
        encode(model, [6])


def test_attention_single_state_and_uniform():
    cfg = tiny_config(hidden_size=2, attention_size=2)
    model = init_model(cfg)
    state = np.array([0.3, -0.7])
    context, weights = attention_context(model, np.array([1.0, 2.0]), state[None, :])
    assert np.allclose(weights, [1.0])
    assert np.allclose(context, state)

    zero = zero_model(cfg)
    states = np.array([[1.0, 0.0], [0.0, 1.0]])
    context, weights = attention_context(zero, np.zeros(2), states)
    assert np.allclose(weights, [0.5, 0.5])
    assert np.allclose(context, [0.5, 0.5])


def test_attention_weights_follow_scores():
    cfg = tiny_config(hidden_size=2, attention_size=2)
    model = zero_model(cfg)
    model.params["att_Wk"] = np.eye(2)
    model.params["att_v"] = np.array([2.0, 0.0])
    # tanh(atanh(0.5)) * 2 = 1, so the scores are (1, 0)
    states = np.array([[math.atanh(0.5), 0.0], [0.0, 0.0]])
    _, weights = attention_context(model, np.zeros(2), states)
    e = math.e
    assert np.allclose(weights, [e / (e + 1), 1 / (e + 1)])
    with pytest.raises(ModelError):
        attention_context(model, np.zeros(2), np.zeros((0, 2)))


def test_decode_step_is_normalized():
    model = init_model(tiny_config())
    memory = encode_memory(model, [1, 2, 3])
    logprobs, state = decode_step(model, BOS_ID, initial_state(model, memory), memory)
    assert logprobs.shape == (5,)
    assert math.isclose(float(np.exp(logprobs).sum()), 1.0, rel_tol=1e-12)
    logprobs, _ = decode_step(model, 4, state, memory)
    assert math.isclose(float(np.exp(logprobs).sum()), 1.0, rel_tol=1e-12)


def test_zero_model_is_uniform():
    cfg = tiny_config()
    model = zero_model(cfg)
    memory = encode_memory(model, [4])
    logprobs, _ = decode_step(model, BOS_ID, initial_state(model, memory), memory)
    assert np.allclose(logprobs, -math.log(5))
    assert math.isclose(sentence_logprob(model, [4, 5], [0, 4, EOS_ID]), -3 * math.log(5))


def test_sentence_logprob_matches_steps_and_batch():
    cfg = tiny_config()
    model = init_model(cfg, 1)
    pairs = random_pairs(np.random.default_rng(5), cfg, 6)
    batched = score_batch(model, make_batch(pairs, cfg.reverse_source))
    for (source, target), score in zip(pairs, batched):
        single = sentence_logprob(model, source, target)
        assert math.isclose(single, float(score), rel_tol=1e-10, abs_tol=1e-12)
        steps = step_logprobs(model, encode_memory(model, source), target)
        assert math.isclose(single, sum(steps), rel_tol=1e-12, abs_tol=1e-12)
    with pytest.raises(ModelError):
        sentence_logprob(model, [1], [4])


@pytest.mark.parametrize(
    "changes",
    [
        {},
        {"layers": 1},
        {"layers": 3, "reverse_source": False},
        {"hidden_size": 3, "embed_size": None, "attention_size": 2},
        {"source_vocab_size": 4, "target_vocab_size": 7, "attention_size": 5},
    ],
)
def test_gradients_match_finite_differences(changes):
    cfg = tiny_config(**changes)
    model = init_model(cfg, 2)
    rng = np.random.default_rng(8)
    batch = make_batch(random_pairs(rng, cfg, 3), cfg.reverse_source)
    loss, grads = loss_and_gradients(model, batch)
    assert math.isclose(loss, -float(score_batch(model, batch).sum()), rel_tol=1e-12)

    h = 1e-5
    worst = {}
    for name, value in model.params.items():
        flat = value.reshape(-1)
        worst[name] = 0.0
        for index in range(flat.size):
            original = flat[index]
            flat[index] = original + h
            plus = -float(score_batch(model, batch).sum())
            flat[index] = original - h
            minus = -float(score_batch(model, batch).sum())
            flat[index] = original
            numeric = (plus - minus) / (2 * h)
            analytic = grads[name].reshape(-1)[index]
            # below 1e-4 the comparison is absolute; central differences carry ~1e-9 noise
            rel = abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-4)
            worst[name] = max(worst[name], rel)
    failing = {name: rel for name, rel in worst.items() if not rel < 1e-4}
    assert not failing, f"max relative error per tensor: {worst}"


def test_beam_search_finds_exhaustive_optimum():
    """With a beam wider than the search space the result is the best EOS-terminated sequence"""
    max_len = 3
    for seed in range(50):
        cfg = tiny_config(target_vocab_size=6, layers=1, init_range=1.0)
        model = init_model(cfg, seed)
        source = [1 + seed % 5, 4]
        memory = encode_memory(model, source)
        best_ids, best_score = None, -math.inf
        for length in range(max_len):
            for prefix in itertools.product([UNK_ID, 4, 5], repeat=length):
                score = sum(step_logprobs(model, memory, list(prefix) + [EOS_ID]))
                if score > best_score:
                    best_ids, best_score = list(prefix), score
        ids, logprob = beam_decode(model, source, beam_size=64, max_len=max_len)
        assert ids == best_ids
        assert math.isclose(logprob, best_score, rel_tol=1e-9)


def test_greedy_equals_beam_of_one():
    cfg = tiny_config()
    for seed in range(10):
        model = init_model(cfg, seed)
        source = [4, 5, 1][: 1 + seed % 3]
        greedy = greedy_decode(model, source, max_len=6)
        beam = beam_decode(model, source, beam_size=1, max_len=6)
        assert greedy[0] == beam[0]
        assert math.isclose(greedy[1], beam[1], rel_tol=1e-9)


def test_beam_immediate_eos_and_bad_width():
    model = init_model(tiny_config())
    model.params["out_b"][EOS_ID] = 100.0
    ids, logprob = beam_decode(model, [4], beam_size=3, max_len=10)
    assert ids == []
    assert logprob > -1e-6
    with pytest.raises(ValueError):
        beam_decode(model, [4], beam_size=0, max_len=10)


def test_decoders_never_emit_bos_or_pad():
    model = init_model(tiny_config(target_vocab_size=6))
    model.params["out_b"][BOS_ID] = 50.0
    model.params["out_b"][PAD_ID] = 50.0
    model.params["out_b"][5] = 10.0
    for ids, _ in (beam_decode(model, [4], beam_size=3, max_len=4), greedy_decode(model, [4], max_len=4)):
        assert ids
        assert BOS_ID not in ids
        assert PAD_ID not in ids


def test_learning_rate_schedule():
    schedule = LearningRateSchedule(1.0, 0.5)
    for value in (10.0, 9.0, 8.0):
        assert schedule.observe(value) == 1.0
    assert schedule.should_decay(8.5)
    assert not schedule.should_decay(7.0)
    assert schedule.observe(8.5) == 0.5

    strict = LearningRateSchedule(1.0, 0.5, "all_of_last_three")
    for value in (10.0, 9.0, 8.0):
        strict.observe(value)
    assert not strict.should_decay(8.5)
    assert strict.should_decay(11.0)


def test_clip_gradients():
    clipped = clip_gradients({"a": np.array([6.0, 8.0])}, 5.0)
    assert np.allclose(clipped["a"], [3.0, 4.0])
    unchanged = clip_gradients({"a": np.array([3.0, 0.0])}, 5.0)
    assert np.allclose(unchanged["a"], [3.0, 0.0])
    zero = clip_gradients({"a": np.zeros(3)}, 5.0)
    assert np.allclose(zero["a"], 0.0)


def test_perplexity():
    cfg = tiny_config()
    pairs = random_pairs(np.random.default_rng(1), cfg, 5)
    assert math.isclose(perplexity(zero_model(cfg), pairs), 5.0, rel_tol=1e-9)
    with pytest.raises(ModelError):
        perplexity(zero_model(cfg), [])


def test_training_reduces_perplexity():
    """A small copy task gets easier after a few epochs of SGD"""
    cfg = tiny_config(
        source_vocab_size=8, target_vocab_size=8, hidden_size=16, embed_size=8, attention_size=8,
        layers=1, init_range=0.1, minibatch=10, epochs=15, eval_every_batches=5, lr0=0.5,
    )
    rng = np.random.default_rng(4)
    pairs = []
    for _ in range(50):
        tokens = [int(t) for t in rng.integers(4, 8, size=rng.integers(1, 4))]
        pairs.append((tokens, tokens + [EOS_ID]))
    model = init_model(cfg)
    before = perplexity(model, pairs)
    progress = []
    trainer = NmtTrainer(cfg, progress_callback=progress.append)
    model, history = trainer.train(model, pairs, pairs[:10])
    after = perplexity(model, pairs)
    assert after < before
    assert history.batches == 5 * 15
    assert len(history.epoch_losses) == 15
    first_five = history.epoch_losses[:5]
    assert all(later <= earlier + 0.05 for earlier, later in zip(first_five, first_five[1:]))
    assert first_five[-1] < first_five[0]
    assert history.evaluations
    assert progress[-1] == pytest.approx(100.0)
    assert not history.cancelled


def test_training_cancel_and_empty_data():
    cfg = tiny_config()
    trainer = NmtTrainer(cfg)
    with pytest.raises(ModelError):
        trainer.train(init_model(cfg), [], [])

    pairs = random_pairs(np.random.default_rng(2), cfg, 8)
    cancelling = NmtTrainer(cfg, progress_callback=lambda _: cancelling.request_cancel())
    _, history = cancelling.train(init_model(cfg), pairs, [])
    assert history.cancelled
    assert history.batches == 1


def test_checkpoint_round_trip(tmp_path):
    source_vocab = build_vocabulary([["a", "b"]], cap=100, num_placeholders=1)
    target_vocab = build_vocabulary([["x", "y", "z"]], cap=100, num_placeholders=1)
    cfg = tiny_config(source_vocab_size=len(source_vocab), target_vocab_size=len(target_vocab))
    model = init_model(cfg, 9)
    path = tmp_path / "model.npz"
    save_checkpoint(model, str(path), source_vocab, target_vocab)

    loaded, loaded_source, loaded_target = load_checkpoint(str(path))
    assert loaded.config == cfg
    assert loaded_source.id_to_token == source_vocab.id_to_token
    assert loaded_target.id_to_token == target_vocab.id_to_token
    for name, value in model.params.items():
        assert np.array_equal(loaded.params[name], value)

    with pytest.raises(ModelError):
        save_checkpoint(model, str(tmp_path / "bad.npz"), target_vocab, source_vocab)


def test_checkpoint_rejects_unknown_version(tmp_path):
    vocab = build_vocabulary([["a"]], cap=100, num_placeholders=0)
    cfg = tiny_config(source_vocab_size=len(vocab), target_vocab_size=len(vocab))
    path = tmp_path / "model.npz"
    save_checkpoint(init_model(cfg), str(path), vocab, vocab)
    with np.load(str(path), allow_pickle=False) as data:
        arrays = {key: data[key] for key in data.files}
    arrays["meta/format_version"] = np.array(2, dtype=np.int64)
    bad = tmp_path / "future.npz"
    np.savez(str(bad), **arrays)
    with pytest.raises(ModelError, match="version 2"):
        load_checkpoint(str(bad))
