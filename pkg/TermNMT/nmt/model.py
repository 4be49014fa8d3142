"""
Stacked-LSTM encoder-decoder with additive attention

The model is a dict of numpy parameter tensors plus its NmtConfig. Scoring,
decoding and training all go through encoder_forward/decoder_step, so a
batched teacher-forced score equals the sum of single decode_step calls.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from TermNMT.corpus.vocabulary import BOS_ID, EOS_ID
from TermNMT.errors import ModelError
from TermNMT.logger.logging_config import get_logger
from TermNMT.nmt.config import NmtConfig
from TermNMT.nmt.layers import attention_forward, attention_scores, log_softmax, lstm_step, masked_softmax

logger = get_logger("TermNMT.NMT")

Params = Dict[str, np.ndarray]


def parameter_shapes(config: NmtConfig) -> Dict[str, Tuple[int, ...]]:
    """Name -> shape of every parameter tensor, in row-vector (input, output) order"""
    H, E, A = config.hidden_size, config.embed_dim, config.attention_dim
    shapes: Dict[str, Tuple[int, ...]] = {
        "src_embed": (config.source_vocab_size, E),
        "tgt_embed": (config.target_vocab_size, E),
    }
    for layer in range(config.layers):
        enc_in = E if layer == 0 else H
        # decoder layer 0 is fed the previous attention context as well
        dec_in = E + H if layer == 0 else H
        shapes[f"enc_W{layer}"] = (enc_in + H, 4 * H)
        shapes[f"enc_b{layer}"] = (4 * H,)
        shapes[f"dec_W{layer}"] = (dec_in + H, 4 * H)
        shapes[f"dec_b{layer}"] = (4 * H,)
    shapes.update(
        {
            "att_Wq": (H, A),
            "att_Wk": (H, A),
            "att_v": (A,),
            "comb_W": (2 * H, H),
            "comb_b": (H,),
            "out_W": (H, config.target_vocab_size),
            "out_b": (config.target_vocab_size,),
        }
    )
    return shapes


class NmtModel:
    """Parameters of the encoder-decoder together with their configuration"""

    def __init__(self, config: NmtConfig, params: Params):
        expected = parameter_shapes(config)
        if set(params) != set(expected):
            missing = sorted(set(expected) - set(params))
            extra = sorted(set(params) - set(expected))
            raise ModelError(f"Parameter set mismatch (missing {missing}, unexpected {extra})")
        for name, shape in expected.items():
            if tuple(params[name].shape) != shape:
                raise ModelError(f"Parameter {name} has shape {params[name].shape}, expected {shape}")
        self.config = config
        self.params: Params = {name: np.asarray(params[name], dtype=np.float64) for name in expected}

    @property
    def parameter_shapes(self) -> Dict[str, Tuple[int, ...]]:
        return parameter_shapes(self.config)

    def num_parameters(self) -> int:
        return int(sum(p.size for p in self.params.values()))

    def is_finite(self) -> bool:
        return all(np.all(np.isfinite(p)) for p in self.params.values())

    def copy(self) -> "NmtModel":
        return NmtModel(self.config, {name: p.copy() for name, p in self.params.items()})


def init_model(config: NmtConfig, rng: Optional[Union[np.random.Generator, int]] = None) -> NmtModel:
    """
    Sample every parameter uniformly from [-init_range, +init_range]

    Args:
        config: Model configuration
        rng: Generator or seed; defaults to config.seed
    """
    if rng is None or isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(config.seed if rng is None else int(rng))
    r = config.init_range
    params = {name: rng.uniform(-r, r, size=shape) for name, shape in parameter_shapes(config).items()}
    model = NmtModel(config, params)
    logger.info(f"Initialized model with {model.num_parameters()} parameters (init range {r})")
    return model


@dataclass
class EncoderMemory:
    """Top-layer encoder states in processing order, ready for attention"""

    states: np.ndarray  # (S, B, H)
    keys: np.ndarray  # (S, B, A)
    mask: np.ndarray  # (S, B)
    final_h: np.ndarray  # (L, B, H)
    final_c: np.ndarray  # (L, B, H)

    def repeat(self, n: int) -> "EncoderMemory":
        """Tile a single-sentence memory to a batch of n identical rows"""
        return EncoderMemory(
            np.repeat(self.states, n, axis=1),
            np.repeat(self.keys, n, axis=1),
            np.repeat(self.mask, n, axis=1),
            np.repeat(self.final_h, n, axis=1),
            np.repeat(self.final_c, n, axis=1),
        )


@dataclass
class DecoderState:
    """Per-layer hidden and cell vectors plus the previous context, batch-major"""

    h: np.ndarray  # (L, B, H)
    c: np.ndarray  # (L, B, H)
    context: np.ndarray  # (B, H)

    def select(self, rows: Sequence[int]) -> "DecoderState":
        rows = list(rows)
        return DecoderState(self.h[:, rows], self.c[:, rows], self.context[rows])

    @classmethod
    def stack(cls, states: Sequence["DecoderState"]) -> "DecoderState":
        return cls(
            np.concatenate([s.h for s in states], axis=1),
            np.concatenate([s.c for s in states], axis=1),
            np.concatenate([s.context for s in states], axis=0),
        )


def check_ids(ids: Sequence[int], vocab_size: int, what: str):
    for token_id in ids:
        if not 0 <= int(token_id) < vocab_size:
            raise ModelError(f"{what} id {token_id} outside vocabulary of size {vocab_size}")


def encoder_forward(model: NmtModel, source: np.ndarray, mask: np.ndarray, keep_cache: bool = False):
    """
    Run the stacked encoder over a padded batch

    Args:
        model: NMT model
        source: Ids (S, B) in processing order, right-padded
        mask: (S, B), 1.0 for real tokens
        keep_cache: Keep per-step caches for the backward pass

    Returns:
        Tuple of (EncoderMemory, caches) where caches[layer][t] is an LSTM cache
    """
    p = model.params
    S, B = source.shape
    H = model.config.hidden_size
    layer_input = p["src_embed"][source]
    final_h, final_c, caches = [], [], []
    for layer in range(model.config.layers):
        W, b = p[f"enc_W{layer}"], p[f"enc_b{layer}"]
        h = np.zeros((B, H))
        c = np.zeros((B, H))
        outputs = np.empty((S, B, H))
        layer_caches = []
        for t in range(S):
            h, c, cache = lstm_step(layer_input[t], h, c, W, b, mask[t])
            outputs[t] = h
            if keep_cache:
                layer_caches.append(cache)
        final_h.append(h)
        final_c.append(c)
        caches.append(layer_caches)
        layer_input = outputs
    memory = EncoderMemory(layer_input, layer_input @ p["att_Wk"], mask, np.stack(final_h), np.stack(final_c))
    return memory, caches


def encode_memory(model: NmtModel, source_ids: Sequence[int], reverse: Optional[bool] = None) -> EncoderMemory:
    """Encode one sentence (batch of 1) for decoding and scoring"""
    if len(source_ids) == 0:
        raise ModelError("Cannot encode an empty source sentence")
    check_ids(source_ids, model.config.source_vocab_size, "Source")
    if reverse is None:
        reverse = model.config.reverse_source
    ordered = list(source_ids)[::-1] if reverse else list(source_ids)
    source = np.asarray(ordered, dtype=np.int64)[:, None]
    memory, _ = encoder_forward(model, source, np.ones(source.shape))
    return memory


def encode(model: NmtModel, source_ids: Sequence[int], reverse: Optional[bool] = None) -> np.ndarray:
    """
    Top-layer encoder hidden state for each source position

    Args:
        model: NMT model
        source_ids: Source ids
        reverse: Process right-to-left; defaults to config.reverse_source

    Returns:
        Array (n, hidden_size) in original source position order

    Raises:
        ModelError: Empty source or id outside the vocabulary
    """
    if reverse is None:
        reverse = model.config.reverse_source
    states = encode_memory(model, source_ids, reverse).states[:, 0, :]
    return states[::-1].copy() if reverse else states


def attention_context(model: NmtModel, decoder_top_hidden: np.ndarray, encoder_states: np.ndarray):
    """
    Additive attention of one decoder state over encoder states

    Args:
        decoder_top_hidden: (hidden_size,)
        encoder_states: (n, hidden_size), n >= 1

    Returns:
        Tuple of (context (hidden_size,), weights (n,))
    """
    p = model.params
    states = np.asarray(encoder_states, dtype=np.float64)
    if states.ndim != 2 or states.shape[0] == 0:
        raise ModelError("Attention needs at least one encoder state")
    query = (np.asarray(decoder_top_hidden, dtype=np.float64) @ p["att_Wq"])[None, :]
    scores, _ = attention_scores(query, (states @ p["att_Wk"])[:, None, :], p["att_v"])
    weights = masked_softmax(scores, np.ones_like(scores), axis=0)[:, 0]
    return weights @ states, weights


def initial_state(model: NmtModel, memory: EncoderMemory) -> DecoderState:
    """Decoder starts from the final encoder state of each layer and a zero context"""
    B = memory.states.shape[1]
    return DecoderState(memory.final_h.copy(), memory.final_c.copy(), np.zeros((B, model.config.hidden_size)))


def decoder_step(model: NmtModel, prev_ids: np.ndarray, state: DecoderState, memory: EncoderMemory, keep_cache=False):
    """
    One batched decoder step

    Returns:
        Tuple of (log-probabilities (B, V), new DecoderState, cache or None)
    """
    p = model.params
    embedded = p["tgt_embed"][prev_ids]
    x = np.concatenate([embedded, state.context], axis=1)
    hs, cs, lstm_caches = [], [], []
    for layer in range(model.config.layers):
        h, c, cache = lstm_step(x, state.h[layer], state.c[layer], p[f"dec_W{layer}"], p[f"dec_b{layer}"])
        hs.append(h)
        cs.append(c)
        lstm_caches.append(cache)
        x = h
    context, _, att_cache = attention_forward(x, memory.states, memory.keys, memory.mask, p["att_Wq"], p["att_v"])
    combined_in = np.concatenate([x, context], axis=1)
    attentional = np.tanh(combined_in @ p["comb_W"] + p["comb_b"])
    logprobs = log_softmax(attentional @ p["out_W"] + p["out_b"], axis=1)
    new_state = DecoderState(np.stack(hs), np.stack(cs), context)
    cache = (lstm_caches, att_cache, combined_in, attentional) if keep_cache else None
    return logprobs, new_state, cache


def decode_step(model: NmtModel, prev_token_id, state: DecoderState, memory: EncoderMemory):
    """
    Distribution over the next target token

    Args:
        model: NMT model
        prev_token_id: Previous target id (BOS at the first step), or an array of ids
            for a batch of states
        state: Decoder state
        memory: Encoded source (encode_memory)

    Returns:
        Tuple of (log-probabilities over the target vocabulary, new DecoderState).
        A scalar prev_token_id gives a (V,) vector, an array gives (B, V).
    """
    single = np.ndim(prev_token_id) == 0
    prev_ids = np.atleast_1d(np.asarray(prev_token_id, dtype=np.int64))
    check_ids(prev_ids, model.config.target_vocab_size, "Target")
    logprobs, new_state, _ = decoder_step(model, prev_ids, state, memory)
    return (logprobs[0] if single else logprobs), new_state


def step_logprobs(model: NmtModel, memory: EncoderMemory, target_ids: Sequence[int]) -> List[float]:
    """Teacher-forced log p(y_l | y_<l, x) for each target position"""
    check_ids(target_ids, model.config.target_vocab_size, "Target")
    state = initial_state(model, memory)
    prev = BOS_ID
    values = []
    for token_id in target_ids:
        logprobs, state = decode_step(model, prev, state, memory)
        values.append(float(logprobs[token_id]))
        prev = token_id
    return values


def sentence_logprob(model: NmtModel, source_ids: Sequence[int], target_ids: Sequence[int]) -> float:
    """
    Log-probability of a target sentence given the source

    Args:
        source_ids: Source ids
        target_ids: Target ids terminated by EOS

    Raises:
        ModelError: Missing EOS, empty source or id outside the vocabulary
    """
    if len(target_ids) == 0 or target_ids[-1] != EOS_ID:
        raise ModelError("Target sentence must end with EOS")
    return float(sum(step_logprobs(model, encode_memory(model, source_ids), target_ids)))
