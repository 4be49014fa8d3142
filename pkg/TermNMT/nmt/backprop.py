"""
Batched teacher-forced loss and its analytic gradient
"""

from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np

from TermNMT.corpus.vocabulary import BOS_ID, EOS_ID, PAD_ID
from TermNMT.errors import ModelError
from TermNMT.nmt.layers import attention_backward, lstm_step_backward
from TermNMT.nmt.model import NmtModel, check_ids, decoder_step, encoder_forward, initial_state

IdPair = Tuple[Sequence[int], Sequence[int]]


@dataclass
class Batch:
    """Padded time-major minibatch; source already in processing order"""

    source: np.ndarray  # (S, B)
    source_mask: np.ndarray  # (S, B)
    target_in: np.ndarray  # (T, B), BOS + y[:-1]
    target_out: np.ndarray  # (T, B), y including EOS
    target_mask: np.ndarray  # (T, B)

    @property
    def size(self) -> int:
        return self.source.shape[1]

    @property
    def num_target_tokens(self) -> int:
        return int(self.target_mask.sum())


def make_batch(pairs: Sequence[IdPair], reverse_source: bool) -> Batch:
    """
    Pad (source ids, target ids) pairs into a Batch

    Target ids must end with EOS; source ids must be non-empty.
    """
    if not pairs:
        raise ModelError("Cannot build an empty batch")
    for source_ids, target_ids in pairs:
        if len(source_ids) == 0:
            raise ModelError("Empty source sentence in batch")
        if len(target_ids) == 0 or target_ids[-1] != EOS_ID:
            raise ModelError("Target sentence must end with EOS")
    B = len(pairs)
    S = max(len(s) for s, _ in pairs)
    T = max(len(t) for _, t in pairs)
    source = np.full((S, B), PAD_ID, dtype=np.int64)
    source_mask = np.zeros((S, B))
    target_in = np.full((T, B), PAD_ID, dtype=np.int64)
    target_out = np.full((T, B), PAD_ID, dtype=np.int64)
    target_mask = np.zeros((T, B))
    for b, (source_ids, target_ids) in enumerate(pairs):
        ordered = list(source_ids)[::-1] if reverse_source else list(source_ids)
        source[: len(ordered), b] = ordered
        source_mask[: len(ordered), b] = 1.0
        target_out[: len(target_ids), b] = target_ids
        target_in[0, b] = BOS_ID
        target_in[1 : len(target_ids), b] = target_ids[:-1]
        target_mask[: len(target_ids), b] = 1.0
    return Batch(source, source_mask, target_in, target_out, target_mask)


def _forward(model: NmtModel, batch: Batch, keep_cache: bool):
    check_ids(np.unique(batch.source[batch.source_mask > 0]), model.config.source_vocab_size, "Source")
    check_ids(np.unique(batch.target_out[batch.target_mask > 0]), model.config.target_vocab_size, "Target")
    memory, encoder_caches = encoder_forward(model, batch.source, batch.source_mask, keep_cache)
    state = initial_state(model, memory)
    columns = np.arange(batch.size)
    sentence_logprobs = np.zeros(batch.size)
    decoder_caches = []
    for t in range(batch.target_in.shape[0]):
        logprobs, state, cache = decoder_step(model, batch.target_in[t], state, memory, keep_cache)
        sentence_logprobs += batch.target_mask[t] * logprobs[columns, batch.target_out[t]]
        if keep_cache:
            decoder_caches.append((logprobs, cache))
    return sentence_logprobs, memory, encoder_caches, decoder_caches


def score_batch(model: NmtModel, batch: Batch) -> np.ndarray:
    """Teacher-forced log-probability of each sentence of the batch"""
    return _forward(model, batch, keep_cache=False)[0]


def loss_and_gradients(model: NmtModel, batch: Batch) -> Tuple[float, Dict[str, np.ndarray]]:
    """
    Summed negative log-likelihood of a batch and its gradient

    Returns:
        Tuple of (loss, gradients keyed like model.params)
    """
    p = model.params
    cfg = model.config
    L, H, E = cfg.layers, cfg.hidden_size, cfg.embed_dim
    sentence_logprobs, memory, encoder_caches, decoder_caches = _forward(model, batch, keep_cache=True)
    loss = -float(sentence_logprobs.sum())

    grads = {name: np.zeros_like(value) for name, value in p.items()}
    B = batch.size
    columns = np.arange(B)
    dmemory_states = np.zeros_like(memory.states)
    dmemory_keys = np.zeros_like(memory.keys)
    dh_next: List[np.ndarray] = [np.zeros((B, H)) for _ in range(L)]
    dc_next: List[np.ndarray] = [np.zeros((B, H)) for _ in range(L)]
    dcontext_next = np.zeros((B, H))

    for t in reversed(range(len(decoder_caches))):
        logprobs, (lstm_caches, att_cache, combined_in, attentional) = decoder_caches[t]
        dlogits = np.exp(logprobs)
        dlogits[columns, batch.target_out[t]] -= 1.0
        dlogits *= batch.target_mask[t][:, None]
        grads["out_W"] += attentional.T @ dlogits
        grads["out_b"] += dlogits.sum(axis=0)
        dpre = (dlogits @ p["out_W"].T) * (1.0 - attentional * attentional)
        grads["comb_W"] += combined_in.T @ dpre
        grads["comb_b"] += dpre.sum(axis=0)
        dcombined = dpre @ p["comb_W"].T
        dcontext = dcombined[:, H:] + dcontext_next
        dh_att, dstates, dkeys = attention_backward(
            dcontext, memory.states, att_cache, p["att_Wq"], p["att_v"], grads["att_Wq"], grads["att_v"]
        )
        dmemory_states += dstates
        dmemory_keys += dkeys
        dx = dcombined[:, :H] + dh_att
        for layer in reversed(range(L)):
            dx, dh_next[layer], dc_next[layer] = lstm_step_backward(
                dx + dh_next[layer],
                dc_next[layer],
                lstm_caches[layer],
                p[f"dec_W{layer}"],
                grads[f"dec_W{layer}"],
                grads[f"dec_b{layer}"],
            )
        np.add.at(grads["tgt_embed"], batch.target_in[t], dx[:, :E])
        dcontext_next = dx[:, E:]

    grads["att_Wk"] += np.einsum("sbh,sba->ha", memory.states, dmemory_keys)
    doutputs = dmemory_states + dmemory_keys @ p["att_Wk"].T
    for layer in reversed(range(L)):
        dh, dc = dh_next[layer], dc_next[layer]
        caches = encoder_caches[layer]
        dinputs = np.zeros((len(caches), B, caches[0][0].shape[1] - H))
        for t in reversed(range(len(caches))):
            dinputs[t], dh, dc = lstm_step_backward(
                doutputs[t] + dh, dc, caches[t], p[f"enc_W{layer}"], grads[f"enc_W{layer}"], grads[f"enc_b{layer}"]
            )
        doutputs = dinputs
    np.add.at(grads["src_embed"], batch.source, doutputs)
    return loss, grads
