"""
Length-capped beam search over decode_step
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from TermNMT.corpus.vocabulary import BOS_ID, EOS_ID, PAD_ID
from TermNMT.nmt.model import DecoderState, NmtModel, decode_step, encode_memory, initial_state


# Never produced by the decoder
NON_OUTPUT_IDS = (BOS_ID, PAD_ID)


def _mask_non_output(logprobs: np.ndarray) -> np.ndarray:
    masked = np.array(logprobs, dtype=float, copy=True)
    for token in NON_OUTPUT_IDS:
        if token < masked.shape[-1]:
            masked[..., token] = -np.inf
    return masked


@dataclass
class Hypothesis:
    token_ids: Tuple[int, ...]
    logprob: float
    state: Optional[DecoderState]
    finished: bool = False

    def key(self):
        """Ranking key: higher log-probability first, then the smaller id sequence"""
        return (-self.logprob, self.token_ids)


def _top_candidates(totals: np.ndarray, live: Sequence[Hypothesis], k: int) -> List[Tuple[float, Tuple[int, ...], int]]:
    flat = totals.ravel()
    V = totals.shape[1]
    if flat.size > k:
        # every candidate tied with the k-th best takes part in the exact ordering
        threshold = np.partition(flat, flat.size - k)[flat.size - k]
        positions = np.flatnonzero(flat >= threshold)
    else:
        positions = np.arange(flat.size)
    positions = positions[np.isfinite(flat[positions])]
    candidates = []
    for position in positions:
        row, token = divmod(int(position), V)
        candidates.append((float(flat[position]), live[row].token_ids + (token,), row))
    candidates.sort(key=lambda c: (-c[0], c[1]))
    return candidates[:k]


def beam_decode(
    model: NmtModel, source_ids: Sequence[int], beam_size: int, max_len: int
) -> Tuple[List[int], float]:
    """
    Most probable target sequence under a beam of width beam_size

    Returns:
        Tuple of (target ids without EOS, log-probability including EOS). When no
        hypothesis reaches EOS within max_len the best capped hypothesis is returned.
        <s> and <pad> are never emitted; <unk> stays a valid output.
    """
    if beam_size < 1:
        raise ValueError(f"beam_size must be >= 1, got {beam_size}")
    memory = encode_memory(model, source_ids)
    live = [Hypothesis((), 0.0, initial_state(model, memory))]
    finished: List[Hypothesis] = []

    for _ in range(max_len):
        state = DecoderState.stack([h.state for h in live])
        prev = np.array([h.token_ids[-1] if h.token_ids else BOS_ID for h in live], dtype=np.int64)
        logprobs, new_state = decode_step(model, prev, state, memory.repeat(len(live)))
        logprobs = _mask_non_output(logprobs)
        totals = np.array([h.logprob for h in live])[:, None] + logprobs

        next_live: List[Hypothesis] = []
        for score, token_ids, row in _top_candidates(totals, live, beam_size):
            if token_ids[-1] == EOS_ID:
                finished.append(Hypothesis(token_ids, score, None, finished=True))
            else:
                next_live.append(Hypothesis(token_ids, score, new_state.select([row])))
        live = next_live
        if not live:
            break
        # extensions can only lower a score
        if finished and max(h.logprob for h in finished) >= max(h.logprob for h in live):
            break

    if finished:
        best = min(finished, key=Hypothesis.key)
        return list(best.token_ids[:-1]), best.logprob
    best = min(live, key=Hypothesis.key)
    return list(best.token_ids), best.logprob


def greedy_decode(model: NmtModel, source_ids: Sequence[int], max_len: int) -> Tuple[List[int], float]:
    """Argmax rollout; equivalent to beam_decode with beam_size 1"""
    memory = encode_memory(model, source_ids)
    state = initial_state(model, memory)
    prev = BOS_ID
    ids: List[int] = []
    total = 0.0
    for _ in range(max_len):
        logprobs, state = decode_step(model, prev, state, memory)
        prev = int(np.argmax(_mask_non_output(logprobs)))
        total += float(logprobs[prev])
        if prev == EOS_ID:
            break
        ids.append(prev)
    return ids, total
