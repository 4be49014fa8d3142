"""
Forward and backward primitives shared by scoring, decoding and training

Row-vector convention: a batch of inputs is (B, n) and weights are (n, m).
LSTM gate blocks are ordered input, forget, output, candidate.
"""

import numpy as np
from scipy.special import expit, logsumexp


def log_softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    """Numerically stable log-softmax"""
    return logits - logsumexp(logits, axis=axis, keepdims=True)


def masked_softmax(scores: np.ndarray, mask: np.ndarray, axis: int = 0) -> np.ndarray:
    """Softmax over `axis` with masked-out entries getting exactly zero weight"""
    valid = mask > 0
    shifted = np.where(valid, scores, -np.inf)
    shifted = shifted - shifted.max(axis=axis, keepdims=True)
    weights = np.where(valid, np.exp(shifted), 0.0)
    return weights / weights.sum(axis=axis, keepdims=True)


def lstm_step(x, h_prev, c_prev, W, b, mask=None):
    """
    One LSTM step

    Args:
        x: Input (B, n_in)
        h_prev, c_prev: Previous hidden and cell state (B, H)
        W: Weights (n_in + H, 4H)
        b: Bias (4H,)
        mask: Optional (B,) step mask; masked rows carry the previous state

    Returns:
        Tuple of (h, c, cache)
    """
    H = h_prev.shape[1]
    xh = np.concatenate([x, h_prev], axis=1)
    z = xh @ W + b
    i = expit(z[:, :H])
    f = expit(z[:, H : 2 * H])
    o = expit(z[:, 2 * H : 3 * H])
    g = np.tanh(z[:, 3 * H :])
    c = f * c_prev + i * g
    tc = np.tanh(c)
    h = o * tc
    if mask is not None:
        m = mask[:, None]
        h = m * h + (1.0 - m) * h_prev
        c = m * c + (1.0 - m) * c_prev
    return h, c, (xh, c_prev, i, f, o, g, tc, mask)


def lstm_step_backward(dh, dc, cache, W, dW, db):
    """
    Backward pass of lstm_step; accumulates into dW, db in place

    Returns:
        Tuple of (dx, dh_prev, dc_prev)
    """
    xh, c_prev, i, f, o, g, tc, mask = cache
    H = c_prev.shape[1]
    if mask is not None:
        m = mask[:, None]
        dh_skip = (1.0 - m) * dh
        dc_skip = (1.0 - m) * dc
        dh = m * dh
        dc = m * dc
    else:
        dh_skip = 0.0
        dc_skip = 0.0
    do = dh * tc
    dc = dc + dh * o * (1.0 - tc * tc)
    di = dc * g
    dg = dc * i
    df = dc * c_prev
    dz = np.concatenate(
        [di * i * (1.0 - i), df * f * (1.0 - f), do * o * (1.0 - o), dg * (1.0 - g * g)],
        axis=1,
    )
    dW += xh.T @ dz
    db += dz.sum(axis=0)
    dxh = dz @ W.T
    n_in = xh.shape[1] - H
    return dxh[:, :n_in], dxh[:, n_in:] + dh_skip, dc * f + dc_skip


def attention_scores(query, keys, v):
    """Additive alignment scores v . tanh(keys + query); keys (S, B, A), query (B, A) -> (S, B)"""
    u = np.tanh(keys + query[None, :, :])
    return u @ v, u


def attention_forward(h_top, memory_states, memory_keys, memory_mask, Wq, v):
    """
    Additive attention over encoder states

    Args:
        h_top: Decoder top-layer hidden state (B, H)
        memory_states: Encoder states (S, B, H)
        memory_keys: memory_states @ Wk (S, B, A)
        memory_mask: (S, B), zero for padding
        Wq: Query weights (H, A)
        v: Scoring vector (A,)

    Returns:
        Tuple of (context (B, H), weights (S, B), cache)
    """
    scores, u = attention_scores(h_top @ Wq, memory_keys, v)
    weights = masked_softmax(scores, memory_mask, axis=0)
    context = np.einsum("sb,sbh->bh", weights, memory_states)
    return context, weights, (h_top, weights, u)


def attention_backward(dcontext, memory_states, cache, Wq, v, dWq, dv):
    """
    Backward pass of attention_forward; accumulates into dWq, dv in place

    Returns:
        Tuple of (dh_top, dmemory_states, dmemory_keys)
    """
    h_top, weights, u = cache
    dweights = np.einsum("bh,sbh->sb", dcontext, memory_states)
    dstates = weights[:, :, None] * dcontext[None, :, :]
    dscores = weights * (dweights - (weights * dweights).sum(axis=0, keepdims=True))
    dv += np.einsum("sb,sba->a", dscores, u)
    dpre = dscores[:, :, None] * v[None, None, :] * (1.0 - u * u)
    dquery = dpre.sum(axis=0)
    dWq += h_top.T @ dquery
    return dquery @ Wq.T, dstates, dpre
