"""Numeric primitives for the transformer: each forward has a matching
backward that consumes the forward's cache.

Shapes follow the convention that the last axis is the feature axis and any
leading axes are batch-like. Attention logits are raw dot products plus an
additive bias; there is deliberately no 1/sqrt(d_kv) scaling factor (the
model family this reproduces folds the scale into the weights).
"""

from __future__ import annotations

import math

import numpy as np

_MASKED_FILL = -1e9  # large-negative fill; exact zero weight is enforced explicitly


# ---------------------------------------------------------------------------
# linear / embedding


def linear_fwd(x, w):
    """y = x @ w for x (..., d_in), w (d_in, d_out)."""
    return x @ w, (x, w)


def linear_bwd(dy, cache):
    x, w = cache
    dx = dy @ w.T
    dw = x.reshape(-1, x.shape[-1]).T @ dy.reshape(-1, dy.shape[-1])
    return dx, dw


def embedding_fwd(ids, table):
    return table[ids], (ids, table.shape, table.dtype)


def embedding_bwd(dy, cache):
    ids, shape, dtype = cache
    dtable = np.zeros(shape, dtype=dtype)
    np.add.at(dtable, ids.reshape(-1), dy.reshape(-1, shape[1]))
    return dtable


# ---------------------------------------------------------------------------
# normalization


def rms_norm_fwd(x, gain, eps=1e-6):
    """Scale-only pre-norm: y = gain * x / sqrt(mean(x^2) + eps)."""
    inv = 1.0 / np.sqrt(np.mean(np.square(x), axis=-1, keepdims=True) + eps)
    return x * inv * gain, (x, gain, inv)


def rms_norm_bwd(dy, cache):
    x, gain, inv = cache
    d = x.shape[-1]
    dg = np.sum(dy * x * inv, axis=tuple(range(dy.ndim - 1)))
    g_dy = dy * gain
    dx = g_dy * inv - x * (inv**3) * np.sum(g_dy * x, axis=-1, keepdims=True) / d
    return dx, dg


# ---------------------------------------------------------------------------
# activations


def relu_fwd(x):
    return np.maximum(x, 0.0), (x > 0)


def relu_bwd(dy, cache):
    return dy * cache


_GELU_C = math.sqrt(2.0 / math.pi)
_GELU_A = 0.044715


def gelu_fwd(x):
    """Tanh-approximation GELU."""
    t = np.tanh(_GELU_C * (x + _GELU_A * x**3))
    return 0.5 * x * (1.0 + t), (x, t)


def gelu_bwd(dy, cache):
    x, t = cache
    du = _GELU_C * (1.0 + 3.0 * _GELU_A * x**2)
    return dy * (0.5 * (1.0 + t) + 0.5 * x * (1.0 - t**2) * du)


# ---------------------------------------------------------------------------
# dropout


def dropout_fwd(x, rate, rng):
    """Inverted dropout; identity when rate == 0 or rng is None."""
    if rate <= 0.0 or rng is None:
        return x, None
    keep = 1.0 - rate
    mask = (rng.random(x.shape) < keep).astype(x.dtype) / keep
    return x * mask, mask


def dropout_bwd(dy, mask):
    return dy if mask is None else dy * mask


# ---------------------------------------------------------------------------
# masked softmax attention


def masked_softmax_fwd(scores, mask):
    """Softmax over the last axis restricted to ``mask`` (True = valid key).

    Rows with no valid key yield exactly zero everywhere (the documented
    degenerate case); all other rows sum to 1 and carry exactly zero weight
    on masked keys.
    """
    if mask is None:
        shifted = scores - scores.max(axis=-1, keepdims=True)
        exps = np.exp(shifted)
    else:
        filled = np.where(mask, scores, _MASKED_FILL)
        shifted = filled - filled.max(axis=-1, keepdims=True)
        exps = np.exp(shifted) * mask
    denom = exps.sum(axis=-1, keepdims=True)
    probs = np.divide(exps, denom, out=np.zeros_like(exps), where=denom > 0)
    return probs, probs


def masked_softmax_bwd(dprobs, probs):
    return probs * (dprobs - np.sum(dprobs * probs, axis=-1, keepdims=True))


def attention(queries, keys, values, bias=None, key_mask=None):
    """Per-head attention: softmax(q.k^T + bias) over valid keys, times values.

    ``queries``/``keys``/``values`` are ``(..., T, depth)`` with matching
    leading axes; ``bias`` broadcasts against the ``(..., Tq, Tk)`` score
    matrix and ``key_mask`` marks valid key positions. Output projection is
    applied by the calling layer, not here. Returns ``(outputs, weights)``.
    """
    scores = queries @ np.swapaxes(keys, -1, -2)
    if bias is not None:
        scores = scores + bias
    mask = None
    if key_mask is not None:
        mask = np.broadcast_to(np.asarray(key_mask, dtype=bool)[..., None, :], scores.shape)
    weights, _ = masked_softmax_fwd(scores, mask)
    return weights @ values, weights


def attention_core_fwd(q, k, v, bias, mask, dropout_rate=0.0, rng=None):
    """Training-path attention with cached intermediates.

    q (B, h, Tq, dk), k/v (B, h, Tk, dk), bias broadcastable to
    (B, h, Tq, Tk) or None, mask boolean broadcastable to the score shape
    or None. Dropout (if any) is applied to the attention weights.
    """
    scores = q @ np.swapaxes(k, -1, -2)
    if bias is not None:
        scores = scores + bias
    probs, _ = masked_softmax_fwd(scores, mask)
    probs_kept, drop_mask = dropout_fwd(probs, dropout_rate, rng)
    ctx = probs_kept @ v
    return ctx, (q, k, v, probs, probs_kept, drop_mask)


def attention_core_bwd(dctx, cache):
    """Returns (dq, dk, dv, dbias) where dbias has the full score shape."""
    q, k, v, probs, probs_kept, drop_mask = cache
    dv = np.swapaxes(probs_kept, -1, -2) @ dctx
    dprobs_kept = dctx @ np.swapaxes(v, -1, -2)
    dprobs = dropout_bwd(dprobs_kept, drop_mask)
    dscores = masked_softmax_bwd(dprobs, probs)
    dq = dscores @ k
    dk = np.swapaxes(dscores, -1, -2) @ q
    return dq, dk, dv, dscores


# ---------------------------------------------------------------------------
# heads layout


def split_heads(x, num_heads):
    """(B, T, h*dk) -> (B, h, T, dk)."""
    b, t, inner = x.shape
    return x.reshape(b, t, num_heads, inner // num_heads).transpose(0, 2, 1, 3)


def merge_heads(x):
    """(B, h, T, dk) -> (B, T, h*dk)."""
    b, h, t, dk = x.shape
    return x.transpose(0, 2, 1, 3).reshape(b, t, h * dk)


# ---------------------------------------------------------------------------
# log-softmax (used by the loss)


def log_softmax(logits):
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.sum(np.exp(shifted), axis=-1, keepdims=True))
