"""Pose-to-text encoder-decoder transformer, implemented directly on numpy.

A single linear layer projects 255-dim pose frame vectors into the model
width; a pre-norm encoder-decoder stack with bucketed relative position
bias turns them into token logits. Blocks use scale-only RMS normalization,
residual connections, and attention without the 1/sqrt(d_kv) factor.

Every forward function has a hand-written backward; gradients are exact
(validated against finite differences in the test suite). Parameters live
in a flat ``{name: ndarray}`` dict so optimizers, checkpoints and the
analytic cost model can all enumerate them uniformly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .config import ModelConfig
from .exceptions import EmptyInputError, SchemaError, ShapeError
from .functional import (
    attention_core_bwd,
    attention_core_fwd,
    dropout_bwd,
    dropout_fwd,
    embedding_bwd,
    embedding_fwd,
    gelu_bwd,
    gelu_fwd,
    linear_bwd,
    linear_fwd,
    merge_heads,
    relu_bwd,
    relu_fwd,
    rms_norm_bwd,
    rms_norm_fwd,
    split_heads,
)
from .seeding import substream
from .vocabulary import PAD_ID

__all__ = [
    "EncodedSource",
    "Seq2SeqTransformer",
    "relative_bucket",
    "relative_bias",
    "parameter_shapes",
    "init_params",
    "project_pose",
    "encode",
    "decode_step",
    "forward_teacher_forced",
    "save_checkpoint",
    "load_checkpoint",
]


# ---------------------------------------------------------------------------
# relative position buckets


def relative_bucket(relative_position, bidirectional, num_buckets=32, max_distance=128):
    """Bucket index for a (key - query) relative position.

    Bidirectional mode splits the buckets between the two sign halves;
    within a half, small distances get one bucket each and larger ones
    share logarithmically wider buckets, saturating at ``max_distance``.
    """
    rp = np.asarray(relative_position, dtype=np.int64)
    scalar = rp.ndim == 0
    rp = np.atleast_1d(rp)
    if bidirectional:
        half = num_buckets // 2
        offset = np.where(rp > 0, half, 0)
        n = np.abs(rp)
        span = half
    else:
        offset = np.zeros_like(rp)
        n = -np.minimum(rp, 0)
        span = num_buckets
    max_exact = span // 2
    is_small = n < max_exact
    large = max_exact + (
        np.log(np.maximum(n, 1) / max_exact)
        / math.log(max_distance / max_exact)
        * (span - max_exact)
    ).astype(np.int64)
    large = np.minimum(large, span - 1)
    out = offset + np.where(is_small, n, large)
    return int(out[0]) if scalar else out


def relative_bias(table, num_queries, num_keys, bidirectional, max_distance=128):
    """Expand a ``(buckets, heads)`` table into a ``(1, heads, Tq, Tk)`` bias.

    Also returns the ``(Tq, Tk)`` bucket matrix, which the backward pass
    uses to scatter score gradients back into the table.
    """
    context = np.arange(num_queries)[:, None]
    memory = np.arange(num_keys)[None, :]
    buckets = relative_bucket(memory - context, bidirectional, table.shape[0], max_distance)
    bias = table[buckets]  # (Tq, Tk, heads)
    return bias.transpose(2, 0, 1)[None], buckets


def _scatter_bias_grad(dscores, buckets, num_buckets, dtype):
    """Accumulate (B, h, Tq, Tk) score grads into a (buckets, h) table grad."""
    summed = dscores.sum(axis=0)  # (h, Tq, Tk)
    flat = summed.transpose(1, 2, 0).reshape(-1, summed.shape[0])
    dtable = np.zeros((num_buckets, summed.shape[0]), dtype=dtype)
    np.add.at(dtable, buckets.reshape(-1), flat)
    return dtable


# ---------------------------------------------------------------------------
# parameter inventory


def _layer_entries(stack, index, config):
    d, inner, dff = config.d_model, config.inner_dim, config.d_ff
    prefix = f"{stack}.{index}"
    entries = [
        (f"{prefix}.norm1", (d,)),
        (f"{prefix}.self.q", (d, inner)),
        (f"{prefix}.self.k", (d, inner)),
        (f"{prefix}.self.v", (d, inner)),
        (f"{prefix}.self.o", (inner, d)),
    ]
    if stack == "dec":
        entries += [
            (f"{prefix}.norm2", (d,)),
            (f"{prefix}.cross.q", (d, inner)),
            (f"{prefix}.cross.k", (d, inner)),
            (f"{prefix}.cross.v", (d, inner)),
            (f"{prefix}.cross.o", (inner, d)),
            (f"{prefix}.norm3", (d,)),
        ]
    else:
        entries.append((f"{prefix}.norm2", (d,)))
    if config.ffn_variant == "relu":
        entries += [(f"{prefix}.ffn.wi", (d, dff)), (f"{prefix}.ffn.wo", (dff, d))]
    else:
        entries += [
            (f"{prefix}.ffn.wi0", (d, dff)),
            (f"{prefix}.ffn.wi1", (d, dff)),
            (f"{prefix}.ffn.wo", (dff, d)),
        ]
    return entries


def parameter_shapes(config: ModelConfig) -> dict[str, tuple[int, ...]]:
    """Every learnable tensor's shape, keyed by name, fully determined by config."""
    d = config.d_model
    entries = [
        ("proj.w", (config.pose_dim, d)),
        ("proj.b", (d,)),
        ("embed.w", (config.vocab_size, d)),
    ]
    if not config.tie_output_embedding:
        entries.append(("lm_head.w", (d, config.vocab_size)))
    entries.append(("enc.rel_bias", (config.rel_buckets, config.num_heads)))
    for i in range(config.num_layers):
        entries.extend(_layer_entries("enc", i, config))
    entries.append(("enc.final_norm", (d,)))
    entries.append(("dec.rel_bias", (config.rel_buckets, config.num_heads)))
    for i in range(config.num_layers):
        entries.extend(_layer_entries("dec", i, config))
    entries.append(("dec.final_norm", (d,)))
    return dict(entries)


def _init_scale(name: str, config: ModelConfig) -> float | None:
    """Init stddev per tensor; None means the tensor starts at a constant."""
    if name.endswith((".norm1", ".norm2", ".norm3", "final_norm")) or name == "proj.b":
        return None
    if name.endswith("rel_bias"):
        return config.d_model**-0.5
    if name == "proj.w":
        return config.pose_dim**-0.5
    if name == "embed.w":
        return 1.0
    if name == "lm_head.w":
        return config.d_model**-0.5
    if name.endswith(".q"):
        return (config.d_model * config.d_kv) ** -0.5
    if name.endswith((".k", ".v", ".ffn.wi", ".ffn.wi0", ".ffn.wi1")):
        return config.d_model**-0.5
    if name.endswith(".o"):
        return config.inner_dim**-0.5
    if name.endswith(".ffn.wo"):
        return config.d_ff**-0.5
    raise KeyError(name)


def init_params(config: ModelConfig, seed: int = 0, dtype=np.float32) -> dict[str, np.ndarray]:
    """Fresh parameters; norm gains start at 1, everything else is Gaussian."""
    rng = substream(seed, "init")
    params = {}
    for name, shape in parameter_shapes(config).items():
        scale = _init_scale(name, config)
        if scale is None:
            value = np.ones(shape) if "norm" in name else np.zeros(shape)
        else:
            value = rng.normal(0.0, scale, size=shape)
        params[name] = value.astype(dtype)
    return params


# ---------------------------------------------------------------------------
# sublayers (forward + backward pairs)


def _attn_sublayer_fwd(params, key, norm_name, x, kv, bias, mask, config, rng):
    """Pre-norm attention sublayer with residual. ``kv=None`` means self-attention."""
    normed, c_norm = rms_norm_fwd(x, params[norm_name])
    kv_src = normed if kv is None else kv
    q2, c_q = linear_fwd(normed, params[f"{key}.q"])
    k2, c_k = linear_fwd(kv_src, params[f"{key}.k"])
    v2, c_v = linear_fwd(kv_src, params[f"{key}.v"])
    heads = config.num_heads
    ctx, c_att = attention_core_fwd(
        split_heads(q2, heads),
        split_heads(k2, heads),
        split_heads(v2, heads),
        bias,
        mask,
        config.dropout,
        rng,
    )
    merged = merge_heads(ctx)
    out, c_o = linear_fwd(merged, params[f"{key}.o"])
    out, c_drop = dropout_fwd(out, config.dropout, rng)
    cache = (c_norm, c_q, c_k, c_v, c_att, c_o, c_drop, kv is None)
    return x + out, cache


def _attn_sublayer_bwd(dy, cache, params, key, norm_name, grads, config):
    """Returns (dx, d_kv, dscores); d_kv is None for self-attention."""
    c_norm, c_q, c_k, c_v, c_att, c_o, c_drop, is_self = cache
    dout = dropout_bwd(dy, c_drop)
    dmerged, dwo = linear_bwd(dout, c_o)
    _acc(grads, f"{key}.o", dwo)
    dctx = split_heads(dmerged, config.num_heads)
    dq, dk, dv, dscores = attention_core_bwd(dctx, c_att)
    dnormed, dwq = linear_bwd(merge_heads(dq), c_q)
    _acc(grads, f"{key}.q", dwq)
    dkv_k, dwk = linear_bwd(merge_heads(dk), c_k)
    _acc(grads, f"{key}.k", dwk)
    dkv_v, dwv = linear_bwd(merge_heads(dv), c_v)
    _acc(grads, f"{key}.v", dwv)
    d_kv = None
    if is_self:
        dnormed = dnormed + dkv_k + dkv_v
    else:
        d_kv = dkv_k + dkv_v
    dx_norm, dgain = rms_norm_bwd(dnormed, c_norm)
    _acc(grads, norm_name, dgain)
    return dy + dx_norm, d_kv, dscores


def _ffn_sublayer_fwd(params, prefix, norm_name, x, config, rng):
    normed, c_norm = rms_norm_fwd(x, params[norm_name])
    if config.ffn_variant == "relu":
        mid, c_in = linear_fwd(normed, params[f"{prefix}.ffn.wi"])
        act, c_act = relu_fwd(mid)
        act, c_hdrop = dropout_fwd(act, config.dropout, rng)
        out, c_out = linear_fwd(act, params[f"{prefix}.ffn.wo"])
        variant_cache = (c_in, c_act, c_hdrop, c_out)
    else:
        gate_in, c_g = linear_fwd(normed, params[f"{prefix}.ffn.wi0"])
        gate, c_act = gelu_fwd(gate_in)
        lin, c_l = linear_fwd(normed, params[f"{prefix}.ffn.wi1"])
        prod = gate * lin
        prod_d, c_hdrop = dropout_fwd(prod, config.dropout, rng)
        out, c_out = linear_fwd(prod_d, params[f"{prefix}.ffn.wo"])
        variant_cache = (c_g, c_act, c_l, gate, lin, c_hdrop, c_out)
    out, c_drop = dropout_fwd(out, config.dropout, rng)
    return x + out, (c_norm, variant_cache, c_drop)


def _ffn_sublayer_bwd(dy, cache, params, prefix, norm_name, grads, config):
    c_norm, variant_cache, c_drop = cache
    dout = dropout_bwd(dy, c_drop)
    if config.ffn_variant == "relu":
        c_in, c_act, c_hdrop, c_out = variant_cache
        dact, dwo = linear_bwd(dout, c_out)
        _acc(grads, f"{prefix}.ffn.wo", dwo)
        dact = dropout_bwd(dact, c_hdrop)
        dmid = relu_bwd(dact, c_act)
        dnormed, dwi = linear_bwd(dmid, c_in)
        _acc(grads, f"{prefix}.ffn.wi", dwi)
    else:
        c_g, c_act, c_l, gate, lin, c_hdrop, c_out = variant_cache
        dprod, dwo = linear_bwd(dout, c_out)
        _acc(grads, f"{prefix}.ffn.wo", dwo)
        dprod = dropout_bwd(dprod, c_hdrop)
        dgate = dprod * lin
        dlin = dprod * gate
        dgate_in = gelu_bwd(dgate, c_act)
        dnormed_g, dwi0 = linear_bwd(dgate_in, c_g)
        _acc(grads, f"{prefix}.ffn.wi0", dwi0)
        dnormed_l, dwi1 = linear_bwd(dlin, c_l)
        _acc(grads, f"{prefix}.ffn.wi1", dwi1)
        dnormed = dnormed_g + dnormed_l
    dx_norm, dgain = rms_norm_bwd(dnormed, c_norm)
    _acc(grads, norm_name, dgain)
    return dy + dx_norm


def _acc(grads: dict, name: str, value: np.ndarray) -> None:
    if name in grads:
        grads[name] += value
    else:
        grads[name] = value


# ---------------------------------------------------------------------------
# encoder / decoder stacks


def encoder_forward(params, config, x, src_mask, rng=None):
    """x (B, n, pose_dim) -> states (B, n, d_model); caches for backward."""
    proj, c_proj = linear_fwd(x, params["proj.w"])
    h = proj + params["proj.b"]
    h, c_in_drop = dropout_fwd(h, config.dropout, rng)
    n = x.shape[1]
    bias, buckets = relative_bias(
        params["enc.rel_bias"], n, n, bidirectional=True, max_distance=config.rel_max_distance
    )
    mask = src_mask[:, None, None, :]
    layer_caches = []
    for i in range(config.num_layers):
        h, c_attn = _attn_sublayer_fwd(
            params, f"enc.{i}.self", f"enc.{i}.norm1", h, None, bias, mask, config, rng
        )
        h, c_ffn = _ffn_sublayer_fwd(params, f"enc.{i}", f"enc.{i}.norm2", h, config, rng)
        layer_caches.append((c_attn, c_ffn))
    h, c_final = rms_norm_fwd(h, params["enc.final_norm"])
    return h, (c_proj, c_in_drop, buckets, layer_caches, c_final)


def encoder_backward(dstates, cache, params, config, grads):
    c_proj, c_in_drop, buckets, layer_caches, c_final = cache
    dh, dgain = rms_norm_bwd(dstates, c_final)
    _acc(grads, "enc.final_norm", dgain)
    dbias_total = None
    for i in reversed(range(config.num_layers)):
        c_attn, c_ffn = layer_caches[i]
        dh = _ffn_sublayer_bwd(dh, c_ffn, params, f"enc.{i}", f"enc.{i}.norm2", grads, config)
        dh, _, dscores = _attn_sublayer_bwd(
            dh, c_attn, params, f"enc.{i}.self", f"enc.{i}.norm1", grads, config
        )
        dbias_total = dscores if dbias_total is None else dbias_total + dscores
    _acc(
        grads,
        "enc.rel_bias",
        _scatter_bias_grad(dbias_total, buckets, config.rel_buckets, params["enc.rel_bias"].dtype),
    )
    dh = dropout_bwd(dh, c_in_drop)
    _acc(grads, "proj.b", dh.sum(axis=(0, 1)))
    dx, dwproj = linear_bwd(dh, c_proj)
    _acc(grads, "proj.w", dwproj)
    return dx


def decoder_forward(params, config, dec_in, dec_mask, enc_states, src_mask, rng=None):
    """dec_in (B, T) token ids -> logits (B, T, vocab); caches for backward."""
    emb, c_emb = embedding_fwd(dec_in, params["embed.w"])
    h, c_in_drop = dropout_fwd(emb, config.dropout, rng)
    t = dec_in.shape[1]
    bias, buckets = relative_bias(
        params["dec.rel_bias"], t, t, bidirectional=False, max_distance=config.rel_max_distance
    )
    causal = np.tril(np.ones((t, t), dtype=bool))
    self_mask = dec_mask[:, None, None, :] & causal[None, None]
    cross_mask = src_mask[:, None, None, :]
    layer_caches = []
    for i in range(config.num_layers):
        h, c_self = _attn_sublayer_fwd(
            params, f"dec.{i}.self", f"dec.{i}.norm1", h, None, bias, self_mask, config, rng
        )
        h, c_cross = _attn_sublayer_fwd(
            params, f"dec.{i}.cross", f"dec.{i}.norm2", h, enc_states, None, cross_mask, config, rng
        )
        h, c_ffn = _ffn_sublayer_fwd(params, f"dec.{i}", f"dec.{i}.norm3", h, config, rng)
        layer_caches.append((c_self, c_cross, c_ffn))
    h, c_final = rms_norm_fwd(h, params["dec.final_norm"])
    out_matrix = params["embed.w"].T if config.tie_output_embedding else params["lm_head.w"]
    logits, c_head = linear_fwd(h, out_matrix)
    return logits, (c_emb, c_in_drop, buckets, layer_caches, c_final, c_head)


def decoder_backward(dlogits, cache, params, config, grads):
    """Returns gradient w.r.t. the encoder states."""
    c_emb, c_in_drop, buckets, layer_caches, c_final, c_head = cache
    dh, dhead = linear_bwd(dlogits, c_head)
    if config.tie_output_embedding:
        _acc(grads, "embed.w", dhead.T)
    else:
        _acc(grads, "lm_head.w", dhead)
    dh, dgain = rms_norm_bwd(dh, c_final)
    _acc(grads, "dec.final_norm", dgain)
    d_enc = None
    dbias_total = None
    for i in reversed(range(config.num_layers)):
        c_self, c_cross, c_ffn = layer_caches[i]
        dh = _ffn_sublayer_bwd(dh, c_ffn, params, f"dec.{i}", f"dec.{i}.norm3", grads, config)
        dh, d_kv, _ = _attn_sublayer_bwd(
            dh, c_cross, params, f"dec.{i}.cross", f"dec.{i}.norm2", grads, config
        )
        d_enc = d_kv if d_enc is None else d_enc + d_kv
        dh, _, dscores = _attn_sublayer_bwd(
            dh, c_self, params, f"dec.{i}.self", f"dec.{i}.norm1", grads, config
        )
        dbias_total = dscores if dbias_total is None else dbias_total + dscores
    _acc(
        grads,
        "dec.rel_bias",
        _scatter_bias_grad(dbias_total, buckets, config.rel_buckets, params["dec.rel_bias"].dtype),
    )
    dh = dropout_bwd(dh, c_in_drop)
    _acc(grads, "embed.w", embedding_bwd(dh, c_emb))
    return d_enc


# ---------------------------------------------------------------------------
# model facade


@dataclass
class EncodedSource:
    """Encoder output for one clip: (n, d_model) states and their validity mask."""

    states: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        self.mask = np.asarray(self.mask, dtype=bool)


class Seq2SeqTransformer:
    """Configuration + parameters + the forward/backward machinery.

    Parameters are immutable during inference; training (the single writer)
    updates them in place through the optimizer.
    """

    def __init__(self, config: ModelConfig, params=None, seed: int = 0, dtype=None):
        self.config = config
        if dtype is None:
            dtype = params["proj.w"].dtype if params is not None else np.float32
        self.dtype = np.dtype(dtype)
        self.params = params if params is not None else init_params(config, seed, self.dtype)
        audit = parameter_shapes(config)
        actual = {k: v.shape for k, v in self.params.items()}
        if actual != audit:
            raise SchemaError("parameter set does not match the config's tensor inventory")

    # -- batched core -------------------------------------------------------

    def encode_batch(self, x, src_mask, rng=None, with_cache=False):
        x = np.ascontiguousarray(x, dtype=self.dtype)
        if x.ndim != 3 or x.shape[2] != self.config.pose_dim:
            raise ShapeError(f"expected (B, n, {self.config.pose_dim}) input, got {x.shape}")
        if x.shape[1] == 0:
            raise EmptyInputError("cannot encode a clip with zero frames")
        if x.shape[1] > self.config.max_input_frames:
            raise ShapeError(
                f"{x.shape[1]} frames exceeds the {self.config.max_input_frames}-frame cap; "
                "truncate upstream"
            )
        states, cache = encoder_forward(self.params, self.config, x, src_mask, rng)
        return (states, cache) if with_cache else states

    def decode_batch(self, dec_in, dec_mask, enc_states, src_mask, rng=None, with_cache=False):
        logits, cache = decoder_forward(
            self.params, self.config, dec_in, dec_mask, enc_states, src_mask, rng
        )
        return (logits, cache) if with_cache else logits

    def forward_train(self, x, src_mask, dec_in, dec_mask, rng=None):
        states, enc_cache = self.encode_batch(x, src_mask, rng, with_cache=True)
        logits, dec_cache = self.decode_batch(
            dec_in, dec_mask, states, src_mask, rng, with_cache=True
        )
        return logits, (enc_cache, dec_cache)

    def backward_train(self, dlogits, cache):
        enc_cache, dec_cache = cache
        grads: dict[str, np.ndarray] = {}
        d_enc = decoder_backward(dlogits, dec_cache, self.params, self.config, grads)
        encoder_backward(d_enc, enc_cache, self.params, self.config, grads)
        for name in self.params:
            if name not in grads:
                grads[name] = np.zeros_like(self.params[name])
        return grads


# ---------------------------------------------------------------------------
# single-clip operations


def project_pose(frame_vec, params):
    """255-vector -> d_model-vector through the input projection."""
    vec = np.asarray(frame_vec)
    if vec.shape != (params["proj.w"].shape[0],):
        raise ShapeError(f"expected shape ({params['proj.w'].shape[0]},), got {vec.shape}")
    return vec @ params["proj.w"] + params["proj.b"]


def encode(clip_vectors, params, config: ModelConfig) -> EncodedSource:
    """Encode one clip's (n, 255) frame matrix into an EncodedSource."""
    model = Seq2SeqTransformer(config, params)
    x = np.asarray(clip_vectors, dtype=model.dtype)
    if x.ndim != 2:
        raise ShapeError(f"expected (n, {config.pose_dim}), got {x.shape}")
    mask = np.ones((1, x.shape[0]), dtype=bool)
    states = model.encode_batch(x[None], mask)
    return EncodedSource(states=states[0], mask=mask[0])


def decode_step(prefix_tokens, encoded: EncodedSource, params, config: ModelConfig):
    """Next-token logits after ``prefix_tokens`` (empty prefix = first step).

    The decoder is seeded with the pad token as start symbol, so position t's
    logits depend only on tokens before t.
    """
    prefix = list(prefix_tokens)
    if len(prefix) > config.max_output_tokens:
        raise ShapeError(
            f"prefix of {len(prefix)} tokens exceeds the {config.max_output_tokens}-token cap"
        )
    model = Seq2SeqTransformer(config, params)
    dec_in = np.asarray([[PAD_ID] + prefix], dtype=np.int64)
    dec_mask = np.ones_like(dec_in, dtype=bool)
    logits = model.decode_batch(dec_in, dec_mask, encoded.states[None], encoded.mask[None])
    return logits[0, -1]


def forward_teacher_forced(clip_vectors, target_ids, params, config: ModelConfig):
    """Per-position logits (T, vocab) for a gold target sequence."""
    targets = np.asarray(target_ids, dtype=np.int64)
    if targets.ndim != 1 or targets.size == 0:
        raise ShapeError("target_ids must be a non-empty 1-D sequence")
    if targets.size > config.max_output_tokens:
        raise ShapeError(
            f"{targets.size} target tokens exceed the {config.max_output_tokens}-token cap"
        )
    encoded = encode(clip_vectors, params, config)
    model = Seq2SeqTransformer(config, params)
    dec_in = np.concatenate([[PAD_ID], targets[:-1]])[None]
    dec_mask = np.ones_like(dec_in, dtype=bool)
    logits = model.decode_batch(dec_in, dec_mask, encoded.states[None], encoded.mask[None])
    return logits[0]


# ---------------------------------------------------------------------------
# checkpoints


def save_checkpoint(path, params, config: ModelConfig, vocab_hash: str = "") -> None:
    """Self-describing checkpoint: named little-endian float32 tensors plus
    the embedded config and the vocabulary digest."""
    arrays = {name: np.ascontiguousarray(value, dtype="<f4") for name, value in params.items()}
    arrays["__config__"] = np.array(json.dumps(config.to_dict()))
    arrays["__vocab_hash__"] = np.array(vocab_hash)
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_checkpoint(path):
    """Load (params, config, vocab_hash); every shape is validated against the config."""
    with np.load(path, allow_pickle=False) as data:
        if "__config__" not in data:
            raise SchemaError(f"{path}: not a model checkpoint (missing embedded config)")
        config = ModelConfig.from_dict(json.loads(str(data["__config__"])))
        vocab_hash = str(data["__vocab_hash__"])
        expected = parameter_shapes(config)
        params = {}
        for name, shape in expected.items():
            if name not in data:
                raise SchemaError(f"{path}: checkpoint is missing tensor {name!r}")
            arr = data[name]
            if arr.shape != shape:
                raise SchemaError(
                    f"{path}: tensor {name!r} has shape {arr.shape}, config requires {shape}"
                )
            if not np.isfinite(arr).all():
                raise SchemaError(f"{path}: tensor {name!r} contains non-finite values")
            params[name] = arr.astype(np.float32)
        extras = set(data.files) - set(expected) - {"__config__", "__vocab_hash__"}
        if extras:
            raise SchemaError(f"{path}: unexpected tensors {sorted(extras)}")
    return params, config, vocab_hash
