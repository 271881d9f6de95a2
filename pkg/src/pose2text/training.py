"""Teacher-forced training: label-smoothed cross-entropy, AdaFactor with
factored second moments, global-norm gradient clipping, and a linear
warm-up to a constant learning rate.

The loss is averaged over non-pad target tokens. Internally the trainer
accumulates token-summed gradients across micro-batches and normalizes once
per optimizer step, so splitting an effective batch into micro-batches
cannot change the update.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .config import ModelConfig, TrainConfig
from .decoding import greedy_decode_batch
from .exceptions import ConfigError, EmptyInputError, NonFiniteUpdateError
from .functional import log_softmax
from .metrics import corpus_bleu
from .pose import PoseClip, clip_matrix, truncate_frames
from .seeding import substream
from .transformer import Seq2SeqTransformer, save_checkpoint
from .vocabulary import PAD_ID, Vocabulary

__all__ = [
    "label_smoothed_loss",
    "loss_and_grad_sums",
    "clip_gradients",
    "Adafactor",
    "adafactor_step",
    "lr_at",
    "train",
    "TrainResult",
]


# ---------------------------------------------------------------------------
# loss


def _smoothed_nll(logits, targets, mask, label_smoothing):
    """Summed smoothed NLL + token count + unnormalized dlogits.

    ``dlogits`` is (softmax - smoothed_target) at valid positions and zero
    elsewhere; divide by the token count for the gradient of the mean loss.
    """
    logits = np.asarray(logits)
    targets = np.asarray(targets, dtype=np.int64)
    if mask is None:
        mask = np.ones(targets.shape, dtype=bool)
    mask = np.asarray(mask, dtype=bool)
    count = int(mask.sum())
    if count == 0:
        raise EmptyInputError("all positions are padded; mean loss is undefined")
    vocab = logits.shape[-1]
    if targets.min() < 0 or targets.max() >= vocab:
        raise ConfigError(f"targets must lie in [0, {vocab})")
    logp = log_softmax(logits)
    eps = label_smoothing
    flat_lp = logp.reshape(-1, vocab)
    flat_t = targets.reshape(-1)
    flat_m = mask.reshape(-1)
    gold_lp = flat_lp[np.arange(flat_t.size), flat_t]
    per_pos = -(1.0 - eps) * gold_lp - (eps / vocab) * flat_lp.sum(axis=-1)
    nll_sum = float(per_pos[flat_m].sum())

    probs = np.exp(flat_lp)
    dflat = probs
    dflat[np.arange(flat_t.size), flat_t] -= 1.0 - eps
    dflat -= eps / vocab
    dflat[~flat_m] = 0.0
    return nll_sum, count, dflat.reshape(logits.shape)


def label_smoothed_loss(logits, targets, pad_mask=None, label_smoothing=0.1) -> float:
    """Mean over non-pad positions of the label-smoothed cross-entropy.

    The smoothed target mixes the one-hot gold with a uniform 1/vocab
    component: ``q = (1 - eps) * onehot + eps / vocab``.
    """
    if not 0.0 <= label_smoothing < 1.0:
        raise ConfigError(f"label_smoothing must be in [0, 1), got {label_smoothing}")
    nll_sum, count, _ = _smoothed_nll(logits, targets, pad_mask, label_smoothing)
    return nll_sum / count


def loss_and_grad_sums(logits, targets, pad_mask, label_smoothing):
    """(summed loss, token count, summed dlogits) for accumulation."""
    return _smoothed_nll(logits, targets, pad_mask, label_smoothing)


# ---------------------------------------------------------------------------
# gradient clipping


def clip_gradients(grads: dict, max_norm: float = 1.0) -> float:
    """Scale all gradients in place so their global L2 norm is <= max_norm.

    Returns the pre-clip global norm. Non-finite gradients abort the step.
    """
    if max_norm <= 0:
        raise ConfigError(f"max_norm must be > 0, got {max_norm}")
    total = 0.0
    for g in grads.values():
        total += float(np.sum(np.square(g, dtype=np.float64)))
    if not math.isfinite(total):
        raise NonFiniteUpdateError("gradient norm is not finite; step aborted")
    norm = math.sqrt(total)
    if norm > max_norm:
        scale = max_norm / norm
        for g in grads.values():
            g *= scale
    return norm


# ---------------------------------------------------------------------------
# AdaFactor


@dataclass
class _MomentState:
    row: np.ndarray | None = None  # row means of squared grads (matrices)
    col: np.ndarray | None = None
    full: np.ndarray | None = None  # dense second moment (vectors/scalars)


class Adafactor:
    """Factored-second-moment optimizer driven by an external constant LR.

    Matrices keep per-row and per-column EMA statistics of the squared
    gradient; vectors keep the full moment. Updates are RMS-clipped at 1.0.
    Parameter-scaled and relative-step features are disabled: the learning
    rate is exactly what the caller passes.
    """

    def __init__(self, params: dict, eps1: float = 1e-30, decay_exponent: float = -0.8,
                 clip_threshold: float = 1.0):
        self.eps1 = eps1
        self.decay_exponent = decay_exponent
        self.clip_threshold = clip_threshold
        self.step_count = 0
        self.state: dict[str, _MomentState] = {}
        for name, value in params.items():
            st = _MomentState()
            if value.ndim >= 2:
                st.row = np.zeros(value.shape[:-1], dtype=np.float64)
                st.col = np.zeros(value.shape[:-2] + value.shape[-1:], dtype=np.float64)
            else:
                st.full = np.zeros(value.shape, dtype=np.float64)
            self.state[name] = st

    def _beta(self) -> float:
        return 1.0 - self.step_count**self.decay_exponent

    def step(self, params: dict, grads: dict, lr: float) -> None:
        """One update: params <- params - lr * preconditioned(grads)."""
        if lr < 0:
            raise ConfigError(f"lr must be >= 0, got {lr}")
        self.step_count += 1
        beta = self._beta()
        for name, param in params.items():
            grad = np.asarray(grads[name], dtype=np.float64)
            update = self._preconditioned(name, grad, beta)
            rms = math.sqrt(float(np.mean(np.square(update)))) if update.size else 0.0
            update /= max(1.0, rms / self.clip_threshold)
            if not np.isfinite(update).all():
                raise NonFiniteUpdateError(f"non-finite update for tensor {name!r}; step aborted")
            param -= (lr * update).astype(param.dtype)

    def _preconditioned(self, name: str, grad: np.ndarray, beta: float) -> np.ndarray:
        st = self.state[name]
        sq = np.square(grad) + self.eps1
        if st.full is not None:
            st.full *= beta
            st.full += (1.0 - beta) * sq
            return grad / np.sqrt(st.full + self.eps1)
        st.row *= beta
        st.row += (1.0 - beta) * sq.mean(axis=-1)
        st.col *= beta
        st.col += (1.0 - beta) * sq.mean(axis=-2)
        denom = np.sqrt(
            st.row[..., None] * st.col[..., None, :] / st.row.mean(axis=-1, keepdims=True)[..., None]
        )
        return grad / denom


def adafactor_step(params: dict, grads: dict, state: Adafactor, lr: float) -> None:
    """Apply one AdaFactor update in place (see :class:`Adafactor`)."""
    state.step(params, grads, lr)


# ---------------------------------------------------------------------------
# learning-rate schedule


def lr_at(progress_epochs: float, config: TrainConfig) -> float:
    """Linear warm-up to ``lr_max`` over ``warmup_epochs``, constant after."""
    if progress_epochs < 0:
        raise ConfigError(f"progress must be >= 0, got {progress_epochs}")
    if config.warmup_epochs == 0:
        return config.lr_max
    return config.lr_max * min(1.0, progress_epochs / config.warmup_epochs)


# ---------------------------------------------------------------------------
# training loop


@dataclass
class TrainResult:
    model: Seq2SeqTransformer
    history: list[dict] = field(default_factory=list)
    best_dev_bleu4: float | None = None
    best_epoch: int | None = None
    skipped_steps: int = 0


def _prepare_examples(clips, vocab: Vocabulary, config: ModelConfig):
    examples = []
    for clip in clips:
        if clip.text is None:
            raise ConfigError(f"clip {clip.id!r} has no reference text")
        clip = truncate_frames(clip, config.max_input_frames)
        x = clip_matrix(clip).astype(np.float32)
        ids = vocab.encode(clip.text, config.max_output_tokens)
        examples.append((x, np.asarray(ids, dtype=np.int64)))
    return examples


def _pad_micro_batch(examples):
    """Pad to per-batch max lengths; returns model-ready arrays."""
    xs = [x for x, _ in examples]
    ts = [t for _, t in examples]
    b = len(examples)
    n_max = max(x.shape[0] for x in xs)
    t_max = max(t.size for t in ts)
    x_pad = np.zeros((b, n_max, xs[0].shape[1]), dtype=np.float32)
    src_mask = np.zeros((b, n_max), dtype=bool)
    targets = np.full((b, t_max), PAD_ID, dtype=np.int64)
    tgt_mask = np.zeros((b, t_max), dtype=bool)
    for i, (x, t) in enumerate(examples):
        x_pad[i, : x.shape[0]] = x
        src_mask[i, : x.shape[0]] = True
        targets[i, : t.size] = t
        tgt_mask[i, : t.size] = True
    dec_in = np.concatenate([np.full((b, 1), PAD_ID, dtype=np.int64), targets[:, :-1]], axis=1)
    # decoder self-attention keys: the start pad plus every real target position
    dec_key_mask = np.concatenate([np.ones((b, 1), dtype=bool), tgt_mask[:, :-1]], axis=1)
    return x_pad, src_mask, dec_in, dec_key_mask, targets, tgt_mask


def _greedy_hypotheses(model, examples, batch_size=64):
    hyps = []
    for start in range(0, len(examples), batch_size):
        chunk = examples[start : start + batch_size]
        xs = [x for x, _ in chunk]
        n_max = max(x.shape[0] for x in xs)
        x_pad = np.zeros((len(chunk), n_max, xs[0].shape[1]), dtype=np.float32)
        src_mask = np.zeros((len(chunk), n_max), dtype=bool)
        for i, x in enumerate(xs):
            x_pad[i, : x.shape[0]] = x
            src_mask[i, : x.shape[0]] = True
        hyps.extend(greedy_decode_batch(model, x_pad, src_mask, model.config.max_output_tokens))
    return hyps


def train(
    train_clips: list[PoseClip],
    dev_clips: list[PoseClip] | None,
    vocab: Vocabulary,
    model_config: ModelConfig,
    train_config: TrainConfig,
    *,
    initial_params: dict | None = None,
) -> TrainResult:
    """Run the full recipe and return the best-dev model (final if no dev set).

    Per optimizer step, gradients are accumulated over
    ``effective_batch / micro_batch`` micro-batches, normalized by the total
    non-pad token count, clipped to ``clip_norm`` and applied by AdaFactor at
    the warm-up-scheduled rate. Everything is reproducible from the seed.
    """
    if not train_clips:
        raise ConfigError("training set is empty")
    if model_config.vocab_size != len(vocab):
        raise ConfigError(
            f"model vocab_size {model_config.vocab_size} != vocabulary size {len(vocab)}"
        )
    model = Seq2SeqTransformer(model_config, params=initial_params, seed=train_config.seed)
    optimizer = Adafactor(model.params)
    examples = _prepare_examples(train_clips, vocab, model_config)
    dev_examples = _prepare_examples(dev_clips, vocab, model_config) if dev_clips else None
    dev_refs = [c.text for c in dev_clips] if dev_clips else None

    shuffle_rng = substream(train_config.seed, "shuffle")
    dropout_rng = substream(train_config.seed, "dropout") if model_config.dropout > 0 else None
    steps_per_epoch = max(1, math.ceil(len(examples) / train_config.effective_batch))
    micro_per_step = train_config.effective_batch // train_config.micro_batch

    result = TrainResult(model=model)
    best_params = None
    log_fh = open(train_config.log_path, "w", encoding="utf-8") if train_config.log_path else None
    try:
        for epoch in range(1, train_config.epochs + 1):
            order = shuffle_rng.permutation(len(examples))
            epoch_nll = 0.0
            epoch_tokens = 0
            last_norm = 0.0
            lr = 0.0
            micro_start = 0
            while micro_start < len(order):
                step_indices = order[micro_start : micro_start + train_config.effective_batch]
                micro_start += train_config.effective_batch
                acc_grads: dict[str, np.ndarray] = {}
                acc_nll = 0.0
                acc_tokens = 0
                step_ok = True
                for m in range(0, len(step_indices), train_config.micro_batch):
                    chunk = [examples[i] for i in step_indices[m : m + train_config.micro_batch]]
                    x, src_mask, dec_in, dec_key_mask, targets, tgt_mask = _pad_micro_batch(chunk)
                    logits, cache = model.forward_train(
                        x, src_mask, dec_in, dec_key_mask, rng=dropout_rng
                    )
                    nll, count, dlogits = loss_and_grad_sums(
                        logits, targets, tgt_mask, train_config.label_smoothing
                    )
                    if not math.isfinite(nll):
                        step_ok = False
                        break
                    grads = model.backward_train(dlogits.astype(logits.dtype), cache)
                    for name, g in grads.items():
                        if name in acc_grads:
                            acc_grads[name] += g
                        else:
                            acc_grads[name] = g
                    acc_nll += nll
                    acc_tokens += count
                if not step_ok:
                    result.skipped_steps += 1
                    continue
                for g in acc_grads.values():
                    g /= acc_tokens
                try:
                    last_norm = clip_gradients(acc_grads, train_config.clip_norm)
                    progress = (optimizer.step_count + 1) / steps_per_epoch
                    lr = lr_at(progress, train_config)
                    optimizer.step(model.params, acc_grads, lr)
                except NonFiniteUpdateError:
                    result.skipped_steps += 1
                    continue
                epoch_nll += acc_nll
                epoch_tokens += acc_tokens
            record = {
                "epoch": epoch,
                "step": optimizer.step_count,
                "lr": lr,
                "train_loss": epoch_nll / max(epoch_tokens, 1),
                "dev_bleu4": None,
                "grad_norm": last_norm,
                "skipped_steps": result.skipped_steps,
            }
            if dev_examples:
                hyp_ids = _greedy_hypotheses(model, dev_examples)
                hypotheses = [vocab.decode(ids) for ids in hyp_ids]
                record["dev_bleu4"] = corpus_bleu(hypotheses, dev_refs).bleu_n[4]
                if result.best_dev_bleu4 is None or record["dev_bleu4"] > result.best_dev_bleu4:
                    result.best_dev_bleu4 = record["dev_bleu4"]
                    result.best_epoch = epoch
                    best_params = {k: v.copy() for k, v in model.params.items()}
                    if train_config.checkpoint_path:
                        save_checkpoint(
                            train_config.checkpoint_path,
                            model.params,
                            model_config,
                            vocab.content_hash(),
                        )
            result.history.append(record)
            if log_fh:
                log_fh.write(json.dumps(record) + "\n")
                log_fh.flush()
    finally:
        if log_fh:
            log_fh.close()
    if best_params is not None:
        model.params = best_params
    elif train_config.checkpoint_path:
        save_checkpoint(train_config.checkpoint_path, model.params, model_config, vocab.content_hash())
    return result
