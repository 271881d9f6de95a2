"""Autoregressive generation: greedy decoding and beam search.

Scores are sums of token log-probabilities; final ranking divides by
``length ** length_alpha`` (alpha = 1 averages the log-probability).
All tie-breaks are lexicographic on the token ids, so decoding is
deterministic regardless of evaluation order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ModelConfig
from .exceptions import ConfigError
from .functional import log_softmax
from .transformer import Seq2SeqTransformer
from .vocabulary import EOS_ID, PAD_ID

__all__ = ["BeamHypothesis", "greedy_decode", "greedy_decode_batch", "beam_search"]


@dataclass(frozen=True)
class BeamHypothesis:
    """A (partial) decode: emitted tokens, their summed log-probability, and
    whether eos has been emitted. ``tokens`` includes the terminal eos."""

    tokens: tuple[int, ...]
    logprob_sum: float
    finished: bool

    def normalized_score(self, length_alpha: float) -> float:
        return self.logprob_sum / max(len(self.tokens), 1) ** length_alpha

    @property
    def output_tokens(self) -> tuple[int, ...]:
        """Tokens with the terminal eos stripped."""
        return self.tokens[:-1] if self.finished else self.tokens


def _frame_matrix(clip):
    if hasattr(clip, "frames"):
        from .pose import clip_matrix

        return clip_matrix(clip)
    return np.asarray(clip)


def greedy_decode(model: Seq2SeqTransformer, clip, max_len: int = 128) -> list[int]:
    """Repeatedly append the argmax token (ties -> lowest id) until eos/max_len."""
    x = _frame_matrix(clip).astype(model.dtype)
    mask = np.ones((1, x.shape[0]), dtype=bool)
    return greedy_decode_batch(model, x[None], mask, max_len)[0]


def greedy_decode_batch(model: Seq2SeqTransformer, x, src_mask, max_len: int = 128):
    """Greedy decode a padded batch; returns per-clip token lists (eos stripped)."""
    enc_states = model.encode_batch(x, src_mask)
    batch = x.shape[0]
    dec = np.full((batch, 1), PAD_ID, dtype=np.int64)
    done = np.zeros(batch, dtype=bool)
    outputs: list[list[int]] = [[] for _ in range(batch)]
    for _ in range(max_len):
        dec_mask = np.ones_like(dec, dtype=bool)
        logits = model.decode_batch(dec, dec_mask, enc_states, src_mask)[:, -1, :]
        nxt = np.argmax(logits, axis=-1)
        for i in range(batch):
            if done[i]:
                continue
            if nxt[i] == EOS_ID:
                done[i] = True
            else:
                outputs[i].append(int(nxt[i]))
        if done.all():
            break
        dec = np.concatenate([dec, nxt[:, None]], axis=1)
    return outputs


def beam_search(
    model: Seq2SeqTransformer,
    clip,
    beam: int = 5,
    max_len: int = 128,
    length_alpha: float = 1.0,
    return_nbest: bool = False,
):
    """Beam search over token sequences.

    Live hypotheses are pruned to the global top ``beam`` by raw summed
    log-probability; hypotheses emitting eos move to a finished pool. The
    search stops once the best finished normalized score strictly beats the
    optimistic bound of every live hypothesis (its sum assuming a cost-free
    completion at the longest allowed length, valid because future token
    log-probabilities are never positive).

    Returns the best sequence (eos stripped); with ``return_nbest=True``,
    also every terminal hypothesis ranked best-first.
    """
    if beam < 1:
        raise ConfigError(f"beam must be >= 1, got {beam}")
    if max_len < 1:
        raise ConfigError(f"max_len must be >= 1, got {max_len}")
    x = _frame_matrix(clip).astype(model.dtype)
    src_mask = np.ones((1, x.shape[0]), dtype=bool)
    enc_states = model.encode_batch(x[None], src_mask)

    live = [BeamHypothesis(tokens=(), logprob_sum=0.0, finished=False)]
    finished: list[BeamHypothesis] = []
    vocab = model.config.vocab_size
    top_k = min(beam, vocab)

    for step in range(max_len):
        dec = np.array(
            [(PAD_ID,) + hyp.tokens for hyp in live], dtype=np.int64
        )  # all live share length == step
        dec_mask = np.ones_like(dec, dtype=bool)
        states = np.broadcast_to(enc_states, (len(live),) + enc_states.shape[1:])
        masks = np.broadcast_to(src_mask, (len(live), src_mask.shape[1]))
        logits = model.decode_batch(dec, dec_mask, states, masks)[:, -1, :]
        logprobs = log_softmax(logits.astype(np.float64))

        candidates: list[BeamHypothesis] = []
        for hyp, row in zip(live, logprobs):
            token_ids = np.argsort(-row, kind="stable")[:top_k]
            for token in token_ids:
                token = int(token)
                candidates.append(
                    BeamHypothesis(
                        tokens=hyp.tokens + (token,),
                        logprob_sum=hyp.logprob_sum + float(row[token]),
                        finished=token == EOS_ID,
                    )
                )
        candidates.sort(key=lambda h: (-h.logprob_sum, h.tokens))
        finished.extend(h for h in candidates if h.finished)
        live = [h for h in candidates if not h.finished][:beam]

        if not live:
            break
        if finished:
            best_done = max(h.normalized_score(length_alpha) for h in finished)
            bound = max(h.logprob_sum for h in live) / max_len**length_alpha
            if best_done > bound:
                break

    pool = finished + live  # any surviving live hypotheses have length max_len
    pool.sort(key=lambda h: (-h.normalized_score(length_alpha), h.tokens))
    best = list(pool[0].output_tokens)
    return (best, pool) if return_nbest else best
