"""Deterministic synthetic gesture corpus: pose clips paired with sentences.

Each lexicon word owns a short template of pose frames; a sentence is
rendered by concatenating its word templates, adding clamped Gaussian
jitter, and resampling to the requested frame rate. The mapping from
pose windows to words is therefore exact in the noise-free case, which
makes the corpus fully learnable at desk scale.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigError, GenerationError, LexiconMissError
from .pose import NUM_KEYPOINTS, PoseClip, resample_fps
from .seeding import substream

_SEPARABILITY_FACTOR = 10.0
_MAX_REGEN_ATTEMPTS = 20


@dataclass
class SynthConfig:
    """Knobs for corpus generation. Defaults give a 3-8 word, 24 fps corpus."""

    vocab_size: int = 50
    min_words: int = 3
    max_words: int = 8
    frames_per_word: int = 8
    base_fps: int = 24
    jitter_sigma: float = 0.01
    train_size: int = 2000
    dev_size: int = 200
    test_size: int = 200
    seed: int = 7

    def __post_init__(self):
        if self.vocab_size < 2:
            raise ConfigError(f"vocab_size must be >= 2, got {self.vocab_size}")
        if self.min_words < 1 or self.max_words < self.min_words:
            raise ConfigError(
                f"sentence length range [{self.min_words}, {self.max_words}] is invalid"
            )
        if self.frames_per_word < 1:
            raise ConfigError(f"frames_per_word must be >= 1, got {self.frames_per_word}")
        if self.base_fps < 1:
            raise ConfigError(f"base_fps must be >= 1, got {self.base_fps}")
        if self.jitter_sigma < 0:
            raise ConfigError(f"jitter_sigma must be >= 0, got {self.jitter_sigma}")
        if min(self.train_size, self.dev_size, self.test_size) < 0:
            raise ConfigError("corpus sizes must be >= 0")


@dataclass
class GestureLexicon:
    """One pose template per word; templates are pairwise well separated."""

    words: list[str]
    templates: np.ndarray  # (vocab, frames_per_word, 85, 3), coordinates in [0, 1]
    base_fps: int
    seed: int
    index: dict = field(init=False, repr=False)

    def __post_init__(self):
        self.index = {w: i for i, w in enumerate(self.words)}

    def template(self, word: str) -> np.ndarray:
        try:
            return self.templates[self.index[word]]
        except KeyError:
            raise LexiconMissError(f"word {word!r} has no template in the lexicon") from None


def _min_pairwise_distance(flat: np.ndarray) -> float:
    diffs = flat[:, None, :] - flat[None, :, :]
    dist = np.sqrt((diffs**2).sum(-1))
    dist[np.diag_indices(len(flat))] = np.inf
    return float(dist.min())


def build_lexicon(config: SynthConfig) -> GestureLexicon:
    """Draw one uniform-random template per word and enforce separability.

    Templates must sit farther apart (L2 over all frame coordinates) than
    ten times the jitter scale so that jittered renderings stay decodable.
    """
    rng = substream(config.seed, "lexicon")
    words = [f"w{i:03d}" for i in range(config.vocab_size)]
    shape = (config.vocab_size, config.frames_per_word, NUM_KEYPOINTS, 3)
    bound = _SEPARABILITY_FACTOR * config.jitter_sigma
    for _ in range(_MAX_REGEN_ATTEMPTS):
        templates = rng.uniform(0.0, 1.0, size=shape)
        flat = templates.reshape(config.vocab_size, -1)
        if _min_pairwise_distance(flat) > bound:
            return GestureLexicon(
                words=words, templates=templates, base_fps=config.base_fps, seed=config.seed
            )
    raise GenerationError(
        f"could not draw {config.vocab_size} templates with pairwise distance > {bound}; "
        "increase frames_per_word or lower jitter_sigma"
    )


def render_clip(
    sentence: list[str],
    lexicon: GestureLexicon,
    fps: int | None = None,
    jitter_sigma: float = 0.0,
    seed: int = 0,
    clip_id: str = "clip",
) -> PoseClip:
    """Render a sentence as a pose clip.

    Concatenates the word templates at the lexicon's base rate, adds i.i.d.
    Gaussian jitter clamped back to ``[0, 1]``, then resamples to ``fps``.
    Identical ``(sentence, seed)`` pairs render identical clips.
    """
    if not sentence:
        raise LexiconMissError("cannot render an empty sentence")
    frames = np.concatenate([lexicon.template(w) for w in sentence], axis=0)
    if jitter_sigma > 0:
        rng = substream(seed, "jitter")
        frames = np.clip(frames + rng.normal(0.0, jitter_sigma, size=frames.shape), 0.0, 1.0)
    clip = PoseClip(
        id=clip_id,
        fps=lexicon.base_fps,
        frames=frames,
        text=" ".join(sentence),
    )
    if fps is not None and fps != lexicon.base_fps:
        clip = resample_clip_preserving_text(clip, fps)
    return clip


def resample_clip_preserving_text(clip: PoseClip, fps: int) -> PoseClip:
    return resample_fps(clip, fps)


def _sentence_space_size(config: SynthConfig) -> float:
    return float(
        sum(config.vocab_size**length for length in range(config.min_words, config.max_words + 1))
    )


def _sample_sentence(rng: np.random.Generator, config: SynthConfig, words: list[str]) -> tuple:
    length = int(rng.integers(config.min_words, config.max_words + 1))
    return tuple(words[int(i)] for i in rng.integers(0, config.vocab_size, size=length))


def generate_corpus(config: SynthConfig, lexicon: GestureLexicon | None = None):
    """Generate ``{"train": [...], "dev": [...], "test": [...]}`` clip lists.

    Splits are kept disjoint as sentence sets whenever the sentence space is
    at least ten times the total corpus size; otherwise a warning is issued
    and collisions are allowed. Per-clip jitter streams are derived from
    ``(seed, split, index)``, so rendering order (or parallel rendering)
    cannot change the output.
    """
    lexicon = lexicon if lexicon is not None else build_lexicon(config)
    sizes = {"train": config.train_size, "dev": config.dev_size, "test": config.test_size}
    total = sum(sizes.values())
    enforce_disjoint = _sentence_space_size(config) >= 10.0 * max(total, 1)
    if not enforce_disjoint:
        warnings.warn(
            "sentence space is too small to guarantee disjoint splits; "
            "cross-split sentence collisions are possible",
            stacklevel=2,
        )

    splits: dict[str, list[PoseClip]] = {}
    used: set[tuple] = set()
    for split, size in sizes.items():
        rng = substream(config.seed, "sentences", split)
        clips = []
        for i in range(size):
            sentence = _sample_sentence(rng, config, lexicon.words)
            if enforce_disjoint:
                attempts = 0
                while sentence in used:
                    sentence = _sample_sentence(rng, config, lexicon.words)
                    attempts += 1
                    if attempts > 1000:
                        raise GenerationError(
                            "could not sample a sentence outside the other splits"
                        )
            clips.append(
                render_clip(
                    list(sentence),
                    lexicon,
                    fps=config.base_fps,
                    jitter_sigma=config.jitter_sigma,
                    seed=_clip_seed(config.seed, split, i),
                    clip_id=f"{split}-{i:05d}",
                )
            )
        if enforce_disjoint:
            used.update(tuple(c.text.split()) for c in clips)
        splits[split] = clips
    return splits


def _clip_seed(seed: int, split: str, index: int) -> int:
    # Stable scalar seed per (root seed, split, clip index).
    return int(substream(seed, "clips", split, index).integers(0, 2**62))


def save_lexicon(lexicon: GestureLexicon, path) -> None:
    payload = {
        "words": lexicon.words,
        "base_fps": lexicon.base_fps,
        "seed": lexicon.seed,
        "templates": lexicon.templates.tolist(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)


def load_lexicon(path) -> GestureLexicon:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    return GestureLexicon(
        words=list(payload["words"]),
        templates=np.asarray(payload["templates"], dtype=np.float64),
        base_fps=int(payload["base_fps"]),
        seed=int(payload["seed"]),
    )
