"""Word-level vocabulary and text <-> token-id conversion.

Ids 0/1/2 are reserved for pad/eos/unk and never reassigned; real words get
ids from 3 upward, ordered by descending corpus frequency with lexicographic
tie-break so rebuilding on the same corpus is reproducible.
"""

from __future__ import annotations

import hashlib
from collections import Counter
from typing import Iterable, Sequence

from .exceptions import ConfigError, InvalidTokenIdError

PAD_ID = 0
EOS_ID = 1
UNK_ID = 2
PAD_TOKEN = "<pad>"
EOS_TOKEN = "<eos>"
UNK_TOKEN = "<unk>"
_RESERVED = (PAD_TOKEN, EOS_TOKEN, UNK_TOKEN)


class Vocabulary:
    """Immutable bidirectional word/id map with fixed reserved ids."""

    def __init__(self, words: Sequence[str]):
        for token in _RESERVED:
            if token in words:
                raise ConfigError(f"{token!r} is reserved and cannot be a vocabulary word")
        self.word_of: list[str] = list(_RESERVED) + list(words)
        self.id_of: dict[str, int] = {w: i for i, w in enumerate(self.word_of)}
        if len(self.id_of) != len(self.word_of):
            raise ConfigError("vocabulary words must be unique")

    def __len__(self) -> int:
        return len(self.word_of)

    def __contains__(self, word: str) -> bool:
        return word in self.id_of

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocabulary) and self.word_of == other.word_of

    def encode(self, text: str, max_len: int = 128) -> list[int]:
        """Token ids for ``text`` plus a terminal eos; never longer than ``max_len``.

        Unknown words map to the unk id. Sentences with ``max_len`` or more
        words are truncated to ``max_len - 1`` words so the eos still fits.
        """
        if max_len < 1:
            raise ConfigError(f"max_len must be >= 1, got {max_len}")
        words = text.split()[: max_len - 1]
        return [self.id_of.get(w, UNK_ID) for w in words] + [EOS_ID]

    def decode(self, ids: Iterable[int]) -> str:
        """Text for ``ids``: stops at the first eos, skips pad, renders unk."""
        words = []
        for token_id in ids:
            token_id = int(token_id)
            if not 0 <= token_id < len(self.word_of):
                raise InvalidTokenIdError(
                    f"token id {token_id} outside vocabulary of size {len(self.word_of)}"
                )
            if token_id == EOS_ID:
                break
            if token_id == PAD_ID:
                continue
            words.append(UNK_TOKEN if token_id == UNK_ID else self.word_of[token_id])
        return " ".join(words)

    def content_hash(self) -> str:
        """Stable digest of the full id/word table (used to pin checkpoints)."""
        blob = "\n".join(self.word_of).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for i, word in enumerate(self.word_of):
                fh.write(f"{i}\t{word}\n")

    @classmethod
    def load(cls, path) -> "Vocabulary":
        rows = []
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                if not line.rstrip("\n"):
                    continue
                idx, word = line.rstrip("\n").split("\t", 1)
                rows.append((int(idx), word))
        rows.sort()
        words = [w for _, w in rows]
        if words[:3] != list(_RESERVED) or [i for i, _ in rows] != list(range(len(rows))):
            raise ConfigError(f"{path}: not a valid vocabulary file")
        return cls(words[3:])


def build_vocab(sentences: Iterable[str]) -> Vocabulary:
    """Vocabulary over whitespace-split words of ``sentences``.

    Words are ordered by (descending frequency, lexicographic) for
    determinism and assigned ids from 3 upward.
    """
    counts = Counter(w for s in sentences for w in s.split())
    ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return Vocabulary([w for w, _ in ordered])
