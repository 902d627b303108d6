"""Fixed word-level textual vocabulary for the synthetic caption grammar.

Ids 0-3 are reserved (pad, bos, eos, the image indicator).  The remainder is
every word the grammar can emit; the table is padded with unused slots up to
the configured vocabulary size (default 256).
"""

from __future__ import annotations

PAD_ID = 0
BOS_ID = 1
EOS_ID = 2
IMAGE_ID = 3

SPECIALS = ["<pad>", "<bos>", "<eos>", "<image>"]

COLORS = ["red", "green", "blue", "white"]
SHAPES = ["square", "circle", "cross"]
SHAPES_PLURAL = ["squares", "circles", "crosses"]
POSITION_WORDS = ["top", "bottom", "left", "right"]
DIGITS = ["0", "1", "2", "3"]
GRAMMAR_WORDS = [
    "'s", "caption", ":", "describe", "the", "image", "shows", "a", "at",
    "and", "it", "is", "how", "many", "what", "color", "where", "?", ".",
    "small", "large",
]

WORDS = SPECIALS + COLORS + SHAPES + SHAPES_PLURAL + POSITION_WORDS + DIGITS + GRAMMAR_WORDS

_WORD_TO_ID = {w: i for i, w in enumerate(WORDS)}


def vocab_size_used() -> int:
    return len(WORDS)


def encode(text: str) -> list:
    """Whitespace-split tokenization against the fixed vocabulary."""
    try:
        return [_WORD_TO_ID[w] for w in text.split()]
    except KeyError as exc:
        raise KeyError(f"word not in vocabulary: {exc.args[0]!r}") from None


def decode(ids) -> str:
    return " ".join(WORDS[i] if 0 <= i < len(WORDS) else "<unk>" for i in ids)
