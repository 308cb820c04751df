"""Lightweight text analysis on the exporter side.

The engine can parse referring phrases itself, but encoder tokenizations
(BPE pieces) defeat word-level heuristics, so the exporter picks the
head word here and maps it onto the encoder's token positions before
writing manifests.
"""

from __future__ import annotations

import re

_WORD = re.compile(r"[a-z0-9][a-z0-9'-]*")

_SKIP = {
    "a", "an", "the", "this", "that", "these", "those", "some", "any",
    "my", "your", "his", "her", "its", "our", "their", "no",
}
_BREAK = {
    "of", "in", "on", "at", "by", "to", "for", "with", "from", "near",
    "under", "over", "above", "below", "behind", "between", "into",
    "that", "which", "who", "is", "are", "was", "were", "and", "or",
}

_DIRECTION_WORDS = {
    "left": "left", "leftmost": "left", "left-most": "left",
    "right": "right", "rightmost": "right", "right-most": "right",
    "top": "top", "upper": "top", "uppermost": "top",
    "bottom": "bottom", "lower": "bottom", "bottommost": "bottom",
}


def words(text: str) -> list[str]:
    return _WORD.findall(text.lower())


def head_word_index(word_list: list[str]) -> int:
    """Last content word of the leading noun chunk."""
    head = None
    for i, word in enumerate(word_list):
        if word in _BREAK:
            if head is not None:
                return head
            continue
        if word in _SKIP or (word.endswith("ing") and len(word) >= 6):
            continue
        head = i
    return head if head is not None else max(len(word_list) - 1, 0)


def direction_clues(word_list: list[str]) -> list[str]:
    """Direction names in manifest vocabulary; conflicting axes cancel."""
    found = {_DIRECTION_WORDS[w] for w in word_list if w in _DIRECTION_WORDS}
    for a, b in (("left", "right"), ("top", "bottom")):
        if a in found and b in found:
            found -= {a, b}
    return sorted(found)


def map_word_to_subtoken(tokens: list[str], word_index: int) -> int | None:
    """Position of the last BPE piece of the ``word_index``-th word.

    Works with CLIP-style tokenizations where word-final pieces carry a
    ``</w>`` suffix and specials wrap the sequence.  Returns None when
    the alignment cannot be established.
    """
    word = -1
    for pos, token in enumerate(tokens):
        if token.startswith("<") and token.endswith(">") and "</w>" not in token:
            continue  # special like <|startoftext|>
        if token.endswith("</w>"):
            word += 1
            if word == word_index:
                return pos
    return None
