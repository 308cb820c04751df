"""Referring-text analysis: tokenization, root-token selection, direction clues.

Referring expressions are short noun phrases, so the subject is found with
a lexical heuristic rather than a full dependency parse: scan left to
right and take the last token of the first noun-like run that ends at a
preposition, relative pronoun, verb-like token, or the end of the string.
Manifests may carry an externally parsed ``root_index``, which always
wins over the heuristic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .errors import EmptyExpression, IoFailure, MissingField
from .io import Direction

_STRIP_CHARS = ".,;:!?\"'`()[]{}<>…"

# closed-class word lists for the root heuristic
_DETERMINERS = {
    "a", "an", "the", "this", "these", "those", "some", "any", "no",
    "every", "each", "all", "both", "either", "neither", "another",
    "my", "your", "his", "her", "its", "our", "their",
}
_PREPOSITIONS = {
    "of", "in", "by", "as", "on", "at", "to", "via", "for", "with",
    "than", "from", "into", "upon", "near", "under", "over", "above",
    "below", "behind", "beside", "besides", "between", "beneath",
    "inside", "outside", "against", "across", "along", "around",
    "among", "amid", "atop", "off", "onto", "toward", "towards",
    "within", "without", "during", "through", "after", "before",
    "while", "whereas", "whether", "next", "opposite", "underneath",
}
_RELATIVES = {"that", "which", "who", "whom", "whose", "where", "when"}
_AUXILIARIES = {
    "is", "are", "was", "were", "am", "be", "been", "being",
    "has", "have", "had", "does", "do", "did", "not", "and", "or", "but",
}
# nouns that would otherwise trip the verb-suffix heuristics
_ING_NOUNS = {
    "thing", "something", "anything", "nothing", "everything",
    "building", "ceiling", "painting", "clothing", "wedding", "pudding",
    "morning", "evening", "lightning", "string", "spring", "earring",
    "railing", "awning", "dressing", "icing", "sibling", "duckling",
}
_EST_NOUNS = {
    "forest", "harvest", "interest", "contest", "protest", "arrest",
    "honest", "modest", "earnest", "nest", "chest", "guest", "crest",
}


def tokenize(text: str) -> list[str]:
    """Lowercase, strip edge punctuation, split on whitespace.

    Internal punctuation (hyphens, apostrophes) is preserved, so
    ``left-most`` stays a single token.
    """
    if not text or not text.strip():
        raise EmptyExpression("referring expression is empty")
    tokens = []
    for chunk in text.lower().split():
        word = chunk.strip(_STRIP_CHARS)
        if word:
            tokens.append(word)
    if not tokens:
        raise EmptyExpression(f"no word tokens in {text!r}")
    return tokens


def _is_verb_like(token: str) -> bool:
    if token.endswith("ing") and len(token) >= 6 and token not in _ING_NOUNS:
        return True
    if token.endswith("ed") and len(token) >= 5:
        return True
    return False


def _is_adjective_like(token: str) -> bool:
    if token.endswith("most") and len(token) > 4:
        return True
    if token.endswith("est") and len(token) >= 6 and token not in _EST_NOUNS:
        return True
    return False


def _is_run_ender(token: str) -> bool:
    return (
        token in _PREPOSITIONS
        or token in _RELATIVES
        or token in _AUXILIARIES
        or _is_verb_like(token)
    )


def find_root_token(tokens: list[str]) -> int:
    """Index of the heuristic head noun.  Always returns an index.

    The first noun-like run that is closed by a preposition, relative
    pronoun, verb-like token, or end of string supplies the root (its
    last token).  If no run qualifies, falls back to the last noun-like
    token, then to the final token.
    """
    if not tokens:
        raise EmptyExpression("cannot find the root of an empty token list")
    words = [t.lower() for t in tokens]
    run: list[int] = []
    noun_like: list[int] = []
    for i, word in enumerate(words):
        if _is_run_ender(word):
            if run:
                return run[-1]
            continue
        if word in _DETERMINERS or _is_adjective_like(word):
            run = []
            continue
        run.append(i)
        noun_like.append(i)
    if run:
        return run[-1]
    if noun_like:
        return noun_like[-1]
    return len(words) - 1


_DEFAULT_LEXICON: dict[Direction, frozenset[str]] = {
    Direction.LEFT: frozenset({"left", "leftmost", "left-most"}),
    Direction.RIGHT: frozenset({"right", "rightmost", "right-most"}),
    Direction.TOP: frozenset({"top", "upper", "uppermost"}),
    Direction.BOTTOM: frozenset({"bottom", "lower", "bottommost"}),
}

_OPPOSITE_AXES = [(Direction.LEFT, Direction.RIGHT), (Direction.TOP, Direction.BOTTOM)]


def load_direction_lexicon(path: str | Path) -> dict[Direction, frozenset[str]]:
    """Read a ``{"left": [...], "right": [...], ...}`` JSON lexicon."""
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise IoFailure(f"cannot read lexicon {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise MissingField(f"{path}: not valid JSON ({exc})") from exc
    lexicon = {}
    for direction in Direction:
        words = doc.get(direction.value, [])
        if not isinstance(words, list):
            raise MissingField(f"{path}: '{direction.value}' must be a word list")
        lexicon[direction] = frozenset(w.lower() for w in words)
    return lexicon


def detect_direction(
    tokens: list[str],
    lexicon: dict[Direction, frozenset[str]] | None = None,
) -> set[Direction]:
    """Union of lexicon hits over the tokens.

    Conflicting clues on the same axis (e.g. both left and right) cancel:
    the whole axis is dropped so ambiguity never biases the mask.
    """
    lex = lexicon if lexicon is not None else _DEFAULT_LEXICON
    found = set()
    for token in tokens:
        word = token.lower()
        for direction, words in lex.items():
            if word in words:
                found.add(direction)
    for a, b in _OPPOSITE_AXES:
        if a in found and b in found:
            found.discard(a)
            found.discard(b)
    return found


@dataclass
class ReferringExpression:
    """A parsed referring phrase: tokens, subject index, direction clues."""

    raw: str
    tokens: list[str]
    root_index: int
    directions: set[Direction] = field(default_factory=set)

    def __post_init__(self):
        if not self.tokens:
            raise EmptyExpression("tokens must be non-empty")
        if not 0 <= self.root_index < len(self.tokens):
            raise MissingField(
                f"root_index {self.root_index} outside 0..{len(self.tokens) - 1}"
            )


def parse_expression(
    text: str,
    root_index: int | None = None,
    directions: set[Direction] | None = None,
    lexicon: dict[Direction, frozenset[str]] | None = None,
) -> ReferringExpression:
    """Tokenize ``text`` and fill in root/directions, preferring any
    externally supplied values over the heuristics."""
    tokens = tokenize(text)
    k = root_index if root_index is not None else find_root_token(tokens)
    dirs = directions if directions is not None else detect_direction(tokens, lexicon)
    return ReferringExpression(raw=text, tokens=tokens, root_index=k, directions=dirs)
