"""Rule-based extraction of per-person appearance attributes from a query sentence.

The extractor works in two passes.  Pass 1 scans word tokens for person head
words (closed list of nouns and pronouns).  Pass 2 attaches to each head the
first garment phrase found inside its clause window: a stretch of tokens that
starts at a wear-type connector ("in", "wearing", "with", ...) and ends at the
next clause verb, subordinating conjunction, punctuation mark or person head.
Colors and garment nouns count only inside such phrases, so "holds a red
balloon" contributes nothing while "in a red coat" does.

All keyword tables live in a versioned JSON lexicon shipped with the package;
no statistical NLP is involved and the output is a pure function of the input
text.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

from .errors import EmptyInputError, MalformedInputError


class Gender(Enum):
    FEMALE = "female"
    MALE = "male"
    UNKNOWN = "unknown"


class ClothingColor(Enum):
    WHITE = "white"
    BLACK = "black"
    GRAY = "gray"
    RED = "red"
    ORANGE = "orange"
    YELLOW = "yellow"
    GREEN = "green"
    BLUE = "blue"
    PURPLE = "purple"
    PINK = "pink"
    BROWN = "brown"
    UNKNOWN = "unknown"


class ClothingType(Enum):
    TOP = "top"
    BOTTOM = "bottom"
    CLOTH = "cloth"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class AttributeTriple:
    """(gender, color, clothing type) for one person mention.

    ``mention_span`` is the character range of the head word in the source
    sentence, end-exclusive.
    """

    gender: Gender
    color: ClothingColor
    clothing: ClothingType
    mention_span: tuple[int, int]

    def as_dict(self) -> dict:
        return {
            "gender": self.gender.value,
            "color": self.color.value,
            "clothing": self.clothing.value,
            "span": list(self.mention_span),
        }


@dataclass(frozen=True)
class SentenceAttributes:
    triples: tuple[AttributeTriple, ...]

    @property
    def person_count(self) -> int:
        return len(self.triples)

    def as_dict(self) -> dict:
        return {
            "triples": [t.as_dict() for t in self.triples],
            "person_count": self.person_count,
        }


# Tokens an object-case "her" may be followed by without turning possessive.
_NON_POSSESSIVE_FOLLOW = {
    "and", "or", "to", "at", "on", "from", "into", "out", "up", "down",
    "away", "off", "over", "under", "toward", "towards", "again",
}

_TOKEN_RE = re.compile(r"[A-Za-z0-9]+(?:[-'][A-Za-z0-9]+)*")
_BOUNDARY_PUNCT_RE = re.compile(r"[,;.!?:()]")


@dataclass(frozen=True)
class _Token:
    lower: str
    start: int
    end: int


class Lexicon:
    """Keyword tables mapping surface forms to canonical attribute values."""

    def __init__(self, raw: dict):
        for key in ("gender", "color", "clothing", "connectors", "clause_verbs", "clause_breaks"):
            if key not in raw:
                raise MalformedInputError(f"lexicon missing table '{key}'")
        self.version: str = raw.get("lexicon_version", "unversioned")
        self.gender: dict[str, Gender] = {k: Gender(v) for k, v in raw["gender"].items()}
        self.color: dict[str, ClothingColor] = {
            k: ClothingColor(v) for k, v in raw["color"].items()
        }
        self.clothing: dict[str, ClothingType] = {
            k: ClothingType(v) for k, v in raw["clothing"].items()
        }
        self.connectors: frozenset[str] = frozenset(raw["connectors"])
        self.clause_verbs: frozenset[str] = frozenset(raw["clause_verbs"])
        self.clause_breaks: frozenset[str] = frozenset(raw["clause_breaks"])

    @staticmethod
    def from_file(path: str | Path) -> "Lexicon":
        with open(path, encoding="utf-8") as fh:
            return Lexicon(json.load(fh))


@lru_cache(maxsize=1)
def lexicon() -> Lexicon:
    """The packaged default lexicon; loaded once, stable across calls."""
    raw = json.loads(
        resources.files("tubeground").joinpath("data/lexicon.json").read_text(encoding="utf-8")
    )
    return Lexicon(raw)


def _tokenize(sentence: str) -> list[_Token]:
    return [
        _Token(m.group(0).lower(), m.start(), m.end())
        for m in _TOKEN_RE.finditer(sentence)
    ]


def _punct_between(sentence: str, prev: _Token, cur: _Token) -> bool:
    return bool(_BOUNDARY_PUNCT_RE.search(sentence[prev.end : cur.start]))


def _is_mention(tokens: Sequence[_Token], idx: int, lex: Lexicon, sentence: str) -> bool:
    tok = tokens[idx]
    if tok.lower not in lex.gender:
        return False
    if tok.lower == "her":
        # "her" is possessive (no mention) when gluing to a following plain
        # noun: "puts her bag".  Followed by punctuation, a verb, or a
        # particle it is the object pronoun: "pushes her."
        if idx + 1 >= len(tokens):
            return True
        nxt = tokens[idx + 1]
        if _punct_between(sentence, tok, nxt):
            return True
        follow_ok = (
            nxt.lower in lex.clause_verbs
            or nxt.lower in lex.clause_breaks
            or nxt.lower in lex.connectors
            or nxt.lower in _NON_POSSESSIVE_FOLLOW
        )
        return follow_ok
    return True


def _window_end(
    tokens: Sequence[_Token],
    head_idx: int,
    mention_indices: frozenset[int],
    lex: Lexicon,
    sentence: str,
) -> int:
    """Index one past the last token of the head's clause window."""
    for j in range(head_idx + 1, len(tokens)):
        tok = tokens[j]
        if _punct_between(sentence, tokens[j - 1], tok):
            return j
        if j in mention_indices:
            return j
        if tok.lower in lex.clause_verbs or tok.lower in lex.clause_breaks:
            return j
    return len(tokens)


def _attach_garment(
    tokens: Sequence[_Token],
    start: int,
    end: int,
    lex: Lexicon,
) -> tuple[ClothingColor, ClothingType]:
    color = ClothingColor.UNKNOWN
    clothing = ClothingType.UNKNOWN
    seen_connector = False
    for j in range(start, end):
        word = tokens[j].lower
        if word in lex.connectors:
            seen_connector = True
            continue
        if not seen_connector:
            continue
        if color is ClothingColor.UNKNOWN and word in lex.color:
            color = lex.color[word]
        if clothing is ClothingType.UNKNOWN and word in lex.clothing:
            clothing = lex.clothing[word]
    return color, clothing


def extract_attributes(sentence: str, lex: Optional[Lexicon] = None) -> SentenceAttributes:
    """Extract one attribute triple per person mention, in mention order.

    Raises :class:`EmptyInputError` for empty or whitespace-only input.
    Fields not determinable from the text come back as ``unknown``.
    """
    if not sentence or not sentence.strip():
        raise EmptyInputError("sentence is empty or whitespace-only")
    lex = lex or lexicon()

    tokens = _tokenize(sentence)
    mention_indices = frozenset(
        i for i in range(len(tokens)) if _is_mention(tokens, i, lex, sentence)
    )

    triples: list[AttributeTriple] = []
    for i in sorted(mention_indices):
        head = tokens[i]
        end = _window_end(tokens, i, mention_indices, lex, sentence)
        color, clothing = _attach_garment(tokens, i + 1, end, lex)
        triples.append(
            AttributeTriple(
                gender=lex.gender[head.lower],
                color=color,
                clothing=clothing,
                mention_span=(head.start, head.end),
            )
        )
    return SentenceAttributes(triples=tuple(triples))
