"""Morphologically-aware NER over morphological lattices."""

__version__ = "0.1.0"

from .domain import Label, Mention, Morpheme, Sentence, Token, extract_mentions, parse_label
from .lattice import Lexicon, analyze, enumerate_paths, prune

__all__ = [
    "Label",
    "Lexicon",
    "Mention",
    "Morpheme",
    "Sentence",
    "Token",
    "analyze",
    "enumerate_paths",
    "extract_mentions",
    "parse_label",
    "prune",
]
