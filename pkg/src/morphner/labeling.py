"""Conversions between morpheme labels, multi-labels and token labels."""
from __future__ import annotations

import re
from collections.abc import Sequence

from .domain import OUTSIDE, Label, LabelError, Sentence

# (pattern, collapsed boundary), tried in order; first full match wins.
_VALID_PATTERNS = [
    (re.compile(p), c)
    for p, c in [
        ("O+", "O"),
        ("O*BI*", "B"),
        ("O*BI*EO*", "S"),
        ("I+", "I"),
        ("I*EO*", "E"),
        ("O*SO*", "S"),
    ]
]


def collapse_biose(chars: str) -> str:
    """Map a token's string of morpheme boundaries to one boundary char.

    >>> collapse_biose("OBI"), collapse_biose("IE"), collapse_biose("EB")
    ('B', 'E', 'S')
    """
    if not chars:
        raise LabelError("empty BIOSE string")
    bad = set(chars) - set("OBISE")
    if bad:
        raise LabelError(f"characters {sorted(bad)} not in BIOSE")
    for pattern, out in _VALID_PATTERNS:
        if pattern.fullmatch(chars):
            return out
    # ill-formed order: fall back to set semantics
    if "S" in chars or ("B" in chars and "E" in chars):
        return "S"
    for c in "EBI":
        if c in chars:
            return c
    return "O"


def extend_to_token_label(labels: Sequence[Label]) -> Label:
    if not labels:
        raise LabelError("empty multi-label")
    boundary = collapse_biose("".join(lab.boundary for lab in labels))
    if boundary == "O":
        return OUTSIDE
    category = next(lab.category for lab in labels if lab.category is not None)
    return Label(boundary, category)


def align_multilabel_to_morphemes(labels: Sequence[Label], forms: Sequence[str]) -> list:
    """Pair a token's multi-label with its predicted morphemes.

    Pairs are matched from the last one backwards: surplus labels are dropped
    from the front, surplus morphemes get ``O`` at the front.
    """
    if not labels or not forms:
        raise ValueError("labels and forms must be nonempty")
    labels = list(labels)
    if len(labels) > len(forms):
        labels = labels[len(labels) - len(forms):]
    elif len(labels) < len(forms):
        labels = [OUTSIDE] * (len(forms) - len(labels)) + labels
    return list(zip(forms, labels))


def gold_multilabels(sentence: Sentence) -> list:
    """Group a sentence's morpheme labels into one multi-label per token."""
    if sentence.morpheme_labels is None:
        raise ValueError(f"sentence {sentence.id!r} has no morpheme labels")
    groups = [[] for _ in sentence.tokens]
    for m, lab in zip(sentence.morphemes, sentence.morpheme_labels):
        groups[m.token_index].append(lab)
    for i, g in enumerate(groups):
        if not g:
            raise ValueError(f"token {i} of sentence {sentence.id!r} has no morphemes")
    return [tuple(g) for g in groups]


def multilabels_to_token_labels(multilabels: Sequence[Sequence[Label]]) -> list:
    return [extend_to_token_label(ml) for ml in multilabels]


def align_sentence(multilabels: Sequence[Sequence[Label]], morpheme_groups: Sequence[Sequence]) -> list:
    """Morpheme labels for a whole sentence from token multi-labels."""
    if len(multilabels) != len(morpheme_groups):
        raise ValueError("multi-labels and morpheme groups differ in token count")
    out = []
    for ml, group in zip(multilabels, morpheme_groups):
        forms = [m if isinstance(m, str) else m.form for m in group]
        out.extend(lab for _, lab in align_multilabel_to_morphemes(ml, forms))
    return out
