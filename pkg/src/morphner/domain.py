"""Core vocabulary: labels, tokens, morphemes, sentences and mentions.

Labels use the BIOSE boundary scheme. A token-level "multi-label" is simply
a tuple of labels, one per morpheme of the token.
"""
from __future__ import annotations

import re
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Optional, Union

BOUNDARIES = "OBISE"
MULTI_SEP = "^"

_CATEGORY_RE = re.compile(r"^[A-Z][A-Z0-9_]*$")
_LABEL_RE = re.compile(r"^([BISE])[-_](.+)$")


class LabelError(ValueError):
    """Raised on malformed label strings or inconsistent label sequences."""


def check_category(name: str) -> str:
    if not name or not _CATEGORY_RE.match(name):
        raise LabelError(f"invalid entity category {name!r}")
    return name


@dataclass(frozen=True, order=True)
class Label:
    boundary: str
    category: Optional[str] = None

    def __post_init__(self):
        if self.boundary not in BOUNDARIES:
            raise LabelError(f"invalid boundary {self.boundary!r}")
        if self.boundary == "O":
            if self.category is not None:
                raise LabelError("O label cannot carry a category")
        else:
            if self.category is None:
                raise LabelError(f"{self.boundary} label needs a category")
            check_category(self.category)

    def __str__(self):
        return format_label(self)

    @property
    def is_outside(self) -> bool:
        return self.boundary == "O"


OUTSIDE = Label("O")

MultiLabel = tuple  # tuple[Label, ...]


def parse_label(text: str) -> Label:
    """Parse ``O`` or ``<B|I|S|E>-<CAT>``; ``_`` is accepted as separator."""
    if text == "O":
        return OUTSIDE
    m = _LABEL_RE.match(text)
    if not m:
        raise LabelError(f"cannot parse label {text!r}")
    try:
        return Label(m.group(1), m.group(2))
    except LabelError as e:
        raise LabelError(f"cannot parse label {text!r}: {e}") from None


def format_label(label: Label) -> str:
    if label.boundary == "O":
        return "O"
    return f"{label.boundary}-{label.category}"


def parse_multilabel(text: str) -> MultiLabel:
    if not text:
        raise LabelError("empty multi-label")
    return tuple(parse_label(part) for part in text.split(MULTI_SEP))


def format_multilabel(labels: Sequence[Label]) -> str:
    if not labels:
        raise LabelError("empty multi-label")
    return MULTI_SEP.join(format_label(lab) for lab in labels)


def _check_unit_form(form: str, what: str):
    if not form or any(c.isspace() for c in form):
        raise ValueError(f"invalid {what} form {form!r}")


@dataclass(frozen=True)
class Token:
    form: str
    index: int

    def __post_init__(self):
        _check_unit_form(self.form, "token")


@dataclass(frozen=True)
class Morpheme:
    form: str
    pos: str = ""
    token_index: int = 0
    slot: int = 0

    def __post_init__(self):
        _check_unit_form(self.form, "morpheme")


TokenLabel = Union[Label, MultiLabel]


@dataclass(frozen=True)
class Sentence:
    """One sentence at token level and, optionally, morpheme level.

    ``token_labels`` holds either one :class:`Label` per token or one
    multi-label tuple per token. ``morpheme_labels`` aligns with ``morphemes``.
    """

    tokens: tuple
    morphemes: Optional[tuple] = None
    token_labels: Optional[tuple] = None
    morpheme_labels: Optional[tuple] = None
    id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        for name in ("morphemes", "token_labels", "morpheme_labels"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, tuple(value))
        n = len(self.tokens)
        for i, tok in enumerate(self.tokens):
            if tok.index != i:
                raise ValueError(f"token {tok.form!r} has index {tok.index}, expected {i}")
        if self.morphemes is not None:
            cur, slot = -1, 0
            for m in self.morphemes:
                if m.token_index == cur:
                    slot += 1
                elif m.token_index == cur + 1:
                    cur, slot = cur + 1, 0
                else:
                    raise ValueError(
                        f"morpheme {m.form!r} owned by token {m.token_index} out of order")
                if m.slot != slot:
                    raise ValueError(f"morpheme {m.form!r} has slot {m.slot}, expected {slot}")
            if cur + 1 != n:
                raise ValueError(f"morphemes cover {cur + 1} tokens, sentence has {n}")
        if self.token_labels is not None and len(self.token_labels) != n:
            raise ValueError("token_labels length differs from token count")
        if self.morpheme_labels is not None:
            if self.morphemes is None:
                raise ValueError("morpheme_labels given without morphemes")
            if len(self.morpheme_labels) != len(self.morphemes):
                raise ValueError("morpheme_labels length differs from morpheme count")

    @property
    def forms(self) -> list:
        return [t.form for t in self.tokens]

    @property
    def morpheme_forms(self) -> list:
        return [m.form for m in self.morphemes or ()]

    def token_morphemes(self) -> list:
        """Morphemes grouped per token (requires segmentation)."""
        if self.morphemes is None:
            raise ValueError(f"sentence {self.id!r} has no morphemes")
        groups = [[] for _ in self.tokens]
        for m in self.morphemes:
            groups[m.token_index].append(m)
        return groups

    @property
    def has_multilabels(self) -> bool:
        return bool(self.token_labels) and isinstance(self.token_labels[0], tuple)


def make_tokens(forms: Sequence[str]) -> tuple:
    return tuple(Token(f, i) for i, f in enumerate(forms))


def make_morphemes(groups: Sequence[Sequence]) -> tuple:
    """Build morphemes from per-token lists of ``form`` or ``(form, pos)``."""
    out = []
    for ti, group in enumerate(groups):
        if not group:
            raise ValueError(f"token {ti} has no morphemes")
        for slot, item in enumerate(group):
            form, pos = (item, "") if isinstance(item, str) else item
            out.append(Morpheme(form, pos, ti, slot))
    return tuple(out)


@dataclass(frozen=True)
class Mention:
    """An entity occurrence anchored in its surface form.

    Equality and hashing use ``(form, category)`` only; ``span`` is the
    inclusive ``(start, end)`` unit range it was read from.
    """

    form: str
    category: str
    span: tuple = field(default=(-1, -1), compare=False, hash=False)

    @property
    def key(self) -> tuple:
        return (self.form, self.category)


def extract_mentions(labels: Sequence[Label], forms: Sequence[str]) -> list:
    """Read mentions off a BIOSE label sequence.

    Well-formed ``S`` and ``B I* E`` spans give one mention each. Ill-formed
    fragments are recovered: a run of non-O labels sharing a category (not
    interrupted by ``B``/``S``, which always open a new mention) becomes one
    mention.
    """
    if len(labels) != len(forms):
        raise LabelError(f"{len(labels)} labels for {len(forms)} units")
    mentions = []
    start = None
    cat = None

    def close(end):
        nonlocal start, cat
        if start is not None:
            mentions.append(Mention(" ".join(forms[start:end + 1]), cat, (start, end)))
        start = cat = None

    for i, lab in enumerate(labels):
        b = lab.boundary
        if b == "O":
            close(i - 1)
        elif b == "S":
            close(i - 1)
            start, cat = i, lab.category
            close(i)
        elif b == "B":
            close(i - 1)
            start, cat = i, lab.category
        else:  # I or E
            if start is not None and cat != lab.category:
                close(i - 1)
            if start is None:
                start, cat = i, lab.category
            if b == "E":
                close(i)
    close(len(labels) - 1)
    return mentions


def mentions_to_labels(spans: Sequence, length: int) -> list:
    """Inverse of :func:`extract_mentions` for ``(start, end, category)`` spans.

    ``end`` is inclusive. :class:`Mention` objects are accepted too, via
    their ``span`` field.
    """
    labels = [OUTSIDE] * length
    taken = [False] * length
    for sp in spans:
        if isinstance(sp, Mention):
            (start, end), category = sp.span, sp.category
        else:
            start, end, category = sp
        if not 0 <= start <= end < length:
            raise LabelError(f"span ({start}, {end}) outside 0..{length - 1}")
        if any(taken[start:end + 1]):
            raise LabelError(f"span ({start}, {end}) overlaps another span")
        for i in range(start, end + 1):
            taken[i] = True
        if start == end:
            labels[start] = Label("S", category)
        else:
            labels[start] = Label("B", category)
            for i in range(start + 1, end):
                labels[i] = Label("I", category)
            labels[end] = Label("E", category)
    return labels
