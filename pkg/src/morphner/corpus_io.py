"""Readers and writers for the line-based TSV formats.

All files are UTF-8 with one unit per line and a blank line between
sentences. ``-`` as a path means stdin/stdout.

token corpus     FORM<TAB>LABEL          (LABEL may be a ^-joined multi-label,
                                          or absent for unlabeled input)
morpheme corpus  FORM<TAB>LABEL<TAB>POS<TAB>TOKEN_ID   (1-based, "_" = empty)
lattice          FROM<TAB>TO<TAB>FORM<TAB>POS<TAB>TOKEN_ID
lexicon          SURFACE<TAB>form/POS+form/POS;...   and   PREFIX<TAB>form/POS
dense features   "count dim" header, then FORM v1 ... vd
vocab            T<TAB>form  or  M<TAB>form
"""
from __future__ import annotations

import contextlib
import io
import sys
from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np

from .domain import (
    MULTI_SEP,
    LabelError,
    Morpheme,
    Sentence,
    format_label,
    format_multilabel,
    make_tokens,
    parse_label,
    parse_multilabel,
)
from .evaluation import TrainVocab, morpheme_mentions, token_mentions
from .labeling import extend_to_token_label, gold_multilabels
from .lattice import Lexicon, SentenceLattice, lattice_from_edges

EMPTY = "_"


class FormatError(ValueError):
    """Malformed input; carries the file and line number when known."""

    def __init__(self, msg, path=None, line=None):
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(where + msg)
        self.path = path
        self.line = line


@contextlib.contextmanager
def _open(path, mode="r"):
    if str(path) == "-":
        stream = sys.stdin if "r" in mode else sys.stdout
        yield stream
        if "w" in mode:
            stream.flush()
    else:
        with open(path, mode, encoding="utf-8", newline="\n") as f:
            yield f


def _blocks(path) -> Iterable:
    """Yield lists of ``(line number, fields)`` per blank-line block."""
    block = []
    with _open(path) as f:
        for no, raw in enumerate(f, 1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line.strip():
                if block:
                    yield block
                    block = []
                continue
            block.append((no, line.split("\t")))
    if block:
        yield block


@dataclass
class CorpusSplit:
    name: str
    sentences: list = field(default_factory=list)
    multi: bool = False

    def __post_init__(self):
        if not self.name:
            raise ValueError("split needs a name")

    def __len__(self):
        return len(self.sentences)

    def __iter__(self):
        return iter(self.sentences)


def _split_name(path) -> str:
    if str(path) == "-":
        return "stdin"
    name = str(path).rsplit("/", 1)[-1]
    return name.split(".", 1)[0] or "split"


def read_token_corpus(path, name: str = None, multi: bool = None) -> CorpusSplit:
    """Read a token corpus.

    A file is token-multi when any label holds ``^``; its one-element labels
    are then one-morpheme multi-labels. ``multi=False`` demands single
    labels and ``multi=True`` reads every label as a multi-label.
    """
    blocks = list(_blocks(path))
    if multi is None:
        multi = any(len(cols) == 2 and MULTI_SEP in cols[1] for block in blocks for _, cols in block)
    sentences = []
    for block in blocks:
        forms, labels = [], []
        for no, cols in block:
            if len(cols) > 2:
                raise FormatError(f"expected FORM<TAB>LABEL, got {len(cols)} columns", path, no)
            forms.append(cols[0])
            if len(cols) == 2:
                if not multi and MULTI_SEP in cols[1]:
                    raise FormatError("multi-label in a file read as token-single", path, no)
                try:
                    labels.append(parse_multilabel(cols[1]) if multi else parse_label(cols[1]))
                except LabelError as e:
                    raise FormatError(str(e), path, no) from None
        if labels and len(labels) != len(forms):
            raise FormatError("some tokens in the sentence lack labels", path, block[0][0])
        try:
            sentences.append(Sentence(make_tokens(forms), token_labels=labels or None,
                                      id=str(len(sentences) + 1)))
        except ValueError as e:
            raise FormatError(str(e), path, block[0][0]) from None
    return CorpusSplit(name or _split_name(path), sentences, multi=multi)


def read_morpheme_corpus(path, tokens=None, name: str = None) -> CorpusSplit:
    """Read a morpheme corpus; ``tokens`` is an optional parallel token split.

    Without it, token forms are placeholders made by joining the token's
    morphemes with ``+`` (surface forms are not recoverable from morphemes).
    """
    tok_sents = list(tokens) if tokens is not None else None
    sentences = []
    for block in _blocks(path):
        morphs, labels = [], []
        cur, slot = 0, 0
        for no, cols in block:
            if len(cols) != 4:
                raise FormatError(f"expected 4 columns FORM LABEL POS TOKEN_ID, got {len(cols)}", path, no)
            form, lab, pos, tid = cols
            try:
                tid = int(tid)
            except ValueError:
                raise FormatError(f"TOKEN_ID {tid!r} is not an integer", path, no) from None
            if tid == cur:
                slot += 1
            elif tid == cur + 1:
                cur, slot = tid, 0
            else:
                raise FormatError(f"TOKEN_ID {tid} after {cur}: ids must start at 1 and grow by 1", path, no)
            try:
                morphs.append(Morpheme(form, "" if pos == EMPTY else pos, tid - 1, slot))
                labels.append(None if lab == EMPTY else parse_label(lab))
            except (LabelError, ValueError) as e:
                raise FormatError(str(e), path, no) from None
        if any(lab is None for lab in labels):
            if not all(lab is None for lab in labels):
                raise FormatError("sentence mixes labeled and unlabeled morphemes", path, block[0][0])
            labels = None
        si = len(sentences)
        if tok_sents is not None:
            if si >= len(tok_sents):
                raise FormatError("more sentences than the parallel token file", path, block[0][0])
            ts = tok_sents[si]
            forms = ts.forms
            token_labels = ts.token_labels
        else:
            groups = [[] for _ in range(cur)]
            for m in morphs:
                groups[m.token_index].append(m.form)
            forms = ["+".join(g) for g in groups]
            token_labels = None
        try:
            sentences.append(Sentence(make_tokens(forms), tuple(morphs), token_labels,
                                      tuple(labels) if labels else None, id=str(si + 1)))
        except ValueError as e:
            raise FormatError(f"sentence {si + 1}: {e}", path, block[0][0]) from None
    if tok_sents is not None and len(tok_sents) != len(sentences):
        raise FormatError(f"{len(sentences)} morpheme sentences vs {len(tok_sents)} token sentences", path)
    return CorpusSplit(name or _split_name(path), sentences)


def write_token_corpus(sentences: Iterable[Sentence], path, labels=None):
    """Write token TSV; ``labels`` overrides the sentences' own token labels."""
    with _open(path, "w") as f:
        for k, s in enumerate(sentences):
            labs = labels[k] if labels is not None else s.token_labels
            for i, t in enumerate(s.tokens):
                if labs is None:
                    f.write(t.form + "\n")
                else:
                    lab = labs[i]
                    text = format_multilabel(lab) if isinstance(lab, tuple) else format_label(lab)
                    f.write(f"{t.form}\t{text}\n")
            f.write("\n")


def write_morpheme_corpus(sentences: Iterable[Sentence], path, labels=None):
    with _open(path, "w") as f:
        for k, s in enumerate(sentences):
            labs = labels[k] if labels is not None else s.morpheme_labels
            for i, m in enumerate(s.morphemes):
                lab = EMPTY if labs is None else format_label(labs[i])
                f.write(f"{m.form}\t{lab}\t{m.pos or EMPTY}\t{m.token_index + 1}\n")
            f.write("\n")


# -- lattices and lexicons --------------------------------------------------

def write_lattices(lattices: Iterable[SentenceLattice], path):
    with _open(path, "w") as f:
        for lat in lattices:
            for frm, to, form, pos, tid in lat.edges():
                f.write(f"{frm}\t{to}\t{form}\t{pos or EMPTY}\t{tid}\n")
            f.write("\n")


def read_lattices(path, token_splits: Sequence[Sentence] = None) -> list:
    out = []
    for block in _blocks(path):
        edges = []
        for no, cols in block:
            if len(cols) != 5:
                raise FormatError(f"expected 5 lattice columns, got {len(cols)}", path, no)
            try:
                frm, to, tid = int(cols[0]), int(cols[1]), int(cols[4])
            except ValueError:
                raise FormatError("node and token ids must be integers", path, no) from None
            edges.append((frm, to, cols[2], "" if cols[3] == EMPTY else cols[3], tid))
        forms = token_splits[len(out)].forms if token_splits is not None else None
        try:
            out.append(lattice_from_edges(edges, forms))
        except ValueError as e:
            raise FormatError(str(e), path, block[0][0]) from None
    return out


def _parse_analysis(text: str, path, no) -> tuple:
    pairs = []
    for part in text.split("+"):
        form, sep, pos = part.rpartition("/")
        if not sep or not form:
            raise FormatError(f"analysis piece {part!r} is not form/POS", path, no)
        pairs.append((form, pos))
    return tuple(pairs)


def read_lexicon(path) -> Lexicon:
    """Lexicon lines ``SURFACE<TAB>a;b;...``; ``PREFIX<TAB>form/POS`` adds a peelable prefix."""
    lex = Lexicon()
    with _open(path) as f:
        for no, raw in enumerate(f, 1):
            line = raw.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != 2:
                raise FormatError(f"expected 2 columns, got {len(cols)}", path, no)
            if cols[0] == "PREFIX":
                (pair,) = _parse_analysis(cols[1], path, no)
                lex.add_prefix(*pair)
                continue
            for a in cols[1].split(";"):
                if a:
                    lex.add(cols[0], _parse_analysis(a, path, no))
    return lex


def write_lexicon(lex: Lexicon, path):
    with _open(path, "w") as f:
        for prefix, pos in lex.prefixes:
            f.write(f"PREFIX\t{prefix}/{pos}\n")
        for surface, templates in lex.entries.items():
            body = ";".join("+".join(f"{a}/{b}" for a, b in t) for t in templates)
            f.write(f"{surface}\t{body}\n")


# -- dense features and vocab -----------------------------------------------

@dataclass
class DenseFeatureTable:
    dim: int
    vectors: dict = field(default_factory=dict)

    def get(self, form):
        return self.vectors.get(form)

    def __len__(self):
        return len(self.vectors)

    def __contains__(self, form):
        return form in self.vectors


def read_dense_features(path) -> DenseFeatureTable:
    with _open(path) as f:
        lines = [ln.rstrip("\n") for ln in f]
    lines = [(no, ln) for no, ln in enumerate(lines, 1) if ln.strip()]
    if not lines:
        raise FormatError("empty dense feature file", path)
    no, header = lines[0]
    try:
        count, dim = (int(x) for x in header.split())
    except ValueError:
        raise FormatError(f"bad header {header!r}, expected 'count dim'", path, no) from None
    table = DenseFeatureTable(dim)
    for no, ln in lines[1:]:
        parts = ln.split()
        if len(parts) != dim + 1:
            raise FormatError(f"row has {len(parts) - 1} values, expected {dim}", path, no)
        try:
            table.vectors[parts[0]] = np.array([float(x) for x in parts[1:]])
        except ValueError:
            raise FormatError("non-numeric vector value", path, no) from None
    if len(table) != count:
        raise FormatError(f"header announces {count} rows, found {len(table)}", path)
    return table


def write_vocab(vocab: TrainVocab, path):
    with _open(path, "w") as f:
        for t in sorted(vocab.tokens):
            f.write(f"T\t{t}\n")
        for m in sorted(vocab.morphemes):
            f.write(f"M\t{m}\n")


def read_vocab(path) -> TrainVocab:
    v = TrainVocab()
    with _open(path) as f:
        for no, raw in enumerate(f, 1):
            line = raw.rstrip("\n")
            if not line:
                continue
            kind, _, form = line.partition("\t")
            if kind == "T":
                v.tokens.add(form)
            elif kind == "M":
                v.morphemes.add(form)
            else:
                raise FormatError(f"vocab line must start with T or M, got {kind!r}", path, no)
    return v


# -- validation -------------------------------------------------------------

@dataclass
class CorpusStats:
    sentences: int = 0
    tokens: int = 0
    morphemes: int = 0
    token_mentions: Counter = field(default_factory=Counter)
    morpheme_mentions: Counter = field(default_factory=Counter)
    mismatches: list = field(default_factory=list)  # (sentence id, token index, gold, collapsed)

    @property
    def consistent_sentences(self) -> int:
        return self.sentences - len({sid for sid, *_ in self.mismatches})

    @property
    def consistency(self) -> float:
        return self.consistent_sentences / self.sentences if self.sentences else 1.0

    def __str__(self):
        out = io.StringIO()
        out.write(f"sentences\t{self.sentences}\ntokens\t{self.tokens}\nmorphemes\t{self.morphemes}\n")
        out.write(f"mentions_token\t{sum(self.token_mentions.values())}\n")
        out.write(f"mentions_morpheme\t{sum(self.morpheme_mentions.values())}\n")
        for cat in sorted(set(self.token_mentions) | set(self.morpheme_mentions)):
            out.write(f"mentions\t{cat}\t{self.token_mentions[cat]}\t{self.morpheme_mentions[cat]}\n")
        out.write(f"consistent_sentences\t{self.consistent_sentences}\n")
        for sid, ti, gold, got in self.mismatches:
            out.write(f"mismatch\t{sid}\t{ti + 1}\t{gold}\t{got}\n")
        return out.getvalue()


def validate_corpus(token_split: CorpusSplit, morpheme_split: CorpusSplit) -> CorpusStats:
    """Count units and mentions and check that morpheme labels collapse to token labels."""
    if len(token_split) != len(morpheme_split):
        raise FormatError(f"{len(token_split)} token sentences vs {len(morpheme_split)} morpheme sentences")
    stats = CorpusStats()
    for ts, ms in zip(token_split, morpheme_split):
        stats.sentences += 1
        stats.tokens += len(ts.tokens)
        stats.morphemes += len(ms.morphemes or ())
        if len(ts.tokens) != len(ms.tokens):
            stats.mismatches.append((ts.id, -1, f"{len(ts.tokens)} tokens", f"{len(ms.tokens)} tokens"))
            continue
        if ts.token_labels is not None:
            stats.token_mentions.update(m.category for m in token_mentions(ts))
        if ms.morpheme_labels is not None:
            stats.morpheme_mentions.update(m.category for m in morpheme_mentions(ms))
        if ts.token_labels is None or ms.morpheme_labels is None:
            continue
        gold = ts.token_labels
        if ts.has_multilabels:
            collapsed = gold_multilabels(ms)
            for i, (g, c) in enumerate(zip(gold, collapsed)):
                if tuple(g) != tuple(c):
                    stats.mismatches.append((ts.id, i, format_multilabel(g), format_multilabel(c)))
        else:
            for i, (g, ml) in enumerate(zip(gold, gold_multilabels(ms))):
                c = extend_to_token_label(ml)
                if g != c:
                    stats.mismatches.append((ts.id, i, format_label(g), format_label(c)))
    return stats
