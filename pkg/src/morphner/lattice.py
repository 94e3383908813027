"""Morphological analysis lattices.

A sentence lattice factors per token: each token carries a list of candidate
analyses (morpheme sequences) and every full path picks one analysis per
token. Nodes are numbered for serialization only: token-boundary nodes sit
between tokens, and each analysis of length ``k`` owns ``k - 1`` private
segment-boundary nodes.
"""
from __future__ import annotations

import itertools
from collections.abc import Sequence
from dataclasses import dataclass, field

from .domain import Morpheme, Token

UNKNOWN_POS = "UNK"


@dataclass(frozen=True)
class Analysis:
    morphemes: tuple

    def __post_init__(self):
        if not self.morphemes:
            raise ValueError("analysis needs at least one morpheme")
        ti = self.morphemes[0].token_index
        for slot, m in enumerate(self.morphemes):
            if m.token_index != ti or m.slot != slot:
                raise ValueError(f"analysis morphemes out of order: {self.morphemes}")

    @classmethod
    def of(cls, pairs: Sequence, token_index: int = 0) -> "Analysis":
        return cls(tuple(Morpheme(f, p, token_index, s) for s, (f, p) in enumerate(pairs)))

    @property
    def key(self) -> tuple:
        return tuple((m.form, m.pos) for m in self.morphemes)

    def __len__(self):
        return len(self.morphemes)

    def __str__(self):
        return "+".join(f"{m.form}/{m.pos}" for m in self.morphemes)


@dataclass(frozen=True)
class TokenLattice:
    token_index: int
    form: str
    analyses: tuple

    def __post_init__(self):
        if not self.analyses:
            raise ValueError(f"token {self.form!r} has no analyses")
        seen = set()
        for a in self.analyses:
            if a.key in seen:
                raise ValueError(f"duplicate analysis {a} for token {self.form!r}")
            seen.add(a.key)
            if a.morphemes[0].token_index != self.token_index:
                raise ValueError("analysis owned by another token")


@dataclass(frozen=True)
class SentenceLattice:
    tokens: tuple
    fallback_tokens: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "fallback_tokens", frozenset(self.fallback_tokens))
        for i, tl in enumerate(self.tokens):
            if tl.token_index != i:
                raise ValueError(f"token lattice {i} has index {tl.token_index}")

    def __len__(self):
        return len(self.tokens)

    @property
    def path_count(self) -> int:
        n = 1
        for tl in self.tokens:
            n *= len(tl.analyses)
        return n

    def edges(self) -> list:
        """``(from, to, form, pos, token_id)`` edges, token ids 1-based."""
        out = []
        start = 0
        next_id = 1
        for tl in self.tokens:
            n_internal = sum(len(a) - 1 for a in tl.analyses)
            end = next_id + n_internal
            internal = next_id
            for a in tl.analyses:
                prev = start
                for k, m in enumerate(a.morphemes):
                    if k == len(a) - 1:
                        nxt = end
                    else:
                        nxt = internal
                        internal += 1
                    out.append((prev, nxt, m.form, m.pos, tl.token_index + 1))
                    prev = nxt
            start = end
            next_id = end + 1
        return out

    def token_boundary_nodes(self) -> list:
        nodes = [0]
        ends = {}
        for _, to, _, _, tid in self.edges():
            ends[tid] = max(ends.get(tid, 0), to)
        nodes.extend(ends[t] for t in sorted(ends))
        return nodes


@dataclass
class Lexicon:
    """Surface form -> analysis templates, plus splittable prefixes.

    Templates are tuples of ``(form, pos)`` pairs; they need not
    concatenate back to the surface form.
    """

    entries: dict = field(default_factory=dict)
    prefixes: list = field(default_factory=list)  # [(prefix, pos)]

    def add(self, surface: str, template: Sequence):
        template = tuple((f, p) for f, p in template)
        if not template:
            raise ValueError(f"empty analysis for {surface!r}")
        bucket = self.entries.setdefault(surface, [])
        if template not in bucket:
            bucket.append(template)

    def add_prefix(self, prefix: str, pos: str):
        if (prefix, pos) not in self.prefixes:
            self.prefixes.append((prefix, pos))

    def lookup(self, surface: str) -> list:
        return list(self.entries.get(surface, ()))

    def __contains__(self, surface):
        return surface in self.entries

    def __len__(self):
        return len(self.entries)


def _templates(form: str, lexicon: Lexicon, depth: int = 0) -> list:
    found = list(lexicon.lookup(form))
    if depth >= 4:
        return found
    for prefix, pos in lexicon.prefixes:
        if len(form) > len(prefix) and form.startswith(prefix):
            for rest in _templates(form[len(prefix):], lexicon, depth + 1):
                found.append(((prefix, pos),) + rest)
    return found


def analyze_token(token: Token, lexicon: Lexicon) -> TokenLattice:
    templates = _templates(token.form, lexicon)
    if not templates:
        templates = [((token.form, UNKNOWN_POS),)]
    analyses = []
    seen = set()
    for t in templates:
        if t not in seen:
            seen.add(t)
            analyses.append(Analysis.of(t, token.index))
    return TokenLattice(token.index, token.form, tuple(analyses))


def analyze(tokens: Sequence[Token], lexicon: Lexicon) -> SentenceLattice:
    """All candidate decompositions of each token (never empty)."""
    if not tokens:
        raise ValueError("cannot analyze an empty sentence")
    return SentenceLattice(tuple(analyze_token(t, lexicon) for t in tokens))


def enumerate_paths(lattice: SentenceLattice, cap: int = 1000) -> list:
    """Full paths as flat morpheme tuples, first token varying slowest."""
    if cap < 1:
        raise ValueError("cap must be >= 1")
    combos = itertools.product(*(tl.analyses for tl in lattice.tokens))
    return [
        tuple(m for a in combo for m in a.morphemes)
        for combo in itertools.islice(combos, cap)
    ]


def prune(lattice: SentenceLattice, multilabels: Sequence) -> SentenceLattice:
    """Keep analyses whose length equals the token's multi-label length.

    Tokens where nothing survives keep all their analyses and are listed in
    ``fallback_tokens`` of the result.
    """
    if len(multilabels) != len(lattice):
        raise ValueError(f"{len(multilabels)} multi-labels for {len(lattice)} tokens")
    tokens = []
    fallback = set(lattice.fallback_tokens)
    for tl, ml in zip(lattice.tokens, multilabels):
        kept = tuple(a for a in tl.analyses if len(a) == len(ml))
        if kept:
            tokens.append(TokenLattice(tl.token_index, tl.form, kept))
        else:
            tokens.append(tl)
            fallback.add(tl.token_index)
    return SentenceLattice(tuple(tokens), frozenset(fallback))


def lattice_from_edges(edges: Sequence, token_forms: Sequence[str] = None) -> SentenceLattice:
    """Rebuild a lattice from ``(from, to, form, pos, token_id)`` edges.

    Analyses are recovered as the paths between a token's entry and exit
    nodes, in order of first edge appearance.
    """
    by_token = {}
    for e in edges:
        by_token.setdefault(int(e[4]), []).append(e)
    if sorted(by_token) != list(range(1, len(by_token) + 1)):
        raise ValueError(f"token ids {sorted(by_token)} are not 1..n")
    tokens = []
    for tid in range(1, len(by_token) + 1):
        tedges = by_token[tid]
        sources = {e[0] for e in tedges}
        targets = {e[1] for e in tedges}
        entry = sources - targets
        exit_ = targets - sources
        if len(entry) != 1 or len(exit_) != 1:
            raise ValueError(f"token {tid} does not have a single entry and exit node")
        (entry,), (exit_,) = entry, exit_
        out = {}
        for e in tedges:
            out.setdefault(e[0], []).append(e)
        analyses = []

        def walk(node, acc):
            if node == exit_:
                analyses.append(Analysis.of(acc, tid - 1))
                return
            if len(acc) > len(tedges):
                raise ValueError(f"cycle in lattice at token {tid}")
            for e in out.get(node, ()):
                walk(e[1], acc + [(e[2], e[3])])

        walk(entry, [])
        form = token_forms[tid - 1] if token_forms else "".join(m.form for m in analyses[0].morphemes)
        tokens.append(TokenLattice(tid - 1, form, tuple(analyses)))
    return SentenceLattice(tuple(tokens))
