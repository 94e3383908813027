"""Seeded synthetic corpora with Hebrew-like clitic morphology.

Tokens are stems optionally preceded by proclitics. ``le``/``be`` swallow
the definite article, so ``le`` + ``bayit`` surfaces identically whether
definite (three morphemes) or not (two): the ambiguity is resolvable by
morpheme count but not by local context. Some nouns are homographs of
``le`` + another noun, which adds a third, one-morpheme reading.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field

from .domain import Sentence, make_morphemes, make_tokens, mentions_to_labels
from .evaluation import OotvCategory, TrainVocab
from .labeling import extend_to_token_label, gold_multilabels
from .lattice import Lexicon

CONSONANTS = "bdgklmnprstvz"
VOWELS = "aeiou"
PREFIXES = [("le", "IN"), ("be", "IN"), ("ve", "CC"), ("mi", "IN"), ("ha", "DET")]
SUPPRESSING = ("le", "be")
ARTICLE = ("ha", "DET")
CATEGORIES = ("PER", "ORG", "GPE", "LOC")
DEFINITE_OK = {"ORG", "LOC", "GPE"}
MAX_NAME_TOKENS = {"PER": 2, "ORG": 3, "GPE": 1, "LOC": 2}


@dataclass
class SyntheticLanguage:
    words: dict                      # POS -> [stem]
    names: dict                      # category -> [stem]
    held_out_names: dict             # category -> [stem] never used in training
    homographs: dict = field(default_factory=dict)  # surface -> stem it shadows

    def lexicon(self, include_held_out: bool = True) -> Lexicon:
        lex = Lexicon()
        for p, pos in PREFIXES:
            lex.add_prefix(p, pos)
        stems = [(s, pos) for pos, ws in self.words.items() for s in ws]
        pools = [self.names] + ([self.held_out_names] if include_held_out else [])
        stems += [(s, "NNP") for pool in pools for ns in pool.values() for s in ns]
        for s, pos in stems:
            lex.add(s, [(s, pos)])
            for p in SUPPRESSING:
                lex.add(p + s, [(p, "IN"), ARTICLE, (s, pos)])
        for surface in self.homographs:
            lex.add(surface, [(surface, "NN")])
        return lex


def _pseudo_words(rng, n, taken, min_syll=2, max_syll=3):
    out = []
    banned = tuple(p for p, _ in PREFIXES)
    while len(out) < n:
        w = "".join(rng.choice(CONSONANTS) + rng.choice(VOWELS)
                    for _ in range(rng.randint(min_syll, max_syll)))
        if w in taken or w.startswith(banned):
            continue
        taken.add(w)
        out.append(w)
    return out


def make_language(seed: int = 0, nouns: int = 60, verbs: int = 25, adjectives: int = 20,
                  names_per_category: int = 12, held_out_per_category: int = 6,
                  homographs: int = 15) -> SyntheticLanguage:
    rng = random.Random(seed)
    taken = set()
    words = {
        "NN": _pseudo_words(rng, nouns, taken),
        "VB": _pseudo_words(rng, verbs, taken),
        "JJ": _pseudo_words(rng, adjectives, taken),
    }
    names = {c: _pseudo_words(rng, names_per_category, taken) for c in CATEGORIES}
    held = {c: _pseudo_words(rng, held_out_per_category, taken) for c in CATEGORIES}
    homo = {}
    for s in rng.sample(words["NN"], min(homographs, len(words["NN"]))):
        homo["le" + s] = s
    return SyntheticLanguage(words, names, held, homo)


def _token(stem, pos, prefix, definite):
    """Surface form and (form, POS) morphemes for one token."""
    morphs = []
    surface = ""
    if prefix is not None:
        morphs.append((prefix, dict(PREFIXES)[prefix]))
        surface += prefix
    if definite:
        morphs.append(ARTICLE)
        if prefix not in SUPPRESSING:
            surface += "ha"
    morphs.append((stem, pos))
    return surface + stem, morphs


def _choose_prefix(rng, pos):
    if pos == "VB":
        return "ve" if rng.random() < 0.15 else None
    r = rng.random()
    if r < 0.15:
        return None
    if r < 0.60:
        return "le"
    if r < 0.90:
        return "be"
    if r < 0.95:
        return "ve"
    return "mi"


def _sentence(rng, lang, name_pools, entity_rate, homograph_rate, sid):
    forms, groups, spans = [], [], []
    n_chunks = rng.randint(4, 9)
    for _ in range(n_chunks):
        if rng.random() < entity_rate:
            cat = rng.choice(CATEGORIES)
            length = rng.randint(1, MAX_NAME_TOKENS[cat])
            definite = cat in DEFINITE_OK and rng.random() < 0.5
            prefix = _choose_prefix(rng, "NNP")
            start = sum(len(g) for g in groups)
            for k in range(length):
                stem = rng.choice(name_pools[cat])
                surface, morphs = _token(stem, "NNP", prefix if k == 0 else None, definite)
                forms.append(surface)
                groups.append(morphs)
            end = sum(len(g) for g in groups) - 1
            if prefix is not None:
                start += 1  # the proclitic stays outside the mention
            spans.append((start, end, cat))
        else:
            pos = rng.choice(("NN", "NN", "NN", "VB", "JJ"))
            if pos == "NN" and lang.homographs and rng.random() < homograph_rate:
                # one surface, three equally likely readings
                surface = rng.choice(sorted(lang.homographs))
                stem = lang.homographs[surface]
                reading = rng.randrange(3)
                if reading == 0:
                    morphs = [(surface, "NN")]
                else:
                    _, morphs = _token(stem, "NN", "le", reading == 2)
            else:
                stem = rng.choice(lang.words[pos])
                prefix = _choose_prefix(rng, pos)
                definite = pos != "VB" and rng.random() < 0.5
                surface, morphs = _token(stem, pos, prefix, definite)
            forms.append(surface)
            groups.append(morphs)
    morphemes = make_morphemes(groups)
    mlabels = mentions_to_labels(spans, len(morphemes))
    s = Sentence(make_tokens(forms), morphemes, None, tuple(mlabels), id=sid)
    tlabels = tuple(extend_to_token_label(ml) for ml in gold_multilabels(s))
    return Sentence(s.tokens, s.morphemes, tlabels, s.morpheme_labels, id=sid)


def generate_corpus(lang: SyntheticLanguage, n_sentences: int, seed: int = 0,
                    entity_rate: float = 0.3, oov_rate: float = 0.0,
                    homograph_rate: float = 0.35) -> list:
    """Sentences with tokens, gold morphemes, and both label layers.

    With ``oov_rate > 0`` entity stems are drawn from the held-out name pool
    at that rate.
    """
    rng = random.Random(seed)
    out = []
    for i in range(n_sentences):
        if oov_rate and rng.random() < oov_rate:
            pools = lang.held_out_names
        else:
            pools = lang.names
        out.append(_sentence(rng, lang, pools, entity_rate, homograph_rate, str(i + 1)))
    return out


def plant_ootv_sentences(lang: SyntheticLanguage, vocab: TrainVocab, per_category: int = 5,
                         seed: int = 0) -> list:
    """Sentences holding one single-token PER/GPE mention of a known OOTV category.

    Returns ``(sentence, category)`` pairs; the category follows from how the
    mention token was built relative to ``vocab``.
    """
    rng = random.Random(seed)
    filler = [w for w in lang.words["VB"] if w in vocab.tokens]
    if not filler:
        raise ValueError("vocabulary has no known verbs to use as context")
    seen_names = [(c, s) for c in ("PER", "GPE") for s in lang.names[c] if s in vocab.morphemes]
    known_tokens = [(c, s) for c, s in seen_names if s in vocab.tokens]
    new_names = [(c, s) for c in ("PER", "GPE") for s in lang.held_out_names[c]
                 if s not in vocab.morphemes and s not in vocab.tokens]
    out = []

    def build(cat, surface, morphs, planted):
        verb = rng.choice(filler)
        groups = [[(verb, "VB")], morphs]
        m = make_morphemes(groups)
        start = 1 if len(morphs) == 1 else 2
        mlabels = mentions_to_labels([(start, len(m) - 1, cat)], len(m))
        s = Sentence(make_tokens([verb, surface]), m, None, tuple(mlabels), id=str(len(out) + 1))
        tl = tuple(extend_to_token_label(ml) for ml in gold_multilabels(s))
        out.append((Sentence(s.tokens, s.morphemes, tl, s.morpheme_labels, id=s.id), planted))

    for _ in range(per_category):
        cat, stem = rng.choice(known_tokens)
        build(cat, stem, [(stem, "NNP")], OotvCategory.KNOWN)
    for k in range(per_category):
        cat, stem = new_names[k % len(new_names)]
        build(cat, stem, [(stem, "NNP")], OotvCategory.LEXICAL)
    comp = [(c, s, p) for c, s in seen_names for p, _ in PREFIXES[2:4]
            if p + s not in vocab.tokens and p in vocab.morphemes]
    for k in range(per_category):
        cat, stem, p = comp[k % len(comp)]
        build(cat, p + stem, [(p, dict(PREFIXES)[p]), (stem, "NNP")], OotvCategory.COMPOSITIONAL)
    for k in range(per_category):
        cat, stem = new_names[k % len(new_names)]
        build(cat, "mi" + stem, [("mi", "IN"), (stem, "NNP")], OotvCategory.LEXCOMP)
    return out

