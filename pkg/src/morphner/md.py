"""Morphological disambiguation: choose one path through a lattice.

The path scorer is a first-order log-linear model. Each lattice edge
(one morpheme of one candidate analysis) fires sparse features; consecutive
edges add a POS-bigram transition weight, with START/STOP at the ends.
"""
from __future__ import annotations

import json
import random
from collections import Counter
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Union

from .domain import Sentence
from .lattice import Analysis, Lexicon, SentenceLattice, TokenLattice, analyze, prune
from .tagger import ChainModel, ModelError, tag

MD_FORMAT = "morphner-md"
MD_VERSION = 1
START = "<s>"
STOP = "</s>"


def transition_feature(prev_pos: str, pos: str) -> str:
    return f"t={prev_pos}>{pos}"


def analysis_features(analysis: Analysis, token_forms: Sequence[str]) -> list:
    """Edge features of every morpheme in ``analysis`` plus its internal transitions."""
    ti = analysis.morphemes[0].token_index
    tok = token_forms[ti]
    prev_tok = token_forms[ti - 1] if ti > 0 else START
    next_tok = token_forms[ti + 1] if ti + 1 < len(token_forms) else STOP
    n = len(analysis)
    sig = "+".join(m.pos for m in analysis.morphemes)
    feats = []
    for k, m in enumerate(analysis.morphemes):
        feats.append(f"p={m.pos}")
        feats.append(f"f={m.form}|p={m.pos}")
        feats.append(f"w={tok}|n={n}|s={k}|f={m.form}|p={m.pos}")
        if k == 0:
            feats.append(f"n={n}")
            feats.append(f"w={tok}|n={n}")
            feats.append(f"pw={prev_tok}|a={sig}")
            feats.append(f"nw={next_tok}|a={sig}")
        else:
            feats.append(transition_feature(analysis.morphemes[k - 1].pos, m.pos))
    return feats


@dataclass
class MdModel:
    weights: dict = field(default_factory=dict)

    def score(self, feats) -> float:
        w = self.weights
        return sum(w.get(f, 0.0) for f in feats)

    def trans(self, a: str, b: str) -> float:
        return self.weights.get(transition_feature(a, b), 0.0)


@dataclass
class MdResult:
    morphemes: tuple
    choices: tuple
    fallback_tokens: frozenset = frozenset()
    score: float = 0.0

    def token_analyses(self) -> list:
        groups = [[] for _ in self.choices]
        for m in self.morphemes:
            groups[m.token_index].append(m)
        return groups


def _path_features(path: Sequence, token_forms: Sequence[str]) -> list:
    groups = {}
    for m in path:
        groups.setdefault(m.token_index, []).append(m)
    feats = []
    prev_pos = START
    for ti in sorted(groups):
        a = Analysis(tuple(groups[ti]))
        feats.extend(analysis_features(a, token_forms))
        feats.append(transition_feature(prev_pos, a.morphemes[0].pos))
        prev_pos = a.morphemes[-1].pos
    feats.append(transition_feature(prev_pos, STOP))
    return feats


def score_path(model: MdModel, path: Sequence, token_forms: Sequence[str]) -> float:
    """Sum of edge and POS-transition weights along ``path``."""
    if not path:
        raise ValueError("empty path")
    return model.score(_path_features(path, token_forms))


def md_decode(model: MdModel, lattice: SentenceLattice, token_forms: Sequence[str] = None,
              _cache=None) -> MdResult:
    """Highest-scoring lattice path.

    Ties prefer earlier analyses, comparing tokens left to right.
    """
    if not len(lattice):
        raise ValueError("empty lattice")
    forms = list(token_forms) if token_forms is not None else [t.form for t in lattice.tokens]
    if _cache is not None:
        inner = _cache
    else:
        inner = [[model.score(analysis_features(a, forms)) for a in tl.analyses]
                 for tl in lattice.tokens]
    n = len(lattice)
    toks = lattice.tokens
    # suffix[t][a]: best score of tokens t..n-1 given analysis a at t, STOP included
    suffix = [None] * n
    suffix[n - 1] = [inner[n - 1][j] + model.trans(a.morphemes[-1].pos, STOP)
                     for j, a in enumerate(toks[n - 1].analyses)]
    for t in range(n - 2, -1, -1):
        nxt = toks[t + 1].analyses
        row = []
        for j, a in enumerate(toks[t].analyses):
            exit_pos = a.morphemes[-1].pos
            best = max(model.trans(exit_pos, b.morphemes[0].pos) + suffix[t + 1][k]
                       for k, b in enumerate(nxt))
            row.append(inner[t][j] + best)
        suffix[t] = row

    def pick(prev_pos, t):
        best_j, best_v = 0, None
        for j, a in enumerate(toks[t].analyses):
            v = model.trans(prev_pos, a.morphemes[0].pos) + suffix[t][j]
            if best_v is None or v > best_v:
                best_j, best_v = j, v
        return best_j, best_v

    choices = []
    prev_pos = START
    total = None
    for t in range(n):
        j, v = pick(prev_pos, t)
        if total is None:
            total = v
        choices.append(j)
        prev_pos = toks[t].analyses[j].morphemes[-1].pos
    morphemes = tuple(m for t, j in enumerate(choices) for m in toks[t].analyses[j].morphemes)
    return MdResult(morphemes, tuple(choices), lattice.fallback_tokens, float(total))


def md_standard(model: MdModel, lexicon: Lexicon, tokens: Sequence) -> MdResult:
    lattice = analyze(tokens, lexicon)
    return md_decode(model, lattice, [t.form for t in tokens])


def md_hybrid(model: MdModel, lexicon: Lexicon, tokens: Sequence,
              ner: Union[ChainModel, Sequence]) -> MdResult:
    """Disambiguate a lattice pruned to the token-multi NER morpheme counts.

    ``ner`` is either a token-multi :class:`ChainModel` or the multi-labels
    themselves (e.g. gold ones).
    """
    if isinstance(ner, ChainModel):
        if ner.variant != "token-multi":
            raise ModelError(f"hybrid disambiguation needs a token-multi model, got {ner.variant}")
        multilabels = tag(ner, Sentence(tuple(tokens)))
    else:
        multilabels = list(ner)
    lattice = prune(analyze(tokens, lexicon), multilabels)
    return md_decode(model, lattice, [t.form for t in tokens])


# -- training ---------------------------------------------------------------

def _with_gold(tl: TokenLattice, gold: Analysis):
    keys = [a.key for a in tl.analyses]
    if gold.key in keys:
        return tl, keys.index(gold.key)
    return TokenLattice(tl.token_index, tl.form, tl.analyses + (gold,)), len(keys)


def train_md(sentences: Sequence[Sentence], lexicon: Lexicon, epochs: int = 10,
             seed: int = 0, average: bool = True) -> MdModel:
    """Averaged perceptron over lattice decodes.

    Gold analyses missing from a lattice are added for training only.
    """
    if epochs < 1:
        raise ValueError("epochs must be >= 1")
    data = []
    for s in sentences:
        if s.morphemes is None:
            raise ModelError(f"sentence {s.id!r} has no gold morphemes")
        lat = analyze(s.tokens, lexicon)
        forms = s.forms
        toks, gold_idx = [], []
        for tl, group in zip(lat.tokens, s.token_morphemes()):
            tl2, gi = _with_gold(tl, Analysis(tuple(group)))
            toks.append(tl2)
            gold_idx.append(gi)
        lat = SentenceLattice(tuple(toks))
        feats = [[analysis_features(a, forms) for a in tl.analyses] for tl in lat.tokens]
        gold_path = [m for tl, gi in zip(lat.tokens, gold_idx) for m in tl.analyses[gi].morphemes]
        data.append((lat, forms, feats, tuple(gold_idx), Counter(_path_features(gold_path, forms))))
    if not data:
        raise ModelError("empty MD training corpus")

    model = MdModel()
    w = model.weights
    totals = {}
    stamp = {}
    step = 1

    def bump(f, d):
        # lazy averaging: fold the untouched interval into totals first
        totals[f] = totals.get(f, 0.0) + (step - stamp.get(f, step)) * w.get(f, 0.0)
        stamp[f] = step
        w[f] = w.get(f, 0.0) + d

    rng = random.Random(seed)
    order = list(range(len(data)))
    for _ in range(epochs):
        rng.shuffle(order)
        for k in order:
            lat, forms, feats, gold_idx, gold_counts = data[k]
            cache = [[model.score(f) for f in row] for row in feats]
            res = md_decode(model, lat, forms, _cache=cache)
            if res.choices != gold_idx:
                pred_counts = Counter(_path_features(res.morphemes, forms))
                diff = Counter(gold_counts)
                diff.subtract(pred_counts)
                for f, d in diff.items():
                    if d:
                        bump(f, float(d))
            step += 1
    if average:
        avg = {}
        for f, v in w.items():
            tot = totals.get(f, 0.0) + (step - stamp.get(f, step)) * v
            if tot:
                avg[f] = tot / step
        model.weights = avg
    else:
        model.weights = {f: v for f, v in w.items() if v}
    return model


def save_md_model(model: MdModel, path):
    with open(path, "w", encoding="utf-8") as f:
        json.dump({"format": MD_FORMAT, "version": MD_VERSION, "weights": model.weights},
                  f, ensure_ascii=False, sort_keys=True)
        f.write("\n")


def load_md_model(path) -> MdModel:
    with open(path, encoding="utf-8") as f:
        d = json.load(f)
    if d.get("format") != MD_FORMAT:
        raise ModelError(f"not an MD model file (format {d.get('format')!r})")
    if d.get("version") != MD_VERSION:
        raise ModelError(f"unsupported MD model version {d.get('version')!r}")
    return MdModel(dict(d["weights"]))
