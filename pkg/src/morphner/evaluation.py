"""Form-anchored NER scoring, segmentation scoring and OOTV analysis.

Mentions are compared by ``(surface form, category)`` within a sentence,
with multiset semantics, and counts are micro-averaged over the corpus.
"""
from __future__ import annotations

import math
from collections import Counter
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from enum import Enum

from .domain import Label, Mention, Sentence, extract_mentions
from .labeling import align_sentence, extend_to_token_label, gold_multilabels


def prf(matched: int, gold: int, predicted: int) -> tuple:
    """Precision, recall and F1 as percentages; empty denominators give 0."""
    p = 100.0 * matched / predicted if predicted else 0.0
    r = 100.0 * matched / gold if gold else 0.0
    f = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return p, r, f


@dataclass
class Counts:
    gold: int = 0
    predicted: int = 0
    matched: int = 0

    def add(self, other: "Counts"):
        self.gold += other.gold
        self.predicted += other.predicted
        self.matched += other.matched

    @property
    def precision(self):
        return prf(self.matched, self.gold, self.predicted)[0]

    @property
    def recall(self):
        return prf(self.matched, self.gold, self.predicted)[1]

    @property
    def f1(self):
        return prf(self.matched, self.gold, self.predicted)[2]


@dataclass
class EvalReport(Counts):
    per_category: dict = field(default_factory=dict)

    def category(self, name: str) -> Counts:
        return self.per_category.setdefault(name, Counts())

    def rows(self, name: str = "") -> list:
        """``(metric, category, value)`` triples, overall category ``ALL``."""
        out = []
        for cat, c in [("ALL", self)] + sorted(self.per_category.items()):
            for metric in ("precision", "recall", "f1"):
                out.append((f"{name}{metric}", cat, getattr(c, metric)))
            for metric in ("gold", "predicted", "matched"):
                out.append((f"{name}{metric}", cat, getattr(c, metric)))
        return out

    def __str__(self):
        lines = [f"{'category':<10} {'P':>7} {'R':>7} {'F1':>7} {'gold':>6} {'pred':>6} {'match':>6}"]
        for cat, c in [("ALL", self)] + sorted(self.per_category.items()):
            lines.append(f"{cat:<10} {c.precision:7.2f} {c.recall:7.2f} {c.f1:7.2f} "
                         f"{c.gold:6d} {c.predicted:6d} {c.matched:6d}")
        return "\n".join(lines)


def _match_sentence(gold: Sequence[Mention], pred: Sequence[Mention], report: EvalReport):
    g = Counter(m.key for m in gold)
    p = Counter(m.key for m in pred)
    for (form, cat), n in g.items():
        report.category(cat).gold += n
    for (form, cat), n in p.items():
        report.category(cat).predicted += n
    for key, n in (g & p).items():
        report.category(key[1]).matched += n
    report.gold += sum(g.values())
    report.predicted += sum(p.values())
    report.matched += sum((g & p).values())


def _as_sentences(mentions) -> list:
    mentions = list(mentions)
    if mentions and isinstance(mentions[0], Mention):
        return [mentions]
    return mentions


def mention_f1(gold, pred) -> EvalReport:
    """Strict form-anchored F1.

    ``gold`` and ``pred`` are either flat mention lists (one sentence) or
    parallel lists of per-sentence mention lists.
    """
    gold, pred = _as_sentences(gold), _as_sentences(pred)
    if not gold and pred:
        gold = [[] for _ in pred]
    if not pred and gold:
        pred = [[] for _ in gold]
    if len(gold) != len(pred):
        raise ValueError(f"{len(gold)} gold sentences vs {len(pred)} predicted")
    report = EvalReport()
    for g, p in zip(gold, pred):
        _match_sentence(g, p, report)
    return report


def iaa(annotations_a, annotations_b) -> EvalReport:
    """Agreement as mention F1 with ``annotations_a`` taken as gold."""
    return mention_f1(annotations_a, annotations_b)


# -- granular views ---------------------------------------------------------

def token_gold_labels(sentence: Sentence) -> list:
    if sentence.token_labels is not None and not sentence.has_multilabels:
        return list(sentence.token_labels)
    if sentence.morpheme_labels is not None:
        return [extend_to_token_label(ml) for ml in gold_multilabels(sentence)]
    if sentence.has_multilabels:
        return [extend_to_token_label(ml) for ml in sentence.token_labels]
    raise ValueError(f"sentence {sentence.id!r} has no gold labels")


def token_mentions(sentence: Sentence) -> list:
    return extract_mentions(token_gold_labels(sentence), sentence.forms)


def morpheme_mentions(sentence: Sentence) -> list:
    if sentence.morpheme_labels is None:
        raise ValueError(f"sentence {sentence.id!r} has no morpheme labels")
    return extract_mentions(sentence.morpheme_labels, sentence.morpheme_forms)


def predicted_token_labels(pred: Sentence, variant: str) -> list:
    if variant == "token-single":
        if pred.token_labels is None or pred.has_multilabels:
            raise ValueError(f"prediction {pred.id!r} lacks token-single labels")
        return list(pred.token_labels)
    if variant == "token-multi":
        if not pred.has_multilabels:
            raise ValueError(f"prediction {pred.id!r} lacks multi-labels")
        return [extend_to_token_label(ml) for ml in pred.token_labels]
    if variant == "morpheme":
        if pred.morphemes is None or pred.morpheme_labels is None:
            raise ValueError(f"morpheme prediction {pred.id!r} lacks morpheme-to-token alignment")
        return [extend_to_token_label(ml) for ml in gold_multilabels(pred)]
    raise ValueError(f"unknown variant {variant!r}")


def _check_parallel(gold, pred):
    if len(gold) != len(pred):
        raise ValueError(f"{len(gold)} gold sentences vs {len(pred)} predicted")
    for g, p in zip(gold, pred):
        if len(g.tokens) != len(p.tokens):
            raise ValueError(f"sentence {g.id!r}: {len(g.tokens)} gold tokens vs {len(p.tokens)}")


def eval_token_level(gold: Sequence[Sentence], pred: Sequence[Sentence], variant: str) -> EvalReport:
    _check_parallel(gold, pred)
    g_m = [token_mentions(g) for g in gold]
    p_m = [extract_mentions(predicted_token_labels(p, variant), g.forms) for g, p in zip(gold, pred)]
    return mention_f1(g_m, p_m)


def predicted_morpheme_mentions(gold: Sentence, pred: Sentence, variant: str,
                                morphemes: Sentence = None) -> list:
    """Predicted mentions in morpheme space.

    For token-multi, ``morphemes`` supplies the segmentation the multi-labels
    are aligned to (gold, standard or hybrid); token-single mentions keep
    token forms.
    """
    if variant == "morpheme":
        if pred.morphemes is None or pred.morpheme_labels is None:
            raise ValueError(f"morpheme prediction {pred.id!r} lacks morphemes")
        return extract_mentions(pred.morpheme_labels, pred.morpheme_forms)
    if variant == "token-multi":
        seg = morphemes if morphemes is not None else pred
        if seg.morphemes is None:
            raise ValueError(f"token-multi prediction {pred.id!r} needs a morpheme segmentation")
        if not pred.has_multilabels:
            raise ValueError(f"prediction {pred.id!r} lacks multi-labels")
        groups = seg.token_morphemes()
        labels = align_sentence(pred.token_labels, groups)
        forms = [m.form for grp in groups for m in grp]
        return extract_mentions(labels, forms)
    if variant == "token-single":
        return extract_mentions(predicted_token_labels(pred, variant), gold.forms)
    raise ValueError(f"unknown variant {variant!r}")


def eval_morph_level(gold: Sequence[Sentence], pred: Sequence[Sentence], variant: str,
                     morphemes: Sequence[Sentence] = None) -> EvalReport:
    _check_parallel(gold, pred)
    if morphemes is not None and len(morphemes) != len(gold):
        raise ValueError("segmentation file has a different sentence count")
    g_m = [morpheme_mentions(g) for g in gold]
    p_m = [predicted_morpheme_mentions(g, p, variant, morphemes[i] if morphemes is not None else None)
           for i, (g, p) in enumerate(zip(gold, pred))]
    return mention_f1(g_m, p_m)


# -- segmentation -----------------------------------------------------------

def seg_pos_f1(gold: Sequence[Sentence], pred: Sequence[Sentence]) -> tuple:
    """Per-token multiset overlap of morphemes: ``(seg report, seg+POS report)``."""
    if len(gold) != len(pred):
        raise ValueError(f"{len(gold)} gold sentences vs {len(pred)} predicted")
    seg, segpos = EvalReport(), EvalReport()
    for g, p in zip(gold, pred):
        gg, pg = g.token_morphemes(), p.token_morphemes()
        if len(gg) != len(pg):
            raise ValueError(f"sentence {g.id!r}: token coverage differs ({len(gg)} vs {len(pg)})")
        for gm, pm in zip(gg, pg):
            for report, key in ((seg, lambda m: m.form), (segpos, lambda m: (m.form, m.pos))):
                a, b = Counter(map(key, gm)), Counter(map(key, pm))
                report.gold += len(gm)
                report.predicted += len(pm)
                report.matched += sum((a & b).values())
    return seg, segpos


# -- out-of-training-vocabulary analysis -------------------------------------

class OotvCategory(str, Enum):
    KNOWN = "Known"
    LEXICAL = "Lexical"
    COMPOSITIONAL = "Compositional"
    LEXCOMP = "LexComp"


_HARDNESS = [OotvCategory.LEXICAL, OotvCategory.COMPOSITIONAL, OotvCategory.LEXCOMP]


@dataclass
class TrainVocab:
    tokens: set = field(default_factory=set)
    morphemes: set = field(default_factory=set)

    @classmethod
    def from_corpus(cls, sentences: Iterable[Sentence]) -> "TrainVocab":
        v = cls()
        for s in sentences:
            v.tokens.update(s.forms)
            if s.morphemes is not None:
                v.morphemes.update(s.morpheme_forms)
        return v


def ootv_categorize(token_forms: Sequence[str], token_morphemes: Sequence[Sequence[str]],
                    vocab: TrainVocab) -> OotvCategory:
    """Category of a mention from its tokens and their gold morphemes.

    With several unseen tokens the hardest category wins
    (LexComp > Compositional > Lexical).
    """
    if len(token_forms) != len(token_morphemes):
        raise ValueError("morphology missing for some mention tokens")
    worst = None
    for form, morphs in zip(token_forms, token_morphemes):
        if form in vocab.tokens:
            continue
        if not morphs:
            raise ValueError(f"no morphemes for token {form!r}")
        forms = [m if isinstance(m, str) else m.form for m in morphs]
        if len(forms) == 1:
            cat = OotvCategory.LEXICAL
        elif all(f in vocab.morphemes for f in forms):
            cat = OotvCategory.COMPOSITIONAL
        else:
            cat = OotvCategory.LEXCOMP
        if worst is None or _HARDNESS.index(cat) > _HARDNESS.index(worst):
            worst = cat
    return worst or OotvCategory.KNOWN


def mention_category(mention: Mention, sentence: Sentence, vocab: TrainVocab) -> OotvCategory:
    """Category of a token-level mention, using the sentence's gold morphology."""
    start, end = mention.span
    groups = sentence.token_morphemes()
    return ootv_categorize(sentence.forms[start:end + 1], groups[start:end + 1], vocab)


def ootv_breakdown(gold: Sequence[Sentence], pred_labels: Sequence[Sequence[Label]],
                   vocab: TrainVocab) -> dict:
    """Token-level mention F1 per OOTV category.

    Gold mentions are grouped by category. A matched prediction is credited
    to the group of the gold mention it matches; an unmatched one to the
    group of its own span.
    """
    if len(gold) != len(pred_labels):
        raise ValueError(f"{len(gold)} gold sentences vs {len(pred_labels)} predictions")
    groups = {c: EvalReport() for c in OotvCategory}
    for s, labels in zip(gold, pred_labels):
        g_ms = token_mentions(s)
        p_ms = extract_mentions(list(labels), s.forms)
        g_by_key, p_by_key = {}, {}
        for m in g_ms:
            g_by_key.setdefault(m.key, []).append(m)
        for m in p_ms:
            p_by_key.setdefault(m.key, []).append(m)
        for key, gl in g_by_key.items():
            pl = p_by_key.get(key, [])
            for i, gm in enumerate(gl):
                rep = groups[mention_category(gm, s, vocab)]
                rep.gold += 1
                rep.category(key[1]).gold += 1
                if i < len(pl):
                    rep.predicted += 1
                    rep.matched += 1
                    rep.category(key[1]).predicted += 1
                    rep.category(key[1]).matched += 1
        for key, pl in p_by_key.items():
            for pm in pl[len(g_by_key.get(key, [])):]:
                rep = groups[mention_category(pm, s, vocab)]
                rep.predicted += 1
                rep.category(key[1]).predicted += 1
    return groups


def ootv_counts(sentences: Sequence[Sentence], vocab: TrainVocab) -> Counter:
    counts = Counter()
    for s in sentences:
        for m in token_mentions(s):
            counts[mention_category(m, s, vocab)] += 1
    return counts


def mean_ci(values: Sequence[float], z: float = 1.96) -> tuple:
    """Mean and half-width of a normal-approximation confidence interval."""
    n = len(values)
    if n == 0:
        raise ValueError("no values")
    mean = sum(values) / n
    if n == 1:
        return mean, 0.0
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, z * math.sqrt(var / n)
