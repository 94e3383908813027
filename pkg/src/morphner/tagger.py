"""Linear-chain sequence labeler for the three NER granularities.

Emission scores come from sparse indicator features (plus an optional dense
block from pre-computed vectors); the chain layer is a first-order CRF with
START/STOP transitions. Training defaults to the averaged structured
perceptron; ``algorithm="crf"`` runs log-likelihood SGD instead.
"""
from __future__ import annotations

import json
import random
from collections.abc import Sequence
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .domain import (
    LabelError,
    Sentence,
    format_label,
    format_multilabel,
    parse_label,
    parse_multilabel,
)
from .labeling import extend_to_token_label, gold_multilabels

VARIANTS = ("token-single", "token-multi", "morpheme")
MODEL_FORMAT = "morphner-chain"
MODEL_VERSION = 1

# learning rates per variant for CRF-SGD training
DEFAULT_LR = {"token-single": 0.01, "token-multi": 0.005, "morpheme": 0.01}

BOS = "<s>"
EOS = "</s>"


class ModelError(ValueError):
    pass


@dataclass
class FeatureConfig:
    affix_max: int = 4
    window: int = 2
    shape: bool = True
    lowercase: bool = True
    char_ngram_max: int = 0
    use_dense: bool = True


@dataclass
class FeatureVector:
    sparse: tuple
    dense: Optional[np.ndarray] = None


def word_shape(form: str) -> str:
    out = []
    for c in form:
        if c.isalpha():
            k = "A" if c.isupper() else "a"
        elif c.isdigit():
            k = "0"
        else:
            k = "."
        if not out or out[-1] != k:
            out.append(k)
    return "".join(out)


def featurize(units: Sequence[str], position: int, config: FeatureConfig = None,
              dense=None) -> FeatureVector:
    """Indicator features for ``units[position]``.

    ``dense`` is an optional form -> vector table; a miss fires the
    ``noemb`` indicator instead of attaching zeros.
    """
    if not 0 <= position < len(units):
        raise IndexError(f"position {position} outside sentence of {len(units)}")
    config = config or FeatureConfig()
    w = units[position]
    feats = ["bias", "w=" + w]
    if config.lowercase:
        feats.append("lw=" + w.lower())
    for k in range(1, config.affix_max + 1):
        if len(w) >= k:
            feats.append(f"p{k}={w[:k]}")
            feats.append(f"s{k}={w[-k:]}")
    for d in range(1, config.window + 1):
        left = units[position - d] if position - d >= 0 else BOS
        right = units[position + d] if position + d < len(units) else EOS
        feats.append(f"w-{d}={left}")
        feats.append(f"w+{d}={right}")
    if config.shape:
        feats.append("shape=" + word_shape(w))
    for k in range(2, config.char_ngram_max + 1):
        for j in range(len(w) - k + 1):
            feats.append(f"cg{k}={w[j:j + k]}")
    vec = None
    if dense is not None and config.use_dense:
        vec = dense.get(w)
        if vec is None:
            feats.append("noemb")
    return FeatureVector(tuple(feats), vec)


def _logsumexp(x, axis=None):
    m = np.max(x, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    out = np.log(np.sum(np.exp(x - m), axis=axis, keepdims=True)) + m
    return np.squeeze(out, axis=axis) if axis is not None else out.item()


# -- chain inference on raw score arrays ------------------------------------

def viterbi_decode(emit, trans, start, stop):
    """Best label-index path and its score.

    Ties go to the lower label index at the latest differing position.
    """
    n, L = emit.shape
    if n == 0:
        raise ValueError("cannot decode an empty sequence")
    score = start + emit[0]
    back = np.zeros((n, L), dtype=int)
    cols = np.arange(L)
    for i in range(1, n):
        cand = score[:, None] + trans
        back[i] = np.argmax(cand, axis=0)
        score = cand[back[i], cols] + emit[i]
    score = score + stop
    best = int(np.argmax(score))
    total = float(score[best])
    path = [best]
    for i in range(n - 1, 0, -1):
        best = int(back[i, best])
        path.append(best)
    return path[::-1], total


def sequence_score(emit, trans, start, stop, path) -> float:
    s = start[path[0]] + stop[path[-1]]
    for i, y in enumerate(path):
        s += emit[i, y]
        if i:
            s += trans[path[i - 1], y]
    return float(s)


def forward_logz(emit, trans, start, stop) -> float:
    alpha = start + emit[0]
    for i in range(1, len(emit)):
        alpha = _logsumexp(alpha[:, None] + trans, axis=0) + emit[i]
    return _logsumexp(alpha + stop)


def marginals(emit, trans, start, stop):
    """Unary ``(n, L)`` and pairwise ``(n-1, L, L)`` marginals plus log Z."""
    n, L = emit.shape
    alpha = np.empty((n, L))
    beta = np.empty((n, L))
    alpha[0] = start + emit[0]
    for i in range(1, n):
        alpha[i] = _logsumexp(alpha[i - 1][:, None] + trans, axis=0) + emit[i]
    beta[n - 1] = stop
    for i in range(n - 2, -1, -1):
        beta[i] = _logsumexp(trans + (emit[i + 1] + beta[i + 1])[None, :], axis=1)
    logz = _logsumexp(alpha[n - 1] + stop)
    unary = np.exp(alpha + beta - logz)
    pair = np.empty((max(n - 1, 0), L, L))
    for i in range(1, n):
        pair[i - 1] = np.exp(alpha[i - 1][:, None] + trans
                             + (emit[i] + beta[i])[None, :] - logz)
    return unary, pair, logz


# -- model ------------------------------------------------------------------

@dataclass
class ChainModel:
    variant: str
    labels: list
    features: list
    emission: np.ndarray
    transition: np.ndarray
    start: np.ndarray
    stop: np.ndarray
    config: FeatureConfig = field(default_factory=FeatureConfig)
    dense_weights: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ModelError(f"unknown variant {self.variant!r}")
        self.feature_index = {f: i for i, f in enumerate(self.features)}
        self.label_index = {lab: i for i, lab in enumerate(self.labels)}
        L = len(self.labels)
        if self.emission.shape != (len(self.features), L) or self.transition.shape != (L, L):
            raise ModelError("weight shapes do not match vocabularies")

    @classmethod
    def zeros(cls, variant, labels, features, config=None, dense_dim=0):
        L, F = len(labels), len(features)
        return cls(variant, list(labels), list(features), np.zeros((F, L)),
                   np.zeros((L, L)), np.zeros(L), np.zeros(L),
                   config or FeatureConfig(),
                   np.zeros((dense_dim, L)) if dense_dim else None)

    @property
    def num_labels(self) -> int:
        return len(self.labels)

    def copy(self) -> "ChainModel":
        return ChainModel(self.variant, list(self.labels), list(self.features),
                          self.emission.copy(), self.transition.copy(), self.start.copy(),
                          self.stop.copy(), self.config,
                          None if self.dense_weights is None else self.dense_weights.copy())

    def encode(self, units: Sequence[str], dense=None) -> list:
        """Per-position ``(feature index array, dense vector or None)``."""
        if self.dense_weights is not None and dense is None and self.config.use_dense:
            raise ModelError("model was trained with dense features; pass the table")
        out = []
        for i in range(len(units)):
            fv = featurize(units, i, self.config, dense if self.dense_weights is not None else None)
            idx = np.array([self.feature_index[f] for f in fv.sparse if f in self.feature_index],
                           dtype=int)
            out.append((idx, fv.dense))
        return out

    def emissions(self, encoded) -> np.ndarray:
        em = np.empty((len(encoded), self.num_labels))
        for i, (idx, vec) in enumerate(encoded):
            em[i] = self.emission[idx].sum(axis=0)
            if vec is not None and self.dense_weights is not None:
                em[i] += vec @ self.dense_weights
        return em

    def decode_indices(self, encoded) -> list:
        path, _ = viterbi_decode(self.emissions(encoded), self.transition, self.start, self.stop)
        return path


def viterbi(model: ChainModel, units: Sequence[str], dense=None) -> list:
    """Best label strings for ``units``."""
    if not units:
        raise ValueError("cannot tag an empty sequence")
    return [model.labels[i] for i in model.decode_indices(model.encode(units, dense))]


def log_partition(model: ChainModel, units: Sequence[str], dense=None) -> float:
    em = model.emissions(model.encode(units, dense))
    return forward_logz(em, model.transition, model.start, model.stop)


def nll_gradient(model: ChainModel, encoded, gold: Sequence[int]):
    """Negative log-likelihood of ``gold`` and its gradient.

    The gradient is returned as a :class:`ChainModel`-shaped tuple
    ``(emission, transition, start, stop, dense)``.
    """
    em = model.emissions(encoded)
    unary, pair, logz = marginals(em, model.transition, model.start, model.stop)
    nll = logz - sequence_score(em, model.transition, model.start, model.stop, gold)
    n, L = em.shape
    d_em = unary.copy()
    d_em[np.arange(n), gold] -= 1.0
    g_emission = np.zeros_like(model.emission)
    g_dense = None if model.dense_weights is None else np.zeros_like(model.dense_weights)
    for i, (idx, vec) in enumerate(encoded):
        np.add.at(g_emission, idx, d_em[i])
        if vec is not None and g_dense is not None:
            g_dense += np.outer(vec, d_em[i])
    g_trans = pair.sum(axis=0)
    for i in range(1, n):
        g_trans[gold[i - 1], gold[i]] -= 1.0
    g_start = unary[0].copy()
    g_start[gold[0]] -= 1.0
    g_stop = unary[n - 1].copy()
    g_stop[gold[-1]] -= 1.0
    return nll, (g_emission, g_trans, g_start, g_stop, g_dense)


# -- corpus views -----------------------------------------------------------

def units_and_labels(sentence: Sentence, variant: str, need_labels: bool = True):
    """Unit forms and label strings of ``sentence`` for ``variant``."""
    if variant == "morpheme":
        if sentence.morphemes is None:
            raise ModelError(f"sentence {sentence.id!r} has no morphemes for the morpheme variant")
        units = sentence.morpheme_forms
        if not need_labels:
            return units, None
        if sentence.morpheme_labels is None:
            raise ModelError(f"sentence {sentence.id!r} has no morpheme labels")
        return units, [format_label(lab) for lab in sentence.morpheme_labels]
    if variant not in VARIANTS:
        raise ModelError(f"unknown variant {variant!r}")
    units = sentence.forms
    if not need_labels:
        return units, None
    if variant == "token-multi":
        if sentence.morpheme_labels is not None:
            mls = gold_multilabels(sentence)
        elif sentence.has_multilabels:
            mls = sentence.token_labels
        else:
            raise ModelError(f"sentence {sentence.id!r} has no multi-labels for token-multi")
        return units, [format_multilabel(ml) for ml in mls]
    if sentence.token_labels is not None:
        if sentence.has_multilabels:
            raise ModelError(f"sentence {sentence.id!r} carries multi-labels, not token-single labels")
        return units, [format_label(lab) for lab in sentence.token_labels]
    if sentence.morpheme_labels is not None:
        return units, [format_label(extend_to_token_label(ml)) for ml in gold_multilabels(sentence)]
    raise ModelError(f"sentence {sentence.id!r} has no token labels")


# -- training ---------------------------------------------------------------

@dataclass
class TrainConfig:
    epochs: int = 20
    learning_rate: Optional[float] = None
    seed: int = 0
    average: bool = True
    l2: float = 0.0
    algorithm: str = "perceptron"
    batch_size: int = 8
    lr_decay: float = 0.05
    features: FeatureConfig = field(default_factory=FeatureConfig)

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.learning_rate is not None and self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if self.algorithm not in ("perceptron", "crf"):
            raise ValueError(f"unknown training algorithm {self.algorithm!r}")
        if isinstance(self.features, dict):
            self.features = FeatureConfig(**self.features)


def _label_vocab(label_seqs) -> list:
    seen = {lab for seq in label_seqs for lab in seq}
    rest = sorted(seen - {"O"})
    return (["O"] if "O" in seen else []) + rest


def train(corpus: Sequence[Sentence], variant: str, config: TrainConfig = None,
          dense=None) -> ChainModel:
    config = config or TrainConfig()
    if variant not in VARIANTS:
        raise ModelError(f"unknown variant {variant!r}")
    data = [units_and_labels(s, variant) for s in corpus]
    data = [(u, y) for u, y in data if u]
    if not data:
        raise ModelError("empty training corpus")
    labels = _label_vocab(y for _, y in data)
    features = {}
    for units, _ in data:
        for i in range(len(units)):
            for f in featurize(units, i, config.features, dense).sparse:
                features.setdefault(f, len(features))
    dim = dense.dim if (dense is not None and config.features.use_dense) else 0
    model = ChainModel.zeros(variant, labels, list(features), config.features, dim)
    encoded = [(model.encode(u, dense), [model.label_index[t] for t in y]) for u, y in data]
    if config.algorithm == "perceptron":
        _train_perceptron(model, encoded, config)
    else:
        _train_crf(model, encoded, config)
    return model


def _params(model):
    ps = [model.emission, model.transition, model.start, model.stop]
    if model.dense_weights is not None:
        ps.append(model.dense_weights)
    return ps


def _train_perceptron(model: ChainModel, encoded, config: TrainConfig):
    rng = random.Random(config.seed)
    order = list(range(len(encoded)))
    params = _params(model)
    totals = [np.zeros_like(p) for p in params]
    step = 1
    for _ in range(config.epochs):
        rng.shuffle(order)
        for k in order:
            enc, gold = encoded[k]
            pred = model.decode_indices(enc)
            if pred != gold:
                deltas = _feature_diff(model, enc, gold, pred)
                for p, t, d in zip(params, totals, deltas):
                    p += d
                    t += step * d
            step += 1
    if config.average:
        for p, t in zip(params, totals):
            p -= t / step


def _feature_diff(model, enc, gold, pred):
    """Phi(gold) - Phi(pred) in parameter shapes."""
    d_em = np.zeros_like(model.emission)
    d_tr = np.zeros_like(model.transition)
    d_st = np.zeros_like(model.start)
    d_sp = np.zeros_like(model.stop)
    d_de = None if model.dense_weights is None else np.zeros_like(model.dense_weights)
    for i, ((idx, vec), g, p) in enumerate(zip(enc, gold, pred)):
        if g != p:
            np.add.at(d_em, (idx, g), 1.0)
            np.add.at(d_em, (idx, p), -1.0)
            if vec is not None and d_de is not None:
                d_de[:, g] += vec
                d_de[:, p] -= vec
        if i:
            d_tr[gold[i - 1], g] += 1.0
            d_tr[pred[i - 1], p] -= 1.0
    d_st[gold[0]] += 1.0
    d_st[pred[0]] -= 1.0
    d_sp[gold[-1]] += 1.0
    d_sp[pred[-1]] -= 1.0
    out = [d_em, d_tr, d_st, d_sp]
    if d_de is not None:
        out.append(d_de)
    return out


def _train_crf(model: ChainModel, encoded, config: TrainConfig):
    rng = random.Random(config.seed)
    lr0 = config.learning_rate or DEFAULT_LR[model.variant]
    order = list(range(len(encoded)))
    params = _params(model)
    for epoch in range(config.epochs):
        lr = lr0 / (1.0 + config.lr_decay * epoch)
        rng.shuffle(order)
        for b in range(0, len(order), config.batch_size):
            grads = [np.zeros_like(p) for p in params]
            for k in order[b:b + config.batch_size]:
                enc, gold = encoded[k]
                _, g = nll_gradient(model, enc, gold)
                for acc, gi in zip(grads, g):
                    if gi is not None:
                        acc += gi
            for p, g in zip(params, grads):
                if config.l2:
                    g += config.l2 * p
                p -= lr * g


def corpus_nll(model: ChainModel, corpus: Sequence[Sentence], dense=None) -> float:
    """Summed NLL; gold labels unknown to the model count as infinite."""
    total = 0.0
    for s in corpus:
        units, labels = units_and_labels(s, model.variant)
        if any(t not in model.label_index for t in labels):
            return float("inf")
        enc = model.encode(units, dense)
        nll, _ = nll_gradient(model, enc, [model.label_index[t] for t in labels])
        total += nll
    return total


# -- tagging ----------------------------------------------------------------

def tag(model: ChainModel, sentence: Sentence, dense=None) -> list:
    """Labels per unit: ``Label`` for token-single/morpheme, tuples for token-multi."""
    units, _ = units_and_labels(sentence, model.variant, need_labels=False)
    out = viterbi(model, units, dense)
    try:
        if model.variant == "token-multi":
            return [parse_multilabel(t) for t in out]
        return [parse_label(t) for t in out]
    except LabelError as e:
        raise ModelError(f"model emitted an unparsable label: {e}") from None


# -- serialization ----------------------------------------------------------

def model_to_dict(model: ChainModel) -> dict:
    rows = {}
    for f, i in model.feature_index.items():
        row = model.emission[i]
        if np.any(row):
            rows[f] = row.tolist()
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "variant": model.variant,
        "labels": model.labels,
        "config": asdict(model.config),
        "features": model.features,
        "emission": rows,
        "transition": model.transition.tolist(),
        "start": model.start.tolist(),
        "stop": model.stop.tolist(),
        "dense": None if model.dense_weights is None else model.dense_weights.tolist(),
    }


def model_from_dict(d: dict) -> ChainModel:
    if d.get("format") != MODEL_FORMAT:
        raise ModelError(f"not a chain model file (format {d.get('format')!r})")
    if d.get("version") != MODEL_VERSION:
        raise ModelError(f"unsupported model version {d.get('version')!r}, expected {MODEL_VERSION}")
    features = d["features"]
    labels = d["labels"]
    emission = np.zeros((len(features), len(labels)))
    index = {f: i for i, f in enumerate(features)}
    for f, row in d["emission"].items():
        emission[index[f]] = row
    dense = None if d["dense"] is None else np.array(d["dense"], dtype=float).reshape(-1, len(labels))
    model = ChainModel(d["variant"], labels, features, emission,
                       np.array(d["transition"], dtype=float).reshape(len(labels), len(labels)),
                       np.array(d["start"], dtype=float), np.array(d["stop"], dtype=float),
                       FeatureConfig(**d["config"]), dense)
    if model.variant == "token-multi":
        for lab in labels:
            parse_multilabel(lab)
    return model


def save_model(model: ChainModel, path):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(model_to_dict(model), f, ensure_ascii=False)
        f.write("\n")


def load_model(path) -> ChainModel:
    with open(path, encoding="utf-8") as f:
        return model_from_dict(json.load(f))
