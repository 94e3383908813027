import random

import pytest

from morphner.domain import make_tokens, parse_multilabel
from morphner.lattice import Analysis, Lexicon, SentenceLattice, TokenLattice, enumerate_paths, prune
from morphner.md import (
    MdModel,
    analysis_features,
    load_md_model,
    md_decode,
    md_hybrid,
    md_standard,
    save_md_model,
    score_path,
    train_md,
    transition_feature,
)
from morphner.tagger import ModelError, TrainConfig, train

from oracles import random_lattice_layout


def build(layout):
    return SentenceLattice(tuple(
        TokenLattice(i, f"t{i}", tuple(Analysis.of(a, i) for a in analyses))
        for i, analyses in enumerate(layout)))


def brute_best(model, lattice):
    forms = [tl.form for tl in lattice.tokens]
    best, best_score = None, None
    for p in enumerate_paths(lattice, cap=10_000):
        s = score_path(model, p, forms)
        if best_score is None or s > best_score:
            best, best_score = p, s
    return best, best_score


def random_weights(rng, lattice, integer=False):
    forms = [tl.form for tl in lattice.tokens]
    feats = set()
    tags = {m.pos for tl in lattice.tokens for a in tl.analyses for m in a.morphemes}
    for tl in lattice.tokens:
        for a in tl.analyses:
            feats.update(analysis_features(a, forms))
    for a in tags | {"<s>"}:
        for b in tags | {"</s>"}:
            feats.add(transition_feature(a, b))
    draw = (lambda: float(rng.randint(-1, 1))) if integer else (lambda: rng.gauss(0, 1))
    return MdModel({f: draw() for f in sorted(feats)})


def independent_score(model, path, forms):
    w = model.weights.get
    total, prev, prev_tok = 0.0, "<s>", None
    for m in path:
        if m.token_index != prev_tok:
            group = [x for x in path if x.token_index == m.token_index]
            total += sum(w(f, 0.0) for f in analysis_features(Analysis(tuple(group)), forms))
            prev_tok = m.token_index
            total += w(f"t={prev}>{m.pos}", 0.0)
        prev = m.pos
    return total + w(f"t={prev}></s>", 0.0)


def test_zero_model_scores_zero():
    lat = build([[(("a", "X"),), (("b", "Y"), ("c", "Z"))]])
    for p in enumerate_paths(lat):
        assert score_path(MdModel(), p, ["t0"]) == 0.0
    with pytest.raises(ValueError):
        score_path(MdModel(), [], ["t0"])


def test_score_path_recomputation_and_additivity():
    rng = random.Random(3)
    for _ in range(30):
        lat = build(random_lattice_layout(rng, rng.randint(1, 4)))
        model = random_weights(rng, lat)
        forms = [tl.form for tl in lat.tokens]
        for p in enumerate_paths(lat, cap=50):
            assert score_path(model, p, forms) == pytest.approx(independent_score(model, p, forms))
    # bumping one edge feature moves exactly the paths that use it
    lat = build([[(("a", "X"),), (("b", "X"),)]])
    model = MdModel({"f=a|p=X": 1.5})
    p_a, p_b = enumerate_paths(lat)
    assert score_path(model, p_a, ["t0"]) - score_path(model, p_b, ["t0"]) == pytest.approx(1.5)


def test_decode_matches_brute_force():
    rng = random.Random(11)
    for _ in range(100):
        lat = build(random_lattice_layout(rng, rng.randint(1, 5)))
        model = random_weights(rng, lat, integer=rng.random() < 0.5)
        res = md_decode(model, lat)
        best, best_score = brute_best(model, lat)
        assert res.morphemes == best
        assert res.score == pytest.approx(best_score)


def test_single_path_and_ties():
    lat = build([[(("a", "X"), ("b", "Y"))]])
    assert md_decode(MdModel(), lat).choices == (0,)
    tie = build([[(("a", "X"),), (("b", "X"),)], [(("c", "X"),), (("d", "X"),)]])
    assert md_decode(MdModel(), tie).choices == (0, 0)
    with pytest.raises(ValueError):
        md_decode(MdModel(), SentenceLattice(()))


def test_standard_unambiguous_and_empty_lexicon():
    lex = Lexicon()
    lex.add("bayit", [("bayit", "NN")])
    lex.add("lavan", [("lavan", "JJ")])
    res = md_standard(MdModel(), lex, make_tokens(["bayit", "lavan"]))
    assert [(m.form, m.pos) for m in res.morphemes] == [("bayit", "NN"), ("lavan", "JJ")]
    res = md_standard(MdModel(), Lexicon(), make_tokens(["qwz", "abc"]))
    assert [m.form for m in res.morphemes] == ["qwz", "abc"]


def test_hybrid_forces_length(golden, golden_lexicon):
    # a model that prefers the indefinite reading
    model = MdModel({"n=2": 5.0})
    std = md_standard(model, golden_lexicon, golden.tokens)
    assert [m.form for m in std.token_analyses()[1]] == ["le", "bayit"]
    mls = [parse_multilabel(x) for x in ["O^O", "O^B-ORG^I-ORG", "I-ORG^E-ORG"]]
    hyb = md_hybrid(model, golden_lexicon, golden.tokens, mls)
    assert [m.form for m in hyb.token_analyses()[1]] == ["le", "ha", "bayit"]
    assert not hyb.fallback_tokens


def test_hybrid_noop_and_fallback(golden, golden_lexicon):
    model = MdModel({"n=2": 5.0})
    std = md_standard(model, golden_lexicon, golden.tokens)
    lengths = [len(g) for g in std.token_analyses()]
    noop = md_hybrid(model, golden_lexicon, golden.tokens, [("O",) * n for n in lengths])
    assert noop.morphemes == std.morphemes
    fb = md_hybrid(model, golden_lexicon, golden.tokens, [("O",) * 2, ("O",) * 5, ("O",) * 2])
    assert fb.fallback_tokens == {1}
    assert fb.token_analyses()[1] == std.token_analyses()[1]


def test_hybrid_with_model(golden, golden_lexicon):
    ner = train([golden], "token-multi", TrainConfig(epochs=5))
    res = md_hybrid(MdModel({"n=2": 5.0}), golden_lexicon, golden.tokens, ner)
    assert [len(g) for g in res.token_analyses()] == [2, 3, 2]
    wrong = train([golden], "token-single", TrainConfig(epochs=1))
    with pytest.raises(ModelError):
        md_hybrid(MdModel(), golden_lexicon, golden.tokens, wrong)


def test_constraint_satisfaction_random():
    rng = random.Random(21)
    for _ in range(100):
        layout = random_lattice_layout(rng, rng.randint(1, 4))
        lat = build(layout)
        lens = [rng.randint(1, 3) for _ in layout]
        pruned = prune(lat, [("O",) * n for n in lens])
        model = random_weights(rng, lat)
        res = md_decode(model, pruned)
        assert res.morphemes == brute_best(model, pruned)[0]
        for t, group in enumerate(res.token_analyses()):
            if t not in res.fallback_tokens:
                assert len(group) == lens[t]


def test_training_learns_segmentation(language):
    from morphner.synthetic import generate_corpus
    corpus = generate_corpus(language, 150, seed=5)
    lex = language.lexicon()
    model = train_md(corpus, lex, epochs=5)
    right = total = 0
    for s in corpus:
        res = md_standard(model, lex, s.tokens)
        right += sum(a == b for a, b in zip(res.token_analyses(), s.token_morphemes()))
        total += len(s.tokens)
    assert right / total > 0.8
    again = train_md(corpus, lex, epochs=5)
    assert again.weights == model.weights
    with pytest.raises(ValueError):
        train_md(corpus, lex, epochs=0)
    with pytest.raises(ModelError):
        train_md([], lex)


def test_md_model_io(tmp_path):
    p = tmp_path / "md.json"
    save_md_model(MdModel({"n=2": 1.0}), p)
    assert load_md_model(p).weights == {"n=2": 1.0}
    p.write_text('{"format": "morphner-md", "version": 7, "weights": {}}')
    with pytest.raises(ModelError):
        load_md_model(p)
