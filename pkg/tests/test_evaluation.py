import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from morphner.domain import (
    Mention,
    Sentence,
    make_morphemes,
    make_tokens,
    parse_label,
)
from morphner.evaluation import (
    OotvCategory,
    TrainVocab,
    eval_morph_level,
    eval_token_level,
    iaa,
    mean_ci,
    mention_f1,
    ootv_breakdown,
    ootv_categorize,
    ootv_counts,
    prf,
    seg_pos_f1,
)
from morphner.labeling import gold_multilabels
from morphner.synthetic import generate_corpus, plant_ootv_sentences

from oracles import multiset_prf


def labels(text):
    return tuple(parse_label(x) for x in text.split())


ORG = Mention("bayit halavan", "ORG")


def test_exact_and_spurious():
    r = mention_f1([ORG], [ORG])
    assert (r.precision, r.recall, r.f1) == (100.0, 100.0, 100.0)
    r = mention_f1([ORG], [ORG, Mention("merotz", "PER")])
    assert r.precision == pytest.approx(50.0, abs=0.01)
    assert r.recall == pytest.approx(100.0, abs=0.01)
    assert r.f1 == pytest.approx(66.67, abs=0.01)


def test_boundary_mismatch():
    r = mention_f1([Mention("ha bayit ha lavan", "ORG")], [Mention("labayit halavan", "ORG")])
    assert r.matched == 0 and r.f1 == 0.0


def test_zero_denominators():
    r = mention_f1([ORG], [])
    assert (r.precision, r.recall, r.f1) == (0.0, 0.0, 0.0)
    assert prf(0, 0, 0) == (0.0, 0.0, 0.0)


def test_iaa_examples():
    a = [Mention(f"m{i}", "PER") for i in range(9)]
    b = [Mention(f"m{i}", "PER") for i in range(8)] + [Mention("x", "PER"), Mention("y", "ORG")]
    r = iaa(a, b)
    assert r.precision == pytest.approx(80.0)
    assert r.recall == pytest.approx(800 / 9)
    assert iaa(a, a).f1 == 100.0
    assert iaa(a, [Mention("zz", "LOC")]).f1 == 0.0


MENTION = st.builds(Mention, st.sampled_from(["a", "b", "a b", "c"]), st.sampled_from(["PER", "ORG"]))


@given(st.lists(MENTION, max_size=6), st.lists(MENTION, max_size=6), st.randoms())
def test_properties_against_oracle(a, b, rnd):
    r = mention_f1([a], [b])
    p, rec, f = multiset_prf([m.key for m in a], [m.key for m in b])
    assert (r.precision, r.recall) == pytest.approx((p, rec))
    assert r.f1 == pytest.approx(f)
    assert iaa([a], [b]).f1 == pytest.approx(iaa([b], [a]).f1)
    if a:
        assert iaa([a], [a]).f1 == 100.0
    shuffled = list(b)
    rnd.shuffle(shuffled)
    assert mention_f1([a], [shuffled]).f1 == r.f1
    assert r.matched <= min(r.gold, r.predicted)


def test_duplicates_count_once_each():
    r = mention_f1([ORG], [ORG, ORG])
    assert (r.matched, r.predicted) == (1, 2)


def test_micro_average_and_categories():
    r = mention_f1([[ORG], [Mention("x", "PER")]], [[ORG], []])
    assert (r.gold, r.predicted, r.matched) == (2, 1, 1)
    assert r.per_category["PER"].recall == 0.0
    assert r.per_category["ORG"].f1 == 100.0
    assert ("f1", "ALL", r.f1) in r.rows()
    assert "ALL" in str(r)
    with pytest.raises(ValueError):
        mention_f1([[ORG], []], [[ORG]])


def as_prediction(golden, variant):
    if variant == "token-single":
        return Sentence(golden.tokens, token_labels=golden.token_labels)
    if variant == "token-multi":
        return Sentence(golden.tokens, token_labels=tuple(gold_multilabels(golden)))
    return golden


@pytest.mark.parametrize("variant", ["token-single", "token-multi", "morpheme"])
def test_golden_token_level(golden, variant):
    r = eval_token_level([golden], [as_prediction(golden, variant)], variant)
    assert r.f1 == 100.0 and r.gold == 1


def test_all_o_prediction(golden):
    pred = Sentence(golden.tokens, token_labels=labels("O O O"))
    r = eval_token_level([golden], [pred], "token-single")
    assert (r.precision, r.recall) == (0.0, 0.0)


def test_morph_level_variants(golden):
    assert eval_morph_level([golden], [golden], "morpheme").f1 == 100.0
    multi = as_prediction(golden, "token-multi")
    assert eval_morph_level([golden], [multi], "token-multi", [golden]).f1 == 100.0
    single = as_prediction(golden, "token-single")
    r = eval_morph_level([golden], [single], "token-single")
    assert r.matched == 0 and r.gold == 1 and r.predicted == 1
    with pytest.raises(ValueError):
        eval_morph_level([golden], [multi], "token-multi")
    with pytest.raises(ValueError):
        eval_token_level([golden], [Sentence(golden.tokens)], "morpheme")


def test_morph_level_trimming(golden):
    # predicted segmentation drops the article of labayit: three labels on two morphemes
    seg = Sentence(golden.tokens, make_morphemes(
        [[("ha", "DET"), ("merotz", "NN")], [("le", "IN"), ("bayit", "NN")],
         [("ha", "DET"), ("lavan", "JJ")]]))
    multi = as_prediction(golden, "token-multi")
    r = eval_morph_level([golden], [multi], "token-multi", [seg])
    assert r.predicted == 1 and r.matched == 0
    from morphner.evaluation import predicted_morpheme_mentions
    (m,) = predicted_morpheme_mentions(golden, multi, "token-multi", seg)
    # the leading O is trimmed, so B-ORG lands on the preposition
    assert m.key == ("le bayit ha lavan", "ORG")


def test_seg_pos_examples(golden):
    assert [r.f1 for r in seg_pos_f1([golden], [golden])] == [100.0, 100.0]
    gold = Sentence(make_tokens(["labayit"]), make_morphemes([[("le", "IN"), ("ha", "DET"), ("bayit", "NN")]]))
    pred = Sentence(make_tokens(["labayit"]), make_morphemes([[("le", "IN"), ("bayit", "NN")]]))
    seg, segpos = seg_pos_f1([gold], [pred])
    assert seg.precision == 100.0
    assert seg.recall == pytest.approx(66.67, abs=0.01)
    wrong = Sentence(make_tokens(["labayit"]), make_morphemes([[("le", "IN"), ("ha", "DET"), ("bayit", "VB")]]))
    seg, segpos = seg_pos_f1([gold], [wrong])
    assert seg.f1 == 100.0 and segpos.f1 < 100.0
    with pytest.raises(ValueError):
        seg_pos_f1([gold], [golden])


def test_seg_at_least_segpos(language):
    corpus = generate_corpus(language, 30, seed=2)
    rng = random.Random(0)
    preds = []
    for s in corpus:
        groups = [[(m.form, rng.choice([m.pos, "NN"])) for m in g] for g in s.token_morphemes()]
        preds.append(Sentence(s.tokens, make_morphemes(groups)))
    seg, segpos = seg_pos_f1(corpus, preds)
    assert seg.f1 >= segpos.f1


def test_ootv_examples():
    vocab = TrainVocab({"ba", "thailand"}, {"le", "thailand", "ba"})
    assert ootv_categorize(["lethailand"], [["le", "thailand"]], vocab) == OotvCategory.COMPOSITIONAL
    assert ootv_categorize(["zz"], [["zz"]], vocab) == OotvCategory.LEXICAL
    assert ootv_categorize(["thailand"], [["thailand"]], vocab) == OotvCategory.KNOWN
    assert ootv_categorize(["mizz"], [["mi", "zz"]], vocab) == OotvCategory.LEXCOMP
    # hardest unknown token wins
    assert ootv_categorize(["zz", "lethailand"], [["zz"], ["le", "thailand"]], vocab) == \
        OotvCategory.COMPOSITIONAL
    with pytest.raises(ValueError):
        ootv_categorize(["zz"], [], vocab)


def test_planted_ootv(language):
    train = generate_corpus(language, 200, seed=1)
    vocab = TrainVocab.from_corpus(train)
    planted = plant_ootv_sentences(language, vocab, per_category=5, seed=4)
    sents = [s for s, _ in planted]
    counts = ootv_counts(sents, vocab)
    assert counts == {c: 5 for c in OotvCategory}
    gold_labels = [s.token_labels for s in sents]
    groups = ootv_breakdown(sents, gold_labels, vocab)
    assert all(groups[c].gold == 5 and groups[c].f1 == 100.0 for c in OotvCategory)
    empty = ootv_breakdown(sents, [labels(" ".join("O" * len(s.tokens))) for s in sents], vocab)
    assert all(r.recall == 0.0 for r in empty.values())


def test_ootv_only_known(golden):
    vocab = TrainVocab.from_corpus([golden])
    groups = ootv_breakdown([golden], [golden.token_labels], vocab)
    assert groups[OotvCategory.KNOWN].gold == 1
    assert sum(r.gold for r in groups.values()) == 1


def test_ootv_unmatched_prediction_uses_own_span(golden):
    vocab = TrainVocab({"labayit", "halavan"}, set())
    pred = labels("S-PER O O")
    groups = ootv_breakdown([golden], [pred], vocab)
    assert groups[OotvCategory.LEXCOMP].predicted == 1
    assert groups[OotvCategory.KNOWN].gold == 1 and groups[OotvCategory.KNOWN].matched == 0


def test_mean_ci():
    assert mean_ci([5.0]) == (5.0, 0.0)
    m, h = mean_ci([1.0, 2.0, 3.0])
    assert m == 2.0 and h == pytest.approx(1.96 * 1.0 / 3 ** 0.5)
    with pytest.raises(ValueError):
        mean_ci([])
