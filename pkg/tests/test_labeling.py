import itertools
import re

import pytest
from hypothesis import given
from hypothesis import strategies as st

from morphner.domain import LabelError, Sentence, make_morphemes, make_tokens, parse_label
from morphner.labeling import (
    align_multilabel_to_morphemes,
    collapse_biose,
    extend_to_token_label,
    gold_multilabels,
)

VALID = re.compile("O+|O*BI*|O*BI*EO*|I+|I*EO*|O*SO*")


def labels(text):
    return [parse_label(x) for x in text.split()]


def set_semantics(chars):
    if "S" in chars or ("B" in chars and "E" in chars):
        return "S"
    for c in "EBI":
        if c in chars:
            return c
    return "O"


@pytest.mark.parametrize("chars,expected", [
    ("OBI", "B"), ("IE", "E"), ("OOO", "O"), ("EB", "S"),
    ("O", "O"), ("B", "B"), ("I", "I"), ("E", "E"), ("S", "S"),
    ("OBIE", "S"), ("OSO", "S"), ("BIIEO", "S"), ("IIEOO", "E"),
    ("IOI", "I"), ("BOB", "B"), ("OEO", "E"), ("SB", "S"),
])
def test_collapse_examples(chars, expected):
    assert collapse_biose(chars) == expected


def test_collapse_rejects():
    with pytest.raises(LabelError):
        collapse_biose("OXB")
    with pytest.raises(LabelError):
        collapse_biose("")


def test_collapse_total_and_consistent_up_to_6():
    for n in range(1, 7):
        for chars in map("".join, itertools.product("OBISE", repeat=n)):
            got = collapse_biose(chars)
            assert got in "OBISE"
            if VALID.fullmatch(chars):
                assert set_semantics(chars) == got, chars


@pytest.mark.parametrize("multi,expected", [
    ("O B-ORG I-ORG", "B-ORG"),
    ("I-ORG E-ORG", "E-ORG"),
    ("O O", "O"),
    ("O S-GPE", "S-GPE"),
    ("E-PER B-ORG", "S-PER"),
])
def test_extend_to_token_label(multi, expected):
    assert extend_to_token_label(labels(multi)) == parse_label(expected)


def test_align_examples():
    assert align_multilabel_to_morphemes(labels("O B-ORG I-ORG"), ["le", "ha", "bayit"]) == \
        list(zip(["le", "ha", "bayit"], labels("O B-ORG I-ORG")))
    assert align_multilabel_to_morphemes(labels("B-ORG E-ORG"), ["m1", "m2", "m3"]) == \
        list(zip(["m1", "m2", "m3"], labels("O B-ORG E-ORG")))
    assert align_multilabel_to_morphemes(labels("O B-ORG I-ORG"), ["m1", "m2"]) == \
        list(zip(["m1", "m2"], labels("B-ORG I-ORG")))


LABEL_ST = st.sampled_from(labels("O B-ORG I-ORG E-ORG S-PER"))


@given(st.lists(LABEL_ST, min_size=1, max_size=6), st.integers(1, 6))
def test_align_keeps_suffix(labs, n_forms):
    forms = [f"m{i}" for i in range(n_forms)]
    out = [lab for _, lab in align_multilabel_to_morphemes(labs, forms)]
    assert len(out) == n_forms
    k = min(len(labs), n_forms)
    assert out[n_forms - k:] == labs[len(labs) - k:]
    assert all(lab.boundary == "O" for lab in out[:n_forms - k])


def test_gold_multilabels_golden(golden):
    assert gold_multilabels(golden) == [
        tuple(labels("O O")), tuple(labels("O B-ORG I-ORG")), tuple(labels("I-ORG E-ORG"))]
    assert [extend_to_token_label(ml) for ml in gold_multilabels(golden)] == list(golden.token_labels)


def test_gold_multilabels_simple_cases():
    s = Sentence(make_tokens(["a", "b"]), make_morphemes([["a"], ["b"]]),
                 morpheme_labels=labels("O S-PER"))
    assert gold_multilabels(s) == [tuple(labels("O")), tuple(labels("S-PER"))]
    s = Sentence(make_tokens(["ab"]), make_morphemes([["a", "b"]]), morpheme_labels=labels("O O"))
    assert gold_multilabels(s) == [tuple(labels("O O"))]
    with pytest.raises(ValueError):
        gold_multilabels(Sentence(make_tokens(["a"]), make_morphemes([["a"]])))
