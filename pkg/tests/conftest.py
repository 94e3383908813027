from pathlib import Path

import pytest

from morphner.corpus_io import read_lexicon, read_morpheme_corpus, read_token_corpus
from morphner.synthetic import generate_corpus, make_language

DATA = Path(__file__).parent / "data"


@pytest.fixture
def data_dir():
    return DATA


@pytest.fixture
def golden():
    """The golden sentence, with token-single gold and morpheme gold."""
    tokens = read_token_corpus(DATA / "golden.tok.tsv")
    return read_morpheme_corpus(DATA / "golden.morph.tsv", tokens).sentences[0]


@pytest.fixture
def golden_lexicon():
    return read_lexicon(DATA / "golden.lexicon.tsv")


@pytest.fixture(scope="session")
def language():
    return make_language(seed=3)


@pytest.fixture(scope="session")
def small_corpus(language):
    return generate_corpus(language, 50, seed=11)
