import functools

import pytest

from paracontact import corpus as K


@functools.lru_cache(maxsize=None)
def corpus_structure(name):
    m = K.load_corpus(name)
    return m, K.build_structure(m)


@functools.lru_cache(maxsize=None)
def corpus_points(name, n=30, seed=42):
    _, S = corpus_structure(name)
    return S.chart.sample(n, seed)


@pytest.fixture
def ex41():
    return corpus_structure("example41")[1]


@pytest.fixture
def ex42():
    return corpus_structure("example42")[1]


@pytest.fixture
def ex43():
    return corpus_structure("example43")[1]


@pytest.fixture
def ex43b():
    return corpus_structure("example43-bridge")[1]


@pytest.fixture
def zetamu():
    return corpus_structure("zetamu-plus-1")[1]
