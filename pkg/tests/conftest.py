"""Directory-wide fixtures; the builders themselves live in oracles.py."""

import pytest

from oracles import make_corpus, marker_corpus


@pytest.fixture
def small_marker_corpus():
    return marker_corpus(40, seed=3)


@pytest.fixture
def toy_corpus():
    return make_corpus([("a", "a b b", 0), ("b", "b", 1)])
