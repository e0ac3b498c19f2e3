import pytest

from speechadapt.phonemes import Lexicon, LexiconEntry, PhonemeInventory


@pytest.fixture
def toy_inventory():
    return PhonemeInventory(["a", "b", "c"])


@pytest.fixture
def toy_lexicon(toy_inventory):
    return Lexicon(
        toy_inventory,
        [
            LexiconEntry("aba", ("a", "b", "a")),
            LexiconEntry("bab", ("b", "a", "b")),
            LexiconEntry("ac", ("a", "c")),
        ],
    )
