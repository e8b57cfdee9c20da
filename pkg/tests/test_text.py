import unicodedata

import pytest
from hypothesis import given
from hypothesis import strategies as st

from tieqviet.text import (PAD, PAD_INDEX, UNK, UNK_INDEX, Alphabet, TextDecodeError,
                           build_alphabets, normalize, read_lines)


def test_normalize_composes_and_strips():
    decomposed = unicodedata.normalize("NFD", "  Tiếng Việt\r\n")
    assert normalize(decomposed) == "Tiếng Việt"
    assert normalize("Tiếng Việt".encode()) == "Tiếng Việt"


def test_normalize_reports_offset_of_bad_byte():
    with pytest.raises(TextDecodeError) as err:
        normalize(b"abc\xffdef")
    assert err.value.offset == 3


@given(st.text())
def test_normalize_is_idempotent(s):
    once = normalize(s)
    assert normalize(once) == once
    assert unicodedata.is_normalized("NFC", once)


def test_read_lines(tmp_path):
    p = tmp_path / "c.txt"
    p.write_bytes("một\r\nhai \n\nba".encode())
    assert read_lines(p) == ["một", "hai", "", "ba"]
    p.write_bytes(b"")
    assert read_lines(p) == []


def test_alphabet_reserves_pad_and_unk():
    a = build_alphabets(["ba"], ["za"])
    assert a.symbols[:2] == (PAD, UNK)
    assert a.index(PAD) == PAD_INDEX and a.index(UNK) == UNK_INDEX
    assert a.symbols[2:] == ("a", "b", "z")
    assert a.index("ß") == UNK_INDEX
    assert a.m == 5


def test_alphabet_rejects_empty_and_duplicates():
    with pytest.raises(ValueError):
        build_alphabets([], [])
    with pytest.raises(ValueError):
        Alphabet(("a", "a"))


def test_named_alphabet_raises_on_unknown():
    with pytest.raises(KeyError):
        Alphabet(("a",), name="labels").index("b")
