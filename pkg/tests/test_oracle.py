import math
from collections import defaultdict

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tieqviet.oracle import (DEFAULT_FILTERS, InverseMap, Lexicon, build_lattice, count_preimages,
                             default_inverse_map, enumerate_restorations, unigram_decode,
                             unigram_labels)
from tieqviet.rules import DEFAULT_RULES, to_tieq


def brute_preimages(t: str) -> set[str]:
    """Every string that forward-converts to ``t``, found by trying each rule or identity piece."""
    out = set()

    def walk(j, pieces):
        if j == len(t):
            s = "".join(pieces)
            if to_tieq(s) == t:
                out.add(s)
            return
        options = {(t[j], 1)}
        for pat, rep in DEFAULT_RULES.items():
            if t.startswith(rep, j):
                options.add((pat, len(rep)))
        for piece, width in options:
            walk(j + width, pieces + [piece])

    walk(0, [])
    return out


def native(s: str) -> bool:
    return not set(s) & set("fwz'")


def words(lattice, limit=None):
    return set(enumerate_restorations(lattice, limit))


def test_inverse_map_entries():
    inv = default_inverse_map()
    assert inv.entries == {
        "q": ("ng", "ngh"), "c": ("ch", "tr"), "g": ("g", "gh"), "f": ("ph",),
        "x": ("kh", "x"), "w": ("th",), "z": ("d", "gi", "r"), "n'": ("nh",),
        "d": ("đ",), "k": ("c", "k", "q"),
    }
    assert inv.expansions("a") == ("a",)
    assert inv["z"] == ("d", "gi", "r")
    assert inv.ambiguous_symbols == {"q", "c", "g", "x", "z", "k"}


def test_inverse_map_is_preimage_relation():
    inv = default_inverse_map()
    for pat, rep in DEFAULT_RULES.items():
        assert pat in inv.expansions(rep)
    for sym, exps in inv.entries.items():
        for e in exps:
            assert DEFAULT_RULES.get(e, e) == sym


@pytest.mark.parametrize("tieq, expected", [
    ("kôq", {"công"}),
    ("za", {"da", "gia", "ra"}),
    ("wể", {"thể"}),
    ("can'", {"chanh", "tranh"}),
    ("một", {"một"}),
    ("qe", {"nghe"}),
    ("qa", {"nga"}),
    ("ge", {"ghe"}),
    ("gà", {"gà"}),
    ("kuá", {"cuá", "quá"}),
    ("kí", {"cí", "kí"}),
    ("kác", {"cách"}),
])
def test_lattice_examples(tieq, expected):
    assert words(build_lattice(tieq)) == expected


def test_toned_i_after_g_is_allowed():
    # "gì" converts to itself, so the g reading has to survive before a toned i
    assert "gì" in words(build_lattice("gì"))
    assert words(build_lattice("gi")) == {"ghi"}


def test_sentence_lattice_order():
    got = enumerate_restorations(build_lattice("Cân câu"))
    assert list(got) == ["Chân châu", "Chân trâu", "Trân châu", "Trân trâu"]
    assert not got.truncated and got.total == 4


def test_lexicon_mode(lexicon):
    lex = Lexicon.from_words(["chanh", "tranh", "xác", "khác", "giành", "dành"])
    assert words(build_lattice("can'", lexicon=lex)) == {"chanh", "tranh"}
    lat = build_lattice("mua xák", lexicon=lex)
    assert [w.in_lexicon for w in lat.words] == [False, True]
    assert words(lat) == {"mua khác", "mua xác"}
    # capitalized words are not pruned by the lexicon
    assert words(build_lattice("Can'", lexicon=Lexicon.from_words(["chanh"]))) == {"Chanh", "Tranh"}


@pytest.mark.parametrize("word, lex", [
    ("can'", ["chanh", "tranh"]), ("xôq", ["không", "xông"]), ("zàn'", ["giành", "dành"]),
])
def test_count_preimages_fixtures(word, lex):
    assert count_preimages(word, lexicon=Lexicon.from_words(lex)) == 2


def test_count_preimages_single_word_only():
    with pytest.raises(ValueError):
        count_preimages("za za")


def test_enumeration_limit():
    s = " ".join(["za"] * 10)
    got = enumerate_restorations(build_lattice(s), limit=10)
    assert len(got) == 10 and got.truncated and got.total == 3 ** 10
    assert got[0] == " ".join(["da"] * 10)
    with pytest.raises(ValueError):
        enumerate_restorations(build_lattice(s), limit=0)
    assert len(enumerate_restorations(build_lattice("za"), limit=None)) == 3


def test_unigram_baseline():
    lex = Lexicon({"ra": 100, "da": 50, "gia": 10})
    assert unigram_decode(build_lattice("za"), lex) == "ra"
    tie = Lexicon({"ra": 5, "da": 5})
    assert unigram_decode(build_lattice("za"), tie) == "da"
    assert unigram_decode(build_lattice("Za"), lex) == "Ra"
    # unknown words take their first candidate
    assert unigram_labels(build_lattice("can'"), lex) == ["ch", "a", "nh", ""]


def test_unit_filters():
    f = {x.rule_id: x for x in DEFAULT_FILTERS}
    assert f["gh-front"]("gh", "e") and not f["gh-front"]("gh", "a")
    assert f["g-back"]("ng", "a") and not f["g-back"]("ng", "ê")
    assert not f["g-back"]("g", "i") and f["g-back"]("g", "ì") and not f["g-back"]("g", "é")
    assert f["q-u"]("q", "ú") and not f["q-u"]("q", "a")
    assert f["k-front"]("k", "y") and not f["k-front"]("k", "a")
    assert f["final-ch"]("ch", None) and not f["final-ch"]("tr", None)


def test_lexicon_file_roundtrip(tmp_path):
    lex = Lexicon({"Nhà": 3, "nhà": 2, "cửa": 1})
    assert lex.freq("NHÀ") == 5 and "CỬA" in lex and len(lex) == 2
    p = tmp_path / "lex.tsv"
    lex.to_file(p)
    again = Lexicon.from_file(p)
    assert again.counts == lex.counts
    p.write_text("a\tx\n", encoding="utf-8")
    with pytest.raises(ValueError):
        Lexicon.from_file(p)
    with pytest.raises(ValueError):
        Lexicon({"a": 0})


def test_lexicon_collision_classes_are_exact(lexicon):
    """Lexicon-mode candidates equal the lexicon words sharing the conversion."""
    groups = defaultdict(set)
    for w in lexicon:
        groups[to_tieq(w)].add(w)
    for t, members in groups.items():
        assert words(build_lattice(t, lexicon=lexicon)) == members, t


std_word = st.text(alphabet=st.sampled_from(list("aăâbcdđeêghiklmnoôơpqrstuưvxyáàạếệốộ")),
                   min_size=1, max_size=6)


@settings(max_examples=300)
@given(std_word)
def test_unfiltered_lattice_matches_brute_force(s):
    t = to_tieq(s)
    expected = {x for x in brute_preimages(t) if native(x)}
    got = words(build_lattice(t, filters=()))
    if expected:
        assert got == expected
    assert s in brute_preimages(t)


@settings(max_examples=300)
@given(st.lists(std_word, min_size=1, max_size=4))
def test_soundness(ws):
    t = to_tieq(" ".join(ws))
    for cand in enumerate_restorations(build_lattice(t), limit=200):
        assert to_tieq(cand) == t


@given(st.lists(std_word, min_size=1, max_size=3), st.lists(std_word, max_size=5))
def test_lexicon_only_removes(ws, lex_words):
    t = to_tieq(" ".join(ws))
    lex = Lexicon.from_words(lex_words + ws[:1])
    assert words(build_lattice(t, lexicon=lex)) <= words(build_lattice(t))


@given(std_word)
def test_count_bounded_by_branching(s):
    t = to_tieq(s)
    unfiltered = build_lattice(t, filters=())
    assert count_preimages(t) <= math.prod(len(c) for c in unfiltered.positions)


def test_custom_inverse_map():
    inv = InverseMap({"z": ["d"]})
    assert words(build_lattice("za", inv)) == {"da"}
