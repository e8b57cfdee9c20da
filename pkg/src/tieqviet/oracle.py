"""Exact inversion of Tieq Viet text: inverse expansion, spelling filters, lexicon.

Each Tieq Viet character is expanded into the standard spellings that could
have produced it. Candidates that break Vietnamese spelling conventions are
pruned (``gh``/``ngh`` only before front vowels, ``q`` only before ``u`` and
so on), then, optionally, whole words are kept only if they occur in a
lexicon. The product of the surviving word candidates is the set of
standard sentences that convert back to the input.

The spelling filters are standard Vietnamese orthography, not part of the
rewrite proposal itself. They only prune spellings that cannot arise from a
native word, so loanwords such as ``gen`` may be lost.
"""
from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Sequence

from .rules import RuleTable, apply_labels, default_rule_table, to_tieq, word_spans

DEFAULT_LIMIT = 10_000
# Letters absent from standard Vietnamese; they get no identity preimage.
NON_NATIVE = frozenset("fjwz")

_I = "iíìỉĩị"
_E = "eéèẻẽẹ"
_EH = "êếềểễệ"
_Y = "yýỳỷỹỵ"
_U = "uúùủũụ"
FRONT_VOWELS = frozenset(_I + _E + _EH)
K_FRONT = FRONT_VOWELS | frozenset(_Y)
U_VOWELS = frozenset(_U)


class InverseMap:
    """Tieq Viet symbol -> sorted tuple of lowercase standard expansions."""

    def __init__(self, entries: dict[str, Iterable[str]]):
        self.entries = {k: tuple(sorted(v)) for k, v in entries.items()}

    def expansions(self, symbol: str) -> tuple[str, ...]:
        return self.entries.get(symbol, (symbol,))

    @property
    def ambiguous_symbols(self) -> set[str]:
        return {k for k, v in self.entries.items() if len(v) > 1}

    def __getitem__(self, symbol):
        return self.expansions(symbol)

    def __eq__(self, other):
        return isinstance(other, InverseMap) and self.entries == other.entries

    def __repr__(self):
        return f"InverseMap({self.entries!r})"


def default_inverse_map(table: RuleTable | None = None) -> InverseMap:
    """Preimage relation of ``table`` plus identities for native letters."""
    table = table if table is not None else default_rule_table()
    entries: dict[str, set[str]] = {}
    for rule in table:
        entries.setdefault(rule.replacement, set()).add(rule.pattern)
    for symbol in list(entries):
        if table.lookup(symbol) is None and len(symbol) == 1 and symbol not in NON_NATIVE:
            entries[symbol].add(symbol)
    return InverseMap(entries)


@dataclass(frozen=True)
class PhonotacticFilter:
    """A spelling constraint: ``allows(candidate, following)`` must hold.

    ``following`` is the next Tieq Viet character of the word, lowercased, or
    ``None`` at the end of the word.
    """

    rule_id: str
    allows: Callable[[str, str | None], bool]

    def __call__(self, candidate, following):
        return self.allows(candidate, following)


def _front_gh(cand, nxt):
    return cand not in ("gh", "ngh") or nxt in FRONT_VOWELS


def _back_g(cand, nxt):
    if cand == "ng":
        return nxt not in FRONT_VOWELS
    if cand == "g":
        # the gi onset absorbs a toned i ("gì", "gìn"), so only a bare i is excluded
        return nxt is None or not (nxt in _E or nxt in _EH or nxt == "i")
    return True


def _q_before_u(cand, nxt):
    return cand != "q" or nxt in U_VOWELS


def _k_before_front(cand, nxt):
    return cand != "k" or nxt in K_FRONT


def _final_ch(cand, nxt):
    return cand != "tr" or nxt is not None


DEFAULT_FILTERS: tuple[PhonotacticFilter, ...] = (
    PhonotacticFilter("gh-front", _front_gh),
    PhonotacticFilter("g-back", _back_g),
    PhonotacticFilter("q-u", _q_before_u),
    PhonotacticFilter("k-front", _k_before_front),
    PhonotacticFilter("final-ch", _final_ch),
)


class Lexicon:
    """Lowercase word -> frequency (>= 1)."""

    def __init__(self, counts: dict[str, int] | None = None):
        self.counts: dict[str, int] = {}
        for word, n in (counts or {}).items():
            n = int(n)
            if n < 1:
                raise ValueError(f"lexicon frequency for {word!r} must be >= 1, got {n}")
            w = word.lower()
            self.counts[w] = self.counts.get(w, 0) + n

    @classmethod
    def from_words(cls, words: Iterable[str]) -> "Lexicon":
        return cls(Counter(w.lower() for w in words))

    @classmethod
    def from_corpus(cls, sentences: Iterable[str]) -> "Lexicon":
        return cls.from_words(s[a:b] for s in sentences for a, b in word_spans(s))

    @classmethod
    def from_file(cls, path) -> "Lexicon":
        from .text import normalize

        counts: dict[str, int] = {}
        with open(path, "rb") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = normalize(raw)
                if not line:
                    continue
                word, _, n = line.partition("\t")
                try:
                    counts[word] = counts.get(word, 0) + (int(n) if n else 1)
                except ValueError:
                    raise ValueError(f"{path}:{lineno}: bad count {n!r}") from None
        return cls(counts)

    def to_file(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            for w in sorted(self.counts):
                fh.write(f"{w}\t{self.counts[w]}\n")

    def freq(self, word: str) -> int:
        return self.counts.get(word.lower(), 0)

    def __contains__(self, word):
        return word.lower() in self.counts

    def __len__(self):
        return len(self.counts)

    def __iter__(self) -> Iterator[str]:
        return iter(self.counts)


@dataclass(frozen=True)
class LatticeWord:
    start: int
    end: int
    # label tuples, one label per Tieq Viet character of the word
    paths: tuple[tuple[str, ...], ...]
    candidates: tuple[str, ...]
    in_lexicon: bool = True


@dataclass(frozen=True)
class Lattice:
    """Per-character candidate labels of a Tieq Viet sentence plus word paths."""

    tieq: str
    positions: tuple[tuple[str, ...], ...]
    words: tuple[LatticeWord, ...] = field(default=())

    def ambiguous_positions(self) -> list[int]:
        return [i for i, c in enumerate(self.positions) if len(c) > 1]

    def path_count(self) -> int:
        return math.prod(len(w.paths) for w in self.words)


def _position_candidates(word: str, inv: InverseMap, filters) -> list[tuple[str, ...]]:
    low = word.lower()
    out: list[tuple[str, ...]] = []
    i = 0
    while i < len(low):
        if low[i] == "n" and low[i + 1:i + 2] == "'":
            symbol, width = "n'", 2
        else:
            symbol, width = low[i], 1
        following = low[i + width] if i + width < len(low) else None
        cands = tuple(c for c in inv.expansions(symbol) if all(f(c, following) for f in filters))
        out.append(cands)
        out.extend([("",)] * (width - 1))
        i += width
    return out


def _sound_paths(token, cands, inv, table):
    """Filtered paths that convert back to ``token``.

    Adjacent expansions can fuse into a longer rule ("q" + "h" read back as
    "ch" + "h"), so every path is re-converted. When the filters leave no
    sound path the unfiltered sound paths are used; input that no standard
    text converts to keeps its filtered paths so decoding stays total.
    """
    low = token.lower()
    paths = list(itertools.product(*cands))
    sound = [p for p in paths if to_tieq("".join(p), table) == low]
    if sound:
        return sound
    raw = _position_candidates(token, inv, ())
    sound = [p for p in itertools.product(*raw) if to_tieq("".join(p), table) == low]
    return sound or paths


def build_lattice(
    s: str,
    inverse_map: InverseMap | None = None,
    filters: Sequence[PhonotacticFilter] = DEFAULT_FILTERS,
    lexicon: Lexicon | None = None,
    table: RuleTable | None = None,
) -> Lattice:
    """Expand every Tieq Viet character and prune by spelling and, optionally, lexicon.

    Word paths that do not forward-convert (under ``table``) to the input word
    are dropped.

    Capitalized words skip the lexicon. A word with no lexicon candidate keeps
    its spelling-legal candidates and is marked ``in_lexicon=False``.
    """
    inv = inverse_map if inverse_map is not None else _DEFAULT_MAP
    positions: list[tuple[str, ...]] = [(ch.lower(),) for ch in s]
    words = []
    for a, b in word_spans(s):
        token = s[a:b]
        cands = _position_candidates(token, inv, filters)
        positions[a:b] = cands
        paths = _sound_paths(token, cands, inv, table)
        in_lex = True
        if lexicon is not None and not token[0].isupper():
            kept = [p for p in paths if "".join(p) in lexicon]
            if kept:
                paths = kept
            else:
                in_lex = False
        words.append(LatticeWord(
            a, b, tuple(paths), tuple(apply_labels(token, p) for p in paths), in_lex))
    return Lattice(s, tuple(positions), tuple(words))


class Restorations(list):
    """Enumerated sentences; ``truncated`` is set when ``limit`` cut the list short."""

    def __init__(self, sentences=(), truncated=False, total=None):
        super().__init__(sentences)
        self.truncated = truncated
        self.total = len(self) if total is None else total


def enumerate_restorations(lattice: Lattice, limit: int | None = DEFAULT_LIMIT) -> Restorations:
    """All sentences through the lattice in candidate-index order, up to ``limit``."""
    if limit is not None and limit < 1:
        raise ValueError("limit must be >= 1")
    s = lattice.tieq
    gaps = []
    prev = 0
    for w in lattice.words:
        gaps.append(s[prev:w.start])
        prev = w.end
    tail = s[prev:]
    total = lattice.path_count()
    out = []
    for choice in itertools.product(*(w.candidates for w in lattice.words)):
        if limit is not None and len(out) >= limit:
            break
        out.append("".join(g + c for g, c in zip(gaps, choice)) + tail)
    return Restorations(out, truncated=limit is not None and total > limit, total=total)


def count_preimages(
    word: str,
    inverse_map: InverseMap | None = None,
    filters: Sequence[PhonotacticFilter] = DEFAULT_FILTERS,
    lexicon: Lexicon | None = None,
) -> int:
    """Number of standard spellings of one Tieq Viet word."""
    if len(word_spans(word)) > 1:
        raise ValueError(f"count_preimages expects a single word, got {word!r}")
    return build_lattice(word, inverse_map, filters, lexicon).path_count()


def unigram_labels(lattice: Lattice, lexicon: Lexicon) -> list[str]:
    """Per-character labels of the most frequent lexicon reading of each word.

    Ties go to the lexicographically smallest spelling; words with no lexicon
    reading take their first spelling-legal candidate.
    """
    labels = [p[0] for p in lattice.positions]
    for w in lattice.words:
        scored = [(lexicon.freq("".join(p)), "".join(p), p) for p in w.paths]
        known = [t for t in scored if t[0] > 0]
        if known:
            best = min(known, key=lambda t: (-t[0], t[1]))[2]
        else:
            best = w.paths[0]
        labels[w.start:w.end] = best
    return labels


def unigram_decode(lattice: Lattice, lexicon: Lexicon) -> str:
    return apply_labels(lattice.tieq, unigram_labels(lattice, lexicon))


_DEFAULT_MAP = default_inverse_map()
