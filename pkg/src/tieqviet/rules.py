"""Standard Vietnamese to Tieq Viet rewriting with character alignment.

Conversion is a single left-to-right pass. At each position the longest
case-insensitive rule pattern wins, the replacement is emitted with the
source casing transferred onto it, and the output is never rescanned, so
``chợ`` becomes ``cợ`` rather than ``kợ``.

The rule list says nothing about casing or word-final matches; the
behaviour below follows the reference example sentences:

* an uppercase first letter carries over to the replacement (``Chân`` ->
  ``Cân``); a fully uppercase multi-letter match uppercases the whole
  replacement (``NH`` -> ``N'``);
* rules apply anywhere in a word, including word-final (``việc`` -> ``việk``);
* ``qu`` is not a unit, ``q`` is rewritten alone (``quá`` -> ``kuá``).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

DEFAULT_RULES = {
    "ngh": "q",
    "ch": "c",
    "tr": "c",
    "gh": "g",
    "ph": "f",
    "ng": "q",
    "kh": "x",
    "th": "w",
    "gi": "z",
    "nh": "n'",
    "đ": "d",
    "c": "k",
    "q": "k",
    "d": "z",
    "r": "z",
}


@dataclass(frozen=True)
class RewriteRule:
    pattern: str
    replacement: str

    def __post_init__(self):
        if not self.pattern or self.pattern != self.pattern.lower():
            raise ValueError(f"rule pattern must be non-empty lowercase, got {self.pattern!r}")
        if len(self.pattern) > 3:
            raise ValueError(f"rule pattern longer than 3 characters: {self.pattern!r}")
        if not 1 <= len(self.replacement) <= 2 or self.replacement != self.replacement.lower():
            raise ValueError(f"bad replacement {self.replacement!r} for {self.pattern!r}")


class RuleTable:
    """Immutable rule list ordered longest pattern first, ties lexicographic."""

    def __init__(self, rules: Iterable[RewriteRule]):
        rules = sorted(rules, key=lambda r: (-len(r.pattern), r.pattern))
        patterns = [r.pattern for r in rules]
        if len(set(patterns)) != len(patterns):
            raise ValueError("duplicate rule patterns")
        self._rules = tuple(rules)
        self._by_pattern = {r.pattern: r.replacement for r in rules}
        self._lengths = sorted({len(p) for p in patterns}, reverse=True)

    @classmethod
    def from_mapping(cls, mapping: dict[str, str]) -> "RuleTable":
        return cls(RewriteRule(p, r) for p, r in mapping.items())

    @property
    def rules(self) -> tuple[RewriteRule, ...]:
        return self._rules

    def lookup(self, pattern: str) -> str | None:
        return self._by_pattern.get(pattern)

    def match(self, text: str, pos: int) -> tuple[str, str] | None:
        """Longest rule matching ``text`` at ``pos`` as (matched source, replacement)."""
        for n in self._lengths:
            src = text[pos:pos + n]
            if len(src) == n:
                repl = self._by_pattern.get(src.lower())
                if repl is not None:
                    return src, repl
        return None

    def __iter__(self):
        return iter(self._rules)

    def __len__(self):
        return len(self._rules)

    def __repr__(self):
        return f"RuleTable({', '.join(f'{r.pattern}->{r.replacement}' for r in self._rules)})"


def default_rule_table() -> RuleTable:
    """The fifteen consonant replacements of the Tieq Viet proposal."""
    table = RuleTable.from_mapping(DEFAULT_RULES)
    assert {(r.pattern, r.replacement) for r in table} == set(DEFAULT_RULES.items())
    return table


def transfer_case(source: str, replacement: str) -> str:
    letters = [c for c in source if c.isalpha()]
    if not letters or not letters[0].isupper():
        return replacement
    if all(c.isupper() for c in letters) and sum(c.isalpha() for c in replacement) > 1:
        return replacement.upper()
    return replacement[0].upper() + replacement[1:]


@dataclass(frozen=True)
class AlignedPair:
    """A standard sentence, its Tieq Viet rendering and their character alignment.

    ``alignment`` holds ``((src_start, src_end), (tgt_start, tgt_end))`` spans.
    ``labels`` has one entry per Tieq Viet character: the source text it
    stands for, with the original casing. The first character of a
    multi-character replacement carries the whole source span and the rest
    carry ``""`` (the apostrophe of ``n'``).
    """

    standard: str
    tieq: str
    alignment: tuple[tuple[tuple[int, int], tuple[int, int]], ...]
    labels: tuple[str, ...]

    @property
    def lower_labels(self) -> tuple[str, ...]:
        return tuple(label.lower() for label in self.labels)

    def restore(self) -> str:
        return "".join(self.labels)


def convert(s: str, table: RuleTable | None = None) -> AlignedPair:
    """Rewrite a normalized standard sentence into Tieq Viet.

    >>> convert("Tôi ra chợ mua chanh").tieq
    "Tôi za cợ mua can'"
    """
    table = table if table is not None else _DEFAULT
    out: list[str] = []
    alignment = []
    labels: list[str] = []
    i = j = 0
    while i < len(s):
        hit = table.match(s, i)
        if hit is None:
            src = repl = s[i]
        else:
            src, repl = hit
            repl = transfer_case(src, repl)
        out.append(repl)
        alignment.append(((i, i + len(src)), (j, j + len(repl))))
        labels.append(src)
        labels.extend([""] * (len(repl) - 1))
        i += len(src)
        j += len(repl)
    return AlignedPair(s, "".join(out), tuple(alignment), tuple(labels))


def word_spans(text: str) -> list[tuple[int, int]]:
    """(start, end) spans of letter runs; an apostrophe right after ``n`` stays in the word."""
    spans = []
    start = None
    for i, ch in enumerate(text):
        inside = ch.isalpha() or (ch == "'" and start is not None and text[i - 1] in "nN")
        if inside and start is None:
            start = i
        elif not inside and start is not None:
            spans.append((start, i))
            start = None
    if start is not None:
        spans.append((start, len(text)))
    return spans


def apply_labels(tieq: str, labels: Sequence[str]) -> str:
    """Concatenate lowercase expansion labels, re-applying the casing of ``tieq``.

    A label equal to the lowercased input character reproduces the input
    verbatim. Otherwise an uppercase input character capitalizes the
    expansion, or uppercases all of it when its whole word is uppercase.
    """
    if len(labels) != len(tieq):
        raise ValueError(f"{len(labels)} labels for {len(tieq)} characters")
    all_upper = [False] * len(tieq)
    for a, b in word_spans(tieq):
        letters = [c for c in tieq[a:b] if c.isalpha()]
        flag = all(c.isupper() for c in letters)
        for k in range(a, b):
            all_upper[k] = flag
    out = []
    for k, (ch, label) in enumerate(zip(tieq, labels)):
        if label == ch.lower():
            out.append(ch)
        elif label and ch.isupper():
            out.append(label.upper() if all_upper[k] else label[0].upper() + label[1:])
        else:
            out.append(label)
    return "".join(out)


def convert_corpus(lines: Sequence[str], table: RuleTable | None = None) -> list[AlignedPair]:
    return [convert(line, table) for line in lines]


def to_tieq(s: str, table: RuleTable | None = None) -> str:
    return convert(s, table).tieq


_DEFAULT = default_rule_table()
