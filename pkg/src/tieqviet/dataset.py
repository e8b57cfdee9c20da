"""Supervised tagging data: aligned pairs, vocabularies, fixed-length encodings.

Restoration is cast as one label per Tieq Viet character: the lowercase
standard spelling it stands for (``c`` -> ``ch``/``tr``, the apostrophe of
``n'`` -> the empty label, identity elsewhere). Input and output sequences
therefore have equal length; casing is re-applied from the input at decode
time.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .rules import AlignedPair, RuleTable, convert_corpus
from .text import PAD_INDEX, Alphabet, build_alphabets

log = logging.getLogger(__name__)

SEQ_LEN = 50
REFERENCE_EMBEDDING_DIM = 227
EMPTY_LABEL = ""


class Vocab:
    """Input characters: PAD=0, UNK=1, then the union alphabet in code point order."""

    def __init__(self, alphabet: Alphabet):
        self.alphabet = alphabet

    @classmethod
    def from_symbols(cls, symbols: Sequence[str]) -> "Vocab":
        return cls(Alphabet(tuple(symbols)))

    @property
    def symbols(self) -> tuple[str, ...]:
        return self.alphabet.symbols

    @property
    def m(self) -> int:
        return self.alphabet.m

    def __len__(self):
        return self.m

    def index(self, ch: str) -> int:
        return self.alphabet.index(ch)

    def encode(self, text: str) -> list[int]:
        return [self.alphabet.index(ch) for ch in text]

    def __eq__(self, other):
        return isinstance(other, Vocab) and self.symbols == other.symbols


class LabelVocab:
    """Sorted lowercase output labels; the empty label is always present."""

    def __init__(self, labels: Iterable[str]):
        labels = sorted(set(labels) | {EMPTY_LABEL})
        self.labels = tuple(labels)
        self._index = {lab: i for i, lab in enumerate(labels)}

    def __len__(self):
        return len(self.labels)

    def __contains__(self, label):
        return label in self._index

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise KeyError(f"label {label!r} not in label vocabulary") from None

    def __getitem__(self, i: int) -> str:
        return self.labels[i]

    def __eq__(self, other):
        return isinstance(other, LabelVocab) and self.labels == other.labels


@dataclass(frozen=True)
class EncodedExample:
    inputs: np.ndarray  # (seq_len,) int
    targets: np.ndarray  # (seq_len,) int, PAD positions hold 0
    mask: np.ndarray  # (seq_len,) bool
    m: int
    truncated: bool = False
    index: int = -1

    @property
    def length(self) -> int:
        return int(self.mask.sum())

    def one_hot(self) -> np.ndarray:
        out = np.zeros((len(self.inputs), self.m))
        out[np.arange(len(self.inputs)), self.inputs] = 1.0
        return out


@dataclass(frozen=True)
class EncodedBatch:
    inputs: np.ndarray  # (batch, seq_len)
    targets: np.ndarray
    mask: np.ndarray
    indices: tuple[int, ...]

    def __len__(self):
        return len(self.indices)


@dataclass(frozen=True)
class Split:
    train: list[AlignedPair]
    validation: list[AlignedPair]
    seed: int
    train_indices: tuple[int, ...] = field(default=())
    validation_indices: tuple[int, ...] = field(default=())


def build_pairs(corpus: Sequence[str], table: RuleTable | None = None) -> list[AlignedPair]:
    return convert_corpus([line for line in corpus if line], table)


def build_vocabs(pairs: Sequence[AlignedPair], reference_m: int = REFERENCE_EMBEDDING_DIM):
    """Input and label vocabularies from aligned pairs."""
    if not pairs:
        raise ValueError("build_vocabs needs at least one pair")
    vocab = Vocab(build_alphabets([p.standard for p in pairs], [p.tieq for p in pairs]))
    labels = LabelVocab(lab for p in pairs for lab in p.lower_labels)
    if reference_m and vocab.m != reference_m:
        log.warning("union alphabet size m=%d differs from the reference %d", vocab.m, reference_m)
    return vocab, labels


class InsufficientData(ValueError):
    pass


def split(pairs: Sequence[AlignedPair], n_train: int = 500, n_val: int = 100, seed: int = 42) -> Split:
    """Seeded shuffle, then the first ``n_train`` for training and the next ``n_val``."""
    need = n_train + n_val
    if len(pairs) < need:
        raise InsufficientData(f"split needs {need} pairs ({n_train}+{n_val}), got {len(pairs)}")
    order = np.random.default_rng(seed).permutation(len(pairs))
    tr = tuple(int(i) for i in order[:n_train])
    va = tuple(int(i) for i in order[n_train:need])
    return Split([pairs[i] for i in tr], [pairs[i] for i in va], seed, tr, va)


def encode(pair: AlignedPair, vocab: Vocab, labels: LabelVocab | None,
           seq_len: int = SEQ_LEN, index: int = -1) -> EncodedExample:
    """Fixed-length encoding; ``labels=None`` encodes the input side only."""
    return _encode(pair.tieq, pair.lower_labels if labels is not None else None,
                   vocab, labels, seq_len, index)


def encode_text(tieq: str, vocab: Vocab, seq_len: int = SEQ_LEN) -> EncodedExample:
    return _encode(tieq, None, vocab, None, seq_len, -1)


def _encode(tieq, gold, vocab, labels, seq_len, index):
    n = min(len(tieq), seq_len)
    inputs = np.full(seq_len, PAD_INDEX, dtype=np.int64)
    inputs[:n] = vocab.encode(tieq[:n])
    targets = np.zeros(seq_len, dtype=np.int64)
    if gold is not None:
        targets[:n] = [labels.index(lab) for lab in gold[:n]]
    mask = np.zeros(seq_len, dtype=bool)
    mask[:n] = True
    return EncodedExample(inputs, targets, mask, vocab.m, len(tieq) > seq_len, index)


def encode_all(pairs, vocab, labels, seq_len=SEQ_LEN, indices=None) -> list[EncodedExample]:
    indices = indices if indices is not None else range(len(pairs))
    return [encode(p, vocab, labels, seq_len, i) for p, i in zip(pairs, indices)]


def batches(examples: Sequence[EncodedExample], batch_size: int, seed: int | None = None):
    """Batches in a seeded random order (input order when ``seed`` is None); the last may be short."""
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    order = (np.arange(len(examples)) if seed is None
             else np.random.default_rng(seed).permutation(len(examples)))
    out = []
    for start in range(0, len(examples), batch_size):
        chunk = [examples[int(i)] for i in order[start:start + batch_size]]
        out.append(EncodedBatch(
            np.stack([e.inputs for e in chunk]),
            np.stack([e.targets for e in chunk]),
            np.stack([e.mask for e in chunk]),
            tuple(e.index for e in chunk),
        ))
    return out


def gold_window(pair: AlignedPair, seq_len: int = SEQ_LEN) -> str:
    """The standard text covered by the first ``seq_len`` Tieq Viet characters."""
    return "".join(pair.labels[:seq_len])


# -- files -----------------------------------------------------------------

_ESCAPES = {"\\": "\\\\", " ": "\\s", "\t": "\\t", "\n": "\\n"}


def escape_label(label: str) -> str:
    if label == "":
        return "\\e"
    return "".join(_ESCAPES.get(ch, ch) for ch in label)


def unescape_label(token: str) -> str:
    if token == "\\e":
        return ""
    out, i = [], 0
    while i < len(token):
        if token[i] == "\\" and i + 1 < len(token):
            out.append({"\\": "\\", "s": " ", "t": "\t", "n": "\n"}[token[i + 1]])
            i += 2
        else:
            out.append(token[i])
            i += 1
    return "".join(out)


def pair_to_tsv(pair: AlignedPair) -> str:
    return f"{pair.standard}\t{pair.tieq}\t{' '.join(escape_label(x) for x in pair.labels)}"


def pair_from_tsv(line: str) -> AlignedPair:
    standard, tieq, labels = line.rstrip("\n").split("\t")
    labs = tuple(unescape_label(t) for t in labels.split(" ")) if labels else ()
    if len(labs) != len(tieq) or "".join(labs) != standard:
        raise ValueError(f"inconsistent pair line: {line[:60]!r}")
    alignment = []
    i = 0
    j = 0
    while j < len(tieq):
        width = 1
        while j + width < len(tieq) and labs[j + width] == "" and labs[j] != "":
            width += 1
        alignment.append(((i, i + len(labs[j])), (j, j + width)))
        i += len(labs[j])
        j += width
    return AlignedPair(standard, tieq, tuple(alignment), labs)


def write_pairs(pairs: Iterable[AlignedPair], path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for p in pairs:
            fh.write(pair_to_tsv(p) + "\n")


def read_pairs(path) -> list[AlignedPair]:
    with open(path, encoding="utf-8") as fh:
        return [pair_from_tsv(line) for line in fh if line.strip("\n")]


def write_manifest(s: Split, path):
    Path(path).write_text(
        f"seed={s.seed}\n"
        f"train={' '.join(map(str, s.train_indices))}\n"
        f"validation={' '.join(map(str, s.validation_indices))}\n",
        encoding="utf-8",
    )


def read_manifest(path) -> tuple[int, list[int], list[int]]:
    fields = dict(line.split("=", 1) for line in Path(path).read_text("utf-8").splitlines() if line)
    return (int(fields["seed"]), [int(i) for i in fields["train"].split()],
            [int(i) for i in fields["validation"].split()])


def split_from_manifest(pairs: Sequence[AlignedPair], path) -> Split:
    seed, tr, va = read_manifest(path)
    return Split([pairs[i] for i in tr], [pairs[i] for i in va], seed, tuple(tr), tuple(va))


def write_symbols(symbols: Iterable[str], path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for s in symbols:
            fh.write(escape_label(s) + "\n")


def read_symbols(path) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return [unescape_label(line.rstrip("\n")) for line in fh]
