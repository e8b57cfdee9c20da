"""Unicode handling and the character inventories shared by every stage."""
from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field
from typing import Iterable, Sequence

PAD = "<pad>"
UNK = "<unk>"
PAD_INDEX = 0
UNK_INDEX = 1

# StandardText and TieqText share one representation: composed-form str.
StandardText = str
TieqText = str


class TextDecodeError(ValueError):
    """Raised when raw input bytes are not valid UTF-8."""

    def __init__(self, offset: int, reason: str):
        super().__init__(f"invalid UTF-8 at byte offset {offset}: {reason}")
        self.offset = offset


def normalize(raw: bytes | str) -> str:
    """Decode, NFC-compose, canonicalize newlines and trim surrounding whitespace.

    >>> normalize("một") == "một"
    True
    >>> normalize(b"T\xc3\xb4i ra ch\xe1\xbb\xa3\\r\\n")
    'Tôi ra chợ'
    """
    if isinstance(raw, (bytes, bytearray)):
        try:
            raw = bytes(raw).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise TextDecodeError(exc.start, exc.reason) from exc
    text = raw.replace("\r\n", "\n").replace("\r", "\n")
    return unicodedata.normalize("NFC", text).strip()


def read_lines(path) -> list[str]:
    """Read a one-sentence-per-line UTF-8 corpus, normalizing every line."""
    with open(path, "rb") as fh:
        text = normalize(fh.read())
    return [line.strip() for line in text.split("\n")] if text else []


@dataclass(frozen=True)
class Alphabet:
    """An ordered, duplicate-free set of single characters.

    The ``union`` alphabet reserves index 0 for ``PAD`` and 1 for ``UNK``.
    """

    symbols: tuple[str, ...]
    name: str = "union"
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if len(set(self.symbols)) != len(self.symbols):
            raise ValueError("alphabet symbols must be unique")
        object.__setattr__(self, "_index", {s: i for i, s in enumerate(self.symbols)})

    @property
    def m(self) -> int:
        return len(self.symbols)

    def __len__(self):
        return len(self.symbols)

    def __contains__(self, symbol):
        return symbol in self._index

    def index(self, symbol: str) -> int:
        """Index of ``symbol``; unknown characters map to UNK in the union alphabet."""
        try:
            return self._index[symbol]
        except KeyError:
            if self.name == "union":
                return UNK_INDEX
            raise


def charset(texts: Iterable[str]) -> set[str]:
    chars: set[str] = set()
    for t in texts:
        chars.update(t)
    return chars


def build_alphabets(corpus: Sequence[str], tieq: Sequence[str]) -> Alphabet:
    """Union alphabet of both corpora plus PAD and UNK at fixed indices."""
    if not corpus or not tieq:
        raise ValueError("build_alphabets needs non-empty standard and Tieq Viet corpora")
    chars = charset(corpus) | charset(tieq)
    return Alphabet((PAD, UNK, *sorted(chars)), name="union")
