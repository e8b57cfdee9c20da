"""Tieq Viet: forward conversion, candidate enumeration and learned restoration."""

from .estimators import BiLSTMRestorer, TieqVietConverter, UnigramRestorer
from .oracle import Lexicon, build_lattice, count_preimages, enumerate_restorations
from .rules import AlignedPair, apply_labels, convert, to_tieq

__version__ = "0.1.0"

__all__ = [
    "AlignedPair",
    "BiLSTMRestorer",
    "Lexicon",
    "TieqVietConverter",
    "UnigramRestorer",
    "apply_labels",
    "build_lattice",
    "convert",
    "count_preimages",
    "enumerate_restorations",
    "to_tieq",
]
