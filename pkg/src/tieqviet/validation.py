"""Input checks shared by the estimators."""
from __future__ import annotations

import numpy as np

from .text import normalize


def check_sentences(X, name="X") -> list[str]:
    """Coerce a 1-d collection of strings to a list of normalized sentences.

    A bare string is rejected, since iterating it would silently yield characters.
    """
    if isinstance(X, (str, bytes)):
        raise TypeError(f"{name} must be a sequence of sentences, not a single string")
    if isinstance(X, np.ndarray) and X.ndim != 1:
        raise ValueError(f"{name} must be 1-dimensional, got shape {X.shape}")
    try:
        items = list(X)
    except TypeError:
        raise TypeError(f"{name} must be an iterable of strings, got {type(X).__name__}") from None
    out = []
    for i, s in enumerate(items):
        if not isinstance(s, (str, bytes)):
            raise TypeError(f"{name}[{i}] is {type(s).__name__}, expected str")
        out.append(normalize(s))
    return out


def check_consistent_length(*arrays):
    lengths = {len(a) for a in arrays if a is not None}
    if len(lengths) > 1:
        raise ValueError(f"inconsistent numbers of samples: {sorted(lengths)}")
