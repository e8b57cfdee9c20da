"""Restoration metrics, error taxonomy and training-curve export."""
from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

from .oracle import DEFAULT_FILTERS, InverseMap, Lexicon, build_lattice
from .rules import apply_labels, word_spans

CATEGORIES = ("name", "abbreviation", "rare word", "other")
RARE_THRESHOLD = 3


def char_accuracy(pred: Sequence, gold: Sequence, mask: Sequence[bool] | None = None) -> float:
    """Fraction of unmasked positions where ``pred`` equals ``gold``."""
    if len(pred) != len(gold):
        raise ValueError(f"length mismatch: {len(pred)} predicted vs {len(gold)} gold")
    mask = [True] * len(gold) if mask is None else list(mask)
    if len(mask) != len(gold):
        raise ValueError("mask length differs from the sequences")
    n = sum(1 for m in mask if m)
    if n == 0:
        raise ValueError("char_accuracy: no unmasked positions")
    return sum(1 for p, g, m in zip(pred, gold, mask) if m and p == g) / n


def ambiguous_positions(tieq: str, inverse_map: InverseMap | None = None,
                        filters=DEFAULT_FILTERS) -> list[int]:
    """Positions whose symbol keeps two or more spelling-legal expansions."""
    return build_lattice(tieq, inverse_map, filters).ambiguous_positions()


def ambiguous_position_accuracy(pred: Sequence[str], gold: Sequence[str], tieq: str,
                                inverse_map: InverseMap | None = None) -> float | None:
    """Accuracy over ambiguous positions only; ``None`` when there are none."""
    pos = [i for i in ambiguous_positions(tieq, inverse_map) if i < len(gold)]
    if not pos:
        return None
    return sum(pred[i] == gold[i] for i in pos) / len(pos)


class ErrorCandidate(NamedTuple):
    tieq: str
    pred: str
    gold: str
    sentence_initial: bool = False


@dataclass(frozen=True)
class ErrorRecord:
    tieq: str
    pred: str
    gold: str
    category: str

    def __post_init__(self):
        if self.pred == self.gold:
            raise ValueError(f"not an error: predicted {self.pred!r} equals gold")
        if self.category not in CATEGORIES:
            raise ValueError(f"unknown category {self.category!r}")


def categorize_error(gold: str, lexicon: Lexicon, sentence_initial=False,
                     rare_threshold=RARE_THRESHOLD) -> str:
    letters = [c for c in gold if c.isalpha()]
    if letters and all(c.isupper() for c in letters) and (len(letters) > 1 or not sentence_initial):
        return "abbreviation"
    if letters and letters[0].isupper():
        if not sentence_initial or gold.lower() not in lexicon:
            return "name"
    if lexicon.freq(gold) < rare_threshold:
        return "rare word"
    return "other"


def categorize_errors(errors: Sequence, lexicon: Lexicon,
                      rare_threshold: int = RARE_THRESHOLD) -> list[ErrorRecord]:
    """Assign every (tieq, pred, gold[, sentence_initial]) error exactly one category.

    All-uppercase gold words are abbreviations; other capitalized words are
    names unless they open the sentence and are known lowercase words;
    gold words seen fewer than ``rare_threshold`` times are rare words.
    """
    out = []
    for e in errors:
        e = ErrorCandidate(*e)
        cat = categorize_error(e.gold, lexicon, e.sentence_initial, rare_threshold)
        out.append(ErrorRecord(e.tieq, e.pred, e.gold, cat))
    return out


def word_errors(tieq: str, pred: Sequence[str], gold: Sequence[str]) -> list[ErrorCandidate]:
    out = []
    for k, (a, b) in enumerate(word_spans(tieq[:len(gold)])):
        if list(pred[a:b]) != list(gold[a:b]):
            word = tieq[a:b]
            out.append(ErrorCandidate(word, apply_labels(word, pred[a:b]),
                                      apply_labels(word, gold[a:b]), k == 0))
    return out


@dataclass
class MetricsReport:
    char_accuracy: float
    word_accuracy: float
    sentence_accuracy: float
    ambiguous_accuracy: float | None
    n_chars: int
    n_words: int
    n_sentences: int
    n_ambiguous: int
    error_counts: dict = field(default_factory=dict)
    label: str = ""

    def ordering_holds(self) -> bool:
        return self.sentence_accuracy <= self.word_accuracy <= self.char_accuracy

    def to_kv(self) -> str:
        amb = "NA" if self.ambiguous_accuracy is None else f"{self.ambiguous_accuracy:.6f}"
        lines = [
            f"char_accuracy={self.char_accuracy:.6f}",
            f"word_accuracy={self.word_accuracy:.6f}",
            f"sentence_accuracy={self.sentence_accuracy:.6f}",
            f"ambiguous_accuracy={amb}",
            f"n_chars={self.n_chars}",
            f"n_words={self.n_words}",
            f"n_sentences={self.n_sentences}",
            f"n_ambiguous={self.n_ambiguous}",
        ]
        lines += [f"errors.{c.replace(' ', '_')}={self.error_counts.get(c, 0)}" for c in CATEGORIES]
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        amb = "n/a" if self.ambiguous_accuracy is None else f"{100 * self.ambiguous_accuracy:.2f}%"
        head = f"Evaluation {self.label}".rstrip()
        return "\n".join([
            head,
            f"  characters  {100 * self.char_accuracy:6.2f}%  ({self.n_chars})",
            f"  words       {100 * self.word_accuracy:6.2f}%  ({self.n_words})",
            f"  sentences   {100 * self.sentence_accuracy:6.2f}%  ({self.n_sentences})",
            f"  ambiguous   {amb:>7}  ({self.n_ambiguous} positions)",
            "  errors      " + ", ".join(f"{c}: {self.error_counts.get(c, 0)}" for c in CATEGORIES),
        ]) + "\n"


def evaluate_labels(tieqs: Sequence[str], preds: Sequence[Sequence[str]],
                    golds: Sequence[Sequence[str]], lexicon: Lexicon | None = None,
                    inverse_map: InverseMap | None = None, label: str = ""):
    """Metrics over aligned label sequences; returns ``(MetricsReport, [ErrorRecord])``.

    Each ``tieq`` may be longer than its labels (truncated windows); only the
    first ``len(gold)`` characters are scored.
    """
    if not (len(tieqs) == len(preds) == len(golds)) or not tieqs:
        raise ValueError("need equally many (non-zero) input, predicted and gold sequences")
    chars = char_ok = words = word_ok = sent_ok = amb = amb_ok = 0
    errors = []
    for tieq, pred, gold in zip(tieqs, preds, golds):
        if len(pred) != len(gold):
            raise ValueError(f"length mismatch for {tieq[:30]!r}")
        window = tieq[:len(gold)]
        chars += len(gold)
        char_ok += sum(p == g for p, g in zip(pred, gold))
        spans = word_spans(window)
        words += len(spans)
        word_ok += sum(list(pred[a:b]) == list(gold[a:b]) for a, b in spans)
        sent_ok += list(pred) == list(gold)
        pos = ambiguous_positions(window, inverse_map)
        amb += len(pos)
        amb_ok += sum(pred[i] == gold[i] for i in pos)
        errors.extend(word_errors(window, pred, gold))
    records = categorize_errors(errors, lexicon if lexicon is not None else Lexicon())
    report = MetricsReport(
        char_ok / chars if chars else 0.0,
        word_ok / words if words else 0.0,
        sent_ok / len(golds),
        amb_ok / amb if amb else None,
        chars, words, len(golds), amb,
        dict(Counter(r.category for r in records)),
        label,
    )
    return report, records


def write_errors_tsv(records: Sequence[ErrorRecord], path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(["type", "W_tieqviet", "W_pred", "W_standard"])
        for r in records:
            w.writerow([r.category, r.tieq, r.pred, r.gold])


HISTORY_HEADER = ["epoch", "train_loss", "train_acc", "val_loss", "val_acc"]


def export_history_csv(history, path):
    """One row per epoch: epoch,train_loss,train_acc,val_loss,val_acc."""
    records = getattr(history, "records", history)
    if not records:
        raise ValueError("cannot export an empty training history")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HISTORY_HEADER)
        for r in records:
            w.writerow([r.epoch] + [repr(float(getattr(r, k))) for k in HISTORY_HEADER[1:]])


def read_history_csv(path) -> list[dict]:
    with open(path, encoding="utf-8", newline="") as fh:
        return [{k: (int(v) if k == "epoch" else float(v)) for k, v in row.items()}
                for row in csv.DictReader(fh)]
