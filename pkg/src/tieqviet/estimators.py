"""scikit-learn compatible wrappers around conversion and restoration.

``X`` is always a 1-d collection of sentences. Restorers take Tieq Viet
sentences as ``X`` and the standard originals as ``y``.
"""
from __future__ import annotations

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import restorer as R
from .dataset import Split, build_vocabs, encode_text
from .evaluation import evaluate_labels
from .oracle import DEFAULT_LIMIT, Lexicon, build_lattice, enumerate_restorations, unigram_labels
from .rules import DEFAULT_RULES, RuleTable, apply_labels, convert
from .validation import check_consistent_length, check_sentences


def _aligned(X, y, table=None):
    """Aligned pairs for (tieq, standard) data, checking that X is the conversion of y."""
    X = check_sentences(X)
    y = check_sentences(y, "y")
    check_consistent_length(X, y)
    pairs = [convert(s, table) for s in y]
    for i, (x, p) in enumerate(zip(X, pairs)):
        if x != p.tieq:
            raise ValueError(f"X[{i}] is not the Tieq Viet form of y[{i}]: {x!r} vs {p.tieq!r}")
    return pairs


class TieqVietConverter(TransformerMixin, BaseEstimator):
    """Stateless standard -> Tieq Viet transformer.

    Parameters
    ----------
    rules : dict, optional
        Pattern -> replacement mapping; defaults to the fifteen standard rules.
    """

    def __init__(self, rules=None):
        self.rules = rules

    def fit(self, X, y=None):
        check_sentences(X)
        self.table_ = RuleTable.from_mapping(self.rules if self.rules is not None else DEFAULT_RULES)
        return self

    def transform(self, X):
        check_is_fitted(self, "table_")
        return [convert(s, self.table_).tieq for s in check_sentences(X)]

    def transform_pairs(self, X):
        check_is_fitted(self, "table_")
        return [convert(s, self.table_) for s in check_sentences(X)]


class UnigramRestorer(BaseEstimator):
    """Lexicon lattice decoder picking the most frequent reading of each word.

    Parameters
    ----------
    lexicon : Lexicon or path, optional
        Frequency lexicon. When omitted, ``fit`` counts the words of ``y``.
    limit : int
        Cap for :meth:`enumerate`.
    """

    def __init__(self, lexicon=None, limit=DEFAULT_LIMIT):
        self.lexicon = lexicon
        self.limit = limit

    def fit(self, X, y=None):
        if self.lexicon is None:
            if y is None:
                raise ValueError("UnigramRestorer.fit needs y when no lexicon is given")
            check_consistent_length(check_sentences(X), y)
            self.lexicon_ = Lexicon.from_corpus(check_sentences(y, "y"))
        elif isinstance(self.lexicon, Lexicon):
            self.lexicon_ = self.lexicon
        else:
            self.lexicon_ = Lexicon.from_file(self.lexicon)
        return self

    def predict_labels(self, X):
        check_is_fitted(self, "lexicon_")
        return [unigram_labels(build_lattice(s), self.lexicon_) for s in check_sentences(X)]

    def predict(self, X):
        X = check_sentences(X)
        return [apply_labels(s, labs) for s, labs in zip(X, self.predict_labels(X))]

    def enumerate(self, X):
        """All lexicon-consistent restorations of each sentence."""
        check_is_fitted(self, "lexicon_")
        return [enumerate_restorations(build_lattice(s, lexicon=self.lexicon_), self.limit)
                for s in check_sentences(X)]

    def score(self, X, y):
        pairs = _aligned(X, y)
        golds = [p.lower_labels for p in pairs]
        report, _ = evaluate_labels([p.tieq for p in pairs], self.predict_labels(X), golds)
        return report.char_accuracy


class BiLSTMRestorer(BaseEstimator):
    """Character-level stacked bidirectional LSTM tagger.

    Hyperparameters mirror :class:`tieqviet.restorer.ModelConfig`; the defaults
    are the full-scale settings (hidden 512, 300 epochs).
    """

    def __init__(self, input_mode="onehot", embedding_dim=227, hidden_dim=512, layers=2,
                 bidirectional=True, seq_len=50, batch_size=32, lr=0.001, epochs=300,
                 seed=0, clip_norm=5.0):
        self.input_mode = input_mode
        self.embedding_dim = embedding_dim
        self.hidden_dim = hidden_dim
        self.layers = layers
        self.bidirectional = bidirectional
        self.seq_len = seq_len
        self.batch_size = batch_size
        self.lr = lr
        self.epochs = epochs
        self.seed = seed
        self.clip_norm = clip_norm

    def _config(self):
        return R.ModelConfig(**self.get_params())

    def fit(self, X, y, X_val=None, y_val=None):
        """Train on (tieq, standard) pairs; the optional validation pair picks the best epoch."""
        cfg = self._config()
        train_pairs = _aligned(X, y)
        val_pairs = _aligned(X_val, y_val) if X_val is not None else []
        self.vocab_, self.labels_ = build_vocabs(train_pairs + val_pairs, reference_m=0)
        model = R.init_model(cfg, self.vocab_, self.labels_)
        self.model_, self.history_ = R.train(model, Split(train_pairs, val_pairs, cfg.seed), cfg)
        return self

    def predict_labels(self, X):
        check_is_fitted(self, "model_")
        X = check_sentences(X)
        L = self.model_.config.seq_len
        out = []
        for s in X:
            labs = []
            for start in range(0, len(s), L):
                ex = encode_text(s[start:start + L], self.model_.vocab, L)
                labs.extend(self.model_.labels[i] for i in R.predict_labels(self.model_, ex))
            out.append(labs)
        return out

    def predict(self, X):
        check_is_fitted(self, "model_")
        return R.restore(self.model_, check_sentences(X))

    def score(self, X, y):
        """Character accuracy of the predicted labels against the gold alignment."""
        pairs = _aligned(X, y)
        preds = self.predict_labels([p.tieq for p in pairs])
        report, _ = evaluate_labels([p.tieq for p in pairs], preds, [p.lower_labels for p in pairs])
        return report.char_accuracy

    def save(self, path):
        check_is_fitted(self, "model_")
        R.save_checkpoint(self.model_, path)

    @classmethod
    def load(cls, path) -> "BiLSTMRestorer":
        model = R.load_checkpoint(path)
        est = cls(**{k: getattr(model.config, k) for k in cls().get_params()})
        est.model_ = model
        est.vocab_, est.labels_ = model.vocab, model.labels
        est.history_ = model.history
        return est


__all__ = ["TieqVietConverter", "UnigramRestorer", "BiLSTMRestorer"]
