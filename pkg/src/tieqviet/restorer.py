"""Character-level stacked BiLSTM tagger that restores standard spelling."""
from __future__ import annotations

import json
import logging
import math
import struct
import zlib
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import autograd as ag
from . import nn
from .autograd import Tensor
from .dataset import (SEQ_LEN, EncodedExample, LabelVocab, Split, Vocab, batches, encode_all,
                      encode_text)
from .rules import apply_labels

log = logging.getLogger(__name__)

FORMAT_VERSION = "1"
MAGIC = b"TIEQVIET-CKPT\n"
INPUT_MODES = ("onehot", "embedding")


@dataclass
class ModelConfig:
    input_mode: str = "onehot"
    embedding_dim: int = 227
    hidden_dim: int = 512
    layers: int = 2
    bidirectional: bool = True
    seq_len: int = SEQ_LEN
    batch_size: int = 32
    lr: float = 0.001
    epochs: int = 300
    seed: int = 0
    clip_norm: float = 5.0  # 0 disables clipping

    def __post_init__(self):
        if self.input_mode not in INPUT_MODES:
            raise ValueError(f"input_mode must be one of {INPUT_MODES}, got {self.input_mode!r}")
        for name in ("embedding_dim", "hidden_dim", "layers", "seq_len", "batch_size", "epochs"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be positive")
        if self.lr <= 0 or self.clip_norm < 0:
            raise ValueError("lr must be positive and clip_norm non-negative")

    @classmethod
    def from_dict(cls, values: dict) -> "ModelConfig":
        """Build from string or typed values; unknown keys are an error."""
        known = {f.name: f.type for f in fields(cls)}
        kwargs = {}
        for key, value in values.items():
            if key not in known:
                raise KeyError(f"unknown model config key {key!r}")
            kwargs[key] = _coerce(getattr(cls(), key), value)
        return cls(**kwargs)

    def to_lines(self) -> list[str]:
        return [f"{k}={_fmt(v)}" for k, v in asdict(self).items()]


def _coerce(default, value):
    if not isinstance(value, str):
        return type(default)(value)
    if isinstance(default, bool):
        if value.lower() in ("1", "true", "yes"):
            return True
        if value.lower() in ("0", "false", "no"):
            return False
        raise ValueError(f"not a boolean: {value!r}")
    return type(default)(value)


def _fmt(v):
    return str(v).lower() if isinstance(v, bool) else repr(v) if isinstance(v, float) else str(v)


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    train_acc: float
    val_loss: float
    val_acc: float


@dataclass
class TrainingHistory:
    records: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0

    def __len__(self):
        return len(self.records)

    def __getitem__(self, i):
        return self.records[i]

    def column(self, name) -> list[float]:
        return [getattr(r, name) for r in self.records]


class TrainingDiverged(RuntimeError):
    def __init__(self, epoch, batch, loss):
        super().__init__(f"loss became {loss} at epoch {epoch}, batch {batch}")
        self.epoch, self.batch, self.loss = epoch, batch, loss


class VocabMismatch(ValueError):
    pass


class CheckpointError(ValueError):
    pass


class Model:
    """Parameters plus vocabularies; ``forward`` maps input indices to label logits."""

    def __init__(self, config: ModelConfig, vocab: Vocab, labels: LabelVocab,
                 lstm: nn.LstmParams, head_W: Tensor, head_b: Tensor,
                 embedding: Tensor | None = None):
        self.config = config
        self.vocab = vocab
        self.labels = labels
        self.lstm = lstm
        self.head_W = head_W
        self.head_b = head_b
        self.embedding = embedding
        self.history = TrainingHistory()

    def named_parameters(self) -> list[tuple[str, Tensor]]:
        out = []
        if self.embedding is not None:
            out.append(("embedding", self.embedding))
        out.extend(self.lstm.named_tensors())
        out.append(("head.W", self.head_W))
        out.append(("head.b", self.head_b))
        return out

    def parameters(self) -> list[Tensor]:
        return [t for _, t in self.named_parameters()]

    def state(self) -> dict[str, np.ndarray]:
        return {name: t.data.copy() for name, t in self.named_parameters()}

    def load_state(self, state: dict[str, np.ndarray]):
        for name, t in self.named_parameters():
            if state[name].shape != t.shape:
                raise CheckpointError(f"{name}: shape {state[name].shape}, expected {t.shape}")
            t.data = np.array(state[name], dtype=np.float64)

    def forward(self, inputs: np.ndarray, mask: np.ndarray) -> Tensor:
        """``inputs``/``mask`` are batch x T; returns T x batch x |labels| logits."""
        inputs = np.asarray(inputs).T
        mask = np.asarray(mask, bool).T
        T, B = inputs.shape
        eye = np.eye(self.vocab.m)
        xs = []
        for t in range(T):
            onehot = Tensor(eye[inputs[t]])
            xs.append(onehot @ self.embedding if self.embedding is not None else onehot)
        hs = nn.bilstm_sequence(xs, self.lstm, mask)
        return nn.linear(ag.stack(hs, axis=0), self.head_W, self.head_b)


def init_model(cfg: ModelConfig, vocab: Vocab, labels: LabelVocab, seed: int | None = None) -> Model:
    """Freshly initialized model; identical for identical ``(cfg, vocab, labels, seed)``."""
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    embedding = None
    in_dim = vocab.m
    if cfg.input_mode == "embedding":
        embedding = Tensor(nn.glorot_uniform(rng, vocab.m, cfg.embedding_dim), requires_grad=True)
        in_dim = cfg.embedding_dim
    lstm = nn.init_lstm(rng, in_dim, cfg.hidden_dim, cfg.layers, cfg.bidirectional)
    width = (2 if cfg.bidirectional else 1) * cfg.hidden_dim
    head_W = Tensor(nn.glorot_uniform(rng, len(labels), width), requires_grad=True)
    head_b = Tensor(np.zeros(len(labels)), requires_grad=True)
    return Model(cfg, vocab, labels, lstm, head_W, head_b, embedding)


def _crop(batch):
    T = max(1, int(batch.mask.sum(axis=1).max()))
    return batch.inputs[:, :T], batch.targets[:, :T], batch.mask[:, :T]


def _evaluate(model: Model, examples: Sequence[EncodedExample], batch_size: int):
    total_loss = correct = count = 0.0
    for batch in batches(examples, batch_size):
        inputs, targets, mask = _crop(batch)
        logits = model.forward(inputs, mask)
        n = int(mask.sum())
        total_loss += nn.cross_entropy(logits, targets.T, mask.T).item() * n
        pred = logits.data.argmax(axis=-1)
        correct += float(((pred == targets.T) & mask.T).sum())
        count += n
    return total_loss / count, correct / count


def train(model: Model, split: Split, cfg: ModelConfig | None = None,
          on_epoch: Callable[[EpochRecord], None] | None = None) -> tuple[Model, TrainingHistory]:
    """Adam on masked cross-entropy; keeps the parameters of the best validation epoch."""
    cfg = cfg or model.config
    train_ex = encode_all(split.train, model.vocab, model.labels, cfg.seq_len,
                          split.train_indices or None)
    val_ex = encode_all(split.validation, model.vocab, model.labels, cfg.seq_len,
                        split.validation_indices or None)
    params = model.parameters()
    opt = nn.Adam(params, lr=cfg.lr)
    history = TrainingHistory()
    best = (-1.0, math.inf)
    best_state = model.state()
    for epoch in range(1, cfg.epochs + 1):
        tot_loss = correct = count = 0.0
        for b, batch in enumerate(batches(train_ex, cfg.batch_size, seed=cfg.seed + epoch)):
            inputs, targets, mask = _crop(batch)
            opt.zero_grad()
            logits = model.forward(inputs, mask)
            loss = nn.cross_entropy(logits, targets.T, mask.T)
            value = loss.item()
            if not math.isfinite(value):
                raise TrainingDiverged(epoch, b, value)
            loss.backward()
            nn.clip_grad_norm(params, cfg.clip_norm or None)
            opt.step()
            n = int(mask.sum())
            tot_loss += value * n
            correct += float(((logits.data.argmax(-1) == targets.T) & mask.T).sum())
            count += n
        val_loss, val_acc = _evaluate(model, val_ex, cfg.batch_size) if val_ex else (math.nan, math.nan)
        if val_ex and not math.isfinite(val_loss):
            raise TrainingDiverged(epoch, "validation", val_loss)
        rec = EpochRecord(epoch, tot_loss / count, correct / count, val_loss, val_acc)
        history.records.append(rec)
        if val_ex and (val_acc > best[0] or (val_acc == best[0] and val_loss < best[1])):
            best = (val_acc, val_loss)
            best_state = model.state()
            history.best_epoch = epoch
        log.debug("epoch %d train_loss=%.4f train_acc=%.4f val_loss=%.4f val_acc=%.4f",
                 epoch, rec.train_loss, rec.train_acc, rec.val_loss, rec.val_acc)
        if on_epoch is not None:
            on_epoch(rec)
    if val_ex:
        model.load_state(best_state)
    else:
        history.best_epoch = cfg.epochs
    model.history = history
    return model, history


def predict_labels(model: Model, example: EncodedExample) -> list[int]:
    """Argmax label index for each real (unmasked) position."""
    if example.m != model.vocab.m:
        raise VocabMismatch(f"example encoded over m={example.m}, model has m={model.vocab.m}")
    return predict_label_batch(model, [example])[0]


def predict_label_batch(model: Model, examples: Sequence[EncodedExample], batch_size=64):
    out = []
    for start in range(0, len(examples), batch_size):
        chunk = examples[start:start + batch_size]
        inputs = np.stack([e.inputs for e in chunk])
        mask = np.stack([e.mask for e in chunk])
        T = max(1, int(mask.sum(axis=1).max()))
        pred = model.forward(inputs[:, :T], mask[:, :T]).data.argmax(-1).T
        out.extend([int(i) for i in row[:e.length]] for row, e in zip(pred, chunk))
    return out


def decode(tieq: str, labels: Sequence[str]) -> str:
    """Standard text from per-character labels; casing comes from ``tieq``."""
    if len(labels) != len(tieq):
        raise ValueError(f"decode: {len(labels)} labels for {len(tieq)} characters")
    return apply_labels(tieq, labels)


def restore(model: Model, sentences: Sequence[str]) -> list[str]:
    """Restore whole sentences; text beyond ``seq_len`` is processed window by window."""
    L = model.config.seq_len
    pieces, owners = [], []
    for k, s in enumerate(sentences):
        for start in range(0, max(len(s), 1), L):
            pieces.append(s[start:start + L])
            owners.append(k)
    examples = [encode_text(p, model.vocab, L) for p in pieces]
    labels = predict_label_batch(model, examples)
    out = [""] * len(sentences)
    for piece, labs, k in zip(pieces, labels, owners):
        out[k] += piece and decode(piece, [model.labels[i] for i in labs])
    return out


# -- checkpoint ------------------------------------------------------------
#
# Layout: MAGIC, then UTF-8 header lines "key=value" ending with an empty
# line. Header keys: version, config.<field>, vocab (JSON list), labels
# (JSON list), history (JSON list of epoch records), best_epoch, arrays
# (count), crc32 (of the array payload). The payload is, per array:
# u32 name length, name bytes, u32 ndim, ndim x u64 dims, then the values
# as little-endian float64 in row-major order. All integers little-endian.

def save_checkpoint(model: Model, path):
    payload = bytearray()
    named = model.named_parameters()
    for name, t in named:
        raw = name.encode("utf-8")
        payload += struct.pack("<I", len(raw)) + raw
        payload += struct.pack("<I", t.ndim)
        payload += struct.pack(f"<{t.ndim}Q", *t.shape)
        payload += np.ascontiguousarray(t.data, dtype="<f8").tobytes()
    header = [f"version={FORMAT_VERSION}"]
    header += [f"config.{line}" for line in model.config.to_lines()]
    header.append("vocab=" + json.dumps(list(model.vocab.symbols), ensure_ascii=False))
    header.append("labels=" + json.dumps(list(model.labels.labels), ensure_ascii=False))
    header.append("history=" + json.dumps([asdict(r) for r in model.history.records]))
    header.append(f"best_epoch={model.history.best_epoch}")
    header.append(f"arrays={len(named)}")
    header.append(f"crc32={zlib.crc32(payload)}")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(("\n".join(header) + "\n\n").encode("utf-8"))
        fh.write(payload)


def load_checkpoint(path) -> Model:
    data = Path(path).read_bytes()
    if not data.startswith(MAGIC):
        raise CheckpointError(f"{path}: not a tieqviet checkpoint")
    end = data.find(b"\n\n", len(MAGIC))
    if end < 0:
        raise CheckpointError(f"{path}: corrupt checkpoint (header not terminated)")
    try:
        lines = data[len(MAGIC):end].decode("utf-8").split("\n")
        header = dict(line.split("=", 1) for line in lines)
    except (UnicodeDecodeError, ValueError) as exc:
        raise CheckpointError(f"{path}: corrupt checkpoint header") from exc
    if header.get("version") != FORMAT_VERSION:
        raise CheckpointError(
            f"{path}: checkpoint version {header.get('version')!r}, expected {FORMAT_VERSION!r}")
    payload = data[end + 2:]
    if zlib.crc32(payload) != int(header["crc32"]):
        raise CheckpointError(f"{path}: corrupt checkpoint (payload checksum mismatch)")
    cfg = ModelConfig.from_dict({k[7:]: v for k, v in header.items() if k.startswith("config.")})
    vocab = Vocab.from_symbols(json.loads(header["vocab"]))
    labels = LabelVocab(json.loads(header["labels"]))
    model = init_model(cfg, vocab, labels)
    state = {}
    pos = 0
    try:
        for _ in range(int(header["arrays"])):
            (n,) = struct.unpack_from("<I", payload, pos)
            pos += 4
            name = payload[pos:pos + n].decode("utf-8")
            pos += n
            (ndim,) = struct.unpack_from("<I", payload, pos)
            pos += 4
            shape = struct.unpack_from(f"<{ndim}Q", payload, pos)
            pos += 8 * ndim
            count = math.prod(shape)
            arr = np.frombuffer(payload, dtype="<f8", count=count, offset=pos).reshape(shape)
            pos += 8 * count
            state[name] = arr.astype(np.float64)
        model.load_state(state)
    except (struct.error, ValueError, KeyError) as exc:
        raise CheckpointError(f"{path}: corrupt checkpoint payload ({exc})") from exc
    model.history = TrainingHistory(
        [EpochRecord(**r) for r in json.loads(header["history"])], int(header["best_epoch"]))
    return model
