"""LSTM layers, masked cross-entropy and Adam on top of :mod:`tieqviet.autograd`."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import autograd as ag
from .autograd import ShapeError, Tensor

GATES = ("input", "forget", "cell", "output")


@dataclass
class LstmWeights:
    """One direction of one layer. Gate blocks are stacked input, forget, cell, output."""

    W: Tensor  # 4h x in
    U: Tensor  # 4h x h
    b: Tensor  # 4h

    @property
    def hidden(self) -> int:
        return self.U.shape[1]

    @property
    def input_dim(self) -> int:
        return self.W.shape[1]

    def tensors(self):
        return [self.W, self.U, self.b]


@dataclass
class LstmParams:
    """``layers[k][d]`` is layer ``k``, direction ``d`` (0 forward, 1 backward)."""

    layers: list[list[LstmWeights]]

    @property
    def hidden(self) -> int:
        return self.layers[0][0].hidden

    @property
    def directions(self) -> int:
        return len(self.layers[0])

    def named_tensors(self):
        for k, layer in enumerate(self.layers):
            for d, w in enumerate(layer):
                tag = "fw" if d == 0 else "bw"
                yield f"lstm.{k}.{tag}.W", w.W
                yield f"lstm.{k}.{tag}.U", w.U
                yield f"lstm.{k}.{tag}.b", w.b


def glorot_uniform(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (rows + cols))
    return rng.uniform(-limit, limit, size=(rows, cols))


def init_lstm(rng, input_dim, hidden, layers=2, bidirectional=True, forget_bias=1.0) -> LstmParams:
    directions = 2 if bidirectional else 1
    out = []
    for k in range(layers):
        in_dim = input_dim if k == 0 else directions * hidden
        layer = []
        for _ in range(directions):
            b = np.zeros(4 * hidden)
            b[hidden:2 * hidden] = forget_bias
            layer.append(LstmWeights(
                Tensor(glorot_uniform(rng, 4 * hidden, in_dim), requires_grad=True),
                Tensor(glorot_uniform(rng, 4 * hidden, hidden), requires_grad=True),
                Tensor(b, requires_grad=True),
            ))
        out.append(layer)
    return LstmParams(out)


def lstm_cell_step(x, h, c, p: LstmWeights):
    """One LSTM step: returns ``(h', c')``.

    i, f, o = sigmoid(.), g = tanh(.), c' = f*c + i*g, h' = o*tanh(c').
    """
    if x.shape[-1] != p.input_dim or h.shape[-1] != p.hidden or c.shape != h.shape:
        raise ShapeError(
            f"lstm_cell_step: x {x.shape}, h {h.shape}, c {c.shape} "
            f"do not fit W {p.W.shape}, U {p.U.shape}")
    return _gates(x @ p.W.T + p.b, h, c, p.U.T)


def _gates(zx, h, c, Ut):
    H = Ut.shape[0]
    z = zx + h @ Ut
    i = ag.sigmoid(z[:, 0:H])
    f = ag.sigmoid(z[:, H:2 * H])
    g = ag.tanh(z[:, 2 * H:3 * H])
    o = ag.sigmoid(z[:, 3 * H:4 * H])
    c_new = f * c + i * g
    h_new = o * ag.tanh(c_new)
    return h_new, c_new


def lstm_direction(xs: Sequence[Tensor], p: LstmWeights, reverse=False, mask=None):
    """Run one direction over per-step inputs; returns per-step hidden states.

    With ``mask`` (T x batch, 1 = real step) the state is carried unchanged
    through padded steps, so the backward direction starts fresh at each
    sequence's true end.
    """
    T, B = len(xs), xs[0].shape[0]
    if xs[0].shape[-1] != p.input_dim:
        raise ShapeError(f"lstm: input width {xs[0].shape[-1]} vs W {p.W.shape}")
    # all input projections in one matmul, sliced per step
    flat = ag.reshape(ag.stack(xs, axis=0), (T * B, p.input_dim))
    proj = ag.reshape(flat @ p.W.T + p.b, (T, B, 4 * p.hidden))
    Ut = p.U.T
    h = Tensor(np.zeros((B, p.hidden)))
    c = Tensor(np.zeros((B, p.hidden)))
    out = [None] * T
    steps = range(T - 1, -1, -1) if reverse else range(T)
    for t in steps:
        h_new, c_new = _gates(proj[t], h, c, Ut)
        if mask is not None and not mask[t].all():
            m = Tensor(mask[t].astype(np.float64)[:, None])
            h_new = h + m * (h_new - h)
            c_new = c + m * (c_new - c)
        h, c = h_new, c_new
        out[t] = h
    return out


def bilstm_sequence(xs: Sequence[Tensor], params: LstmParams, mask=None) -> list[Tensor]:
    """Stacked (bi)LSTM over a list of ``batch x in`` steps."""
    seq = list(xs)
    for layer in params.layers:
        runs = [lstm_direction(seq, w, reverse=(d == 1), mask=mask) for d, w in enumerate(layer)]
        if len(runs) == 1:
            seq = runs[0]
        else:
            seq = [ag.concat([r[t] for r in runs], axis=1) for t in range(len(seq))]
    return seq


def bilstm_stack(x: Tensor, params: LstmParams, mask=None) -> Tensor:
    """``T x batch x in`` -> ``T x batch x (directions*h)``."""
    if x.ndim != 3 or x.shape[2] != params.layers[0][0].input_dim:
        raise ShapeError(
            f"bilstm_stack: input {x.shape} does not fit input width "
            f"{params.layers[0][0].input_dim}")
    xs = [x[t] for t in range(x.shape[0])]
    return ag.stack(bilstm_sequence(xs, params, mask), axis=0)


def linear(x: Tensor, W: Tensor, b: Tensor) -> Tensor:
    """Shared fully connected layer, ``(..., in) -> (..., out)`` with ``W`` as out x in."""
    lead = x.shape[:-1]
    flat = ag.reshape(x, (-1, x.shape[-1]))
    return ag.reshape(flat @ W.T + b, (*lead, W.shape[0]))


def cross_entropy(logits, targets, mask=None) -> Tensor:
    """Mean of ``-log softmax(logits)[target]`` over positions where ``mask`` is true."""
    logits = ag.as_tensor(logits)
    targets = np.asarray(targets, dtype=np.int64)
    L = logits.shape[-1]
    if targets.shape != logits.shape[:-1]:
        raise ShapeError(f"cross_entropy: logits {logits.shape} vs targets {targets.shape}")
    mask = np.ones(targets.shape, bool) if mask is None else np.asarray(mask, bool)
    if mask.shape != targets.shape:
        raise ShapeError(f"cross_entropy: mask {mask.shape} vs targets {targets.shape}")
    n = int(mask.sum())
    if n == 0:
        raise ValueError("cross_entropy: mask selects no positions")
    if np.any((targets[mask] < 0) | (targets[mask] >= L)):
        raise ValueError(f"cross_entropy: targets outside [0, {L})")
    z = logits.data - logits.data.max(axis=-1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=-1, keepdims=True))
    safe = np.where(mask, targets, 0)
    picked = np.take_along_axis(logp, safe[..., None], axis=-1)[..., 0]
    loss = -(picked * mask).sum() / n

    def backward(g):
        grad = np.exp(logp)
        np.put_along_axis(grad, safe[..., None],
                          np.take_along_axis(grad, safe[..., None], axis=-1) - 1.0, axis=-1)
        return (grad * (mask[..., None] * (g / n)),)

    return ag._result(np.asarray(loss), (logits,), backward)


def clip_grad_norm(params: Sequence[Tensor], max_norm: float | None) -> float:
    """Scale gradients in place so their global L2 norm is at most ``max_norm``."""
    total = float(np.sqrt(sum(float((p.grad * p.grad).sum()) for p in params if p.grad is not None)))
    if max_norm and total > max_norm:
        scale = max_norm / (total + 1e-12)
        for p in params:
            if p.grad is not None:
                p.grad *= scale
    return total


@dataclass
class AdamState:
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    t: int = 0
    m: list | None = None
    v: list | None = None


def adam_step(params: Sequence[Tensor], grads: Sequence[np.ndarray], state: AdamState):
    """Bias-corrected Adam update, applied in place to ``params``."""
    if state.m is None:
        state.m = [np.zeros_like(p.data) for p in params]
        state.v = [np.zeros_like(p.data) for p in params]
    state.t += 1
    bc1 = 1.0 - state.beta1 ** state.t
    bc2 = 1.0 - state.beta2 ** state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if g is None:
            continue
        if g.shape != p.shape:
            raise ShapeError(f"adam_step: grad {g.shape} vs param {p.shape}")
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        p.data -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.epsilon)
    return params


class Adam:
    def __init__(self, params: Sequence[Tensor], lr=0.001, beta1=0.9, beta2=0.999, epsilon=1e-8):
        self.params = list(params)
        self.state = AdamState(lr, beta1, beta2, epsilon)

    def zero_grad(self):
        for p in self.params:
            p.grad = None

    def step(self):
        adam_step(self.params, [p.grad for p in self.params], self.state)
