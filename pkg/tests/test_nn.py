import math

import numpy as np
import pytest

from tieqviet import autograd as ag
from tieqviet import nn
from tieqviet.autograd import ShapeError, Tensor

from test_autograd import numeric_grad


def sig(x):
    return 1 / (1 + math.exp(-x))


def test_scalar_lstm_step_matches_hand_computation():
    # hidden 1, input 1; gate rows are input, forget, cell, output
    W = np.array([[0.5], [-0.3], [0.8], [0.1]])
    U = np.array([[0.2], [0.4], [-0.6], [0.7]])
    b = np.array([0.1, 1.0, 0.0, -0.2])
    p = nn.LstmWeights(Tensor(W), Tensor(U), Tensor(b))
    x, h, c = 0.9, -0.4, 0.25
    h1, c1 = nn.lstm_cell_step(Tensor([[x]]), Tensor([[h]]), Tensor([[c]]), p)
    z = [W[k, 0] * x + U[k, 0] * h + b[k] for k in range(4)]
    i, f, g, o = sig(z[0]), sig(z[1]), math.tanh(z[2]), sig(z[3])
    c_ref = f * c + i * g
    assert c1.item() == pytest.approx(c_ref, abs=1e-15)
    assert h1.item() == pytest.approx(o * math.tanh(c_ref), abs=1e-15)


def test_init_shapes_and_forget_bias():
    p = nn.init_lstm(np.random.default_rng(0), 7, 5, layers=2, bidirectional=True)
    assert p.directions == 2 and p.hidden == 5
    assert p.layers[0][0].W.shape == (20, 7)
    assert p.layers[1][1].W.shape == (20, 10)
    assert p.layers[0][0].U.shape == (20, 5)
    np.testing.assert_array_equal(p.layers[0][0].b.data[5:10], 1.0)
    np.testing.assert_array_equal(p.layers[0][0].b.data[:5], 0.0)
    names = [n for n, _ in p.named_tensors()]
    assert names[:3] == ["lstm.0.fw.W", "lstm.0.fw.U", "lstm.0.fw.b"] and len(names) == 12


def test_wide_layer_two_input():
    p = nn.init_lstm(np.random.default_rng(0), 3, 512, layers=2)
    assert p.layers[1][0].input_dim == 1024


def test_glorot_bounds():
    w = nn.glorot_uniform(np.random.default_rng(1), 40, 60)
    assert np.abs(w).max() <= math.sqrt(6 / 100)


def test_backward_direction_reads_sequence_reversed():
    rng = np.random.default_rng(3)
    p = nn.init_lstm(rng, 2, 3, layers=1, bidirectional=False).layers[0][0]
    xs = [Tensor(rng.normal(size=(1, 2))) for _ in range(4)]
    rev = nn.lstm_direction(xs, p, reverse=True)
    fwd = nn.lstm_direction(xs[::-1], p)
    np.testing.assert_allclose(rev[0].data, fwd[-1].data)


def test_mask_makes_padding_irrelevant():
    rng = np.random.default_rng(4)
    params = nn.init_lstm(rng, 2, 3, layers=2)
    real = rng.normal(size=(3, 1, 2))
    padded = np.concatenate([real, rng.normal(size=(2, 1, 2))], axis=0)
    mask = np.array([[1], [1], [1], [0], [0]], bool)
    a = nn.bilstm_stack(Tensor(real), params).data
    b = nn.bilstm_stack(Tensor(padded), params, mask).data[:3]
    np.testing.assert_allclose(a, b, atol=1e-12)


def test_shape_errors():
    params = nn.init_lstm(np.random.default_rng(0), 4, 3, layers=1)
    with pytest.raises(ShapeError):
        nn.bilstm_stack(Tensor(np.zeros((2, 1, 5))), params)
    with pytest.raises(ShapeError):
        nn.lstm_cell_step(Tensor(np.zeros((1, 5))), Tensor(np.zeros((1, 3))),
                          Tensor(np.zeros((1, 3))), params.layers[0][0])


def test_cross_entropy_value_and_mask():
    logits = np.log(np.array([[[0.7, 0.2, 0.1]], [[0.25, 0.25, 0.5]]]))
    targets = np.array([[0], [2]])
    loss = nn.cross_entropy(Tensor(logits), targets)
    assert loss.item() == pytest.approx(-(math.log(0.7) + math.log(0.5)) / 2)
    masked = nn.cross_entropy(Tensor(logits), np.array([[0], [99]]), np.array([[True], [False]]))
    assert masked.item() == pytest.approx(-math.log(0.7))
    with pytest.raises(ValueError):
        nn.cross_entropy(Tensor(logits), targets, np.zeros((2, 1), bool))
    with pytest.raises(ValueError):
        nn.cross_entropy(Tensor(logits), np.array([[0], [3]]))


def test_cross_entropy_gradient():
    rng = np.random.default_rng(5)
    x = Tensor(rng.normal(size=(4, 2, 3)), requires_grad=True)
    targets = rng.integers(0, 3, size=(4, 2))
    mask = np.array([[1, 1], [1, 0], [1, 0], [0, 0]], bool)
    nn.cross_entropy(x, targets, mask).backward()
    ref = ag.log_softmax(Tensor(x.data))
    num = numeric_grad(lambda: nn.cross_entropy(Tensor(x.data), targets, mask).item(), x.data)
    np.testing.assert_allclose(x.grad, num, rtol=1e-5, atol=1e-8)
    assert ref.shape == x.shape


def test_composed_model_gradient_check():
    """Full BiLSTM stack + shared linear head + masked loss vs central differences."""
    rng = np.random.default_rng(7)
    T, B, m, H, L = 4, 2, 6, 3, 5
    params = nn.init_lstm(rng, m, H, layers=2)
    W = Tensor(rng.normal(size=(L, 2 * H)), requires_grad=True)
    b = Tensor(rng.normal(size=L), requires_grad=True)
    x = np.eye(m)[rng.integers(0, m, size=(T, B))]
    mask = np.array([[1, 1], [1, 1], [1, 1], [1, 0]], bool)
    targets = rng.integers(0, L, size=(T, B))
    tensors = [t for _, t in params.named_tensors()] + [W, b]

    def loss():
        h = nn.bilstm_stack(Tensor(x), params, mask)
        return nn.cross_entropy(nn.linear(h, W, b), targets, mask)

    loss().backward()
    assert max(relative_error(t.grad, numeric_grad(lambda: loss().item(), t.data))
               for t in tensors) < 1e-4


def relative_error(analytic, numeric):
    """Per-tensor ||a - n|| / max(||a||, ||n||); elementwise ratios are noise-dominated near 0."""
    scale = max(np.linalg.norm(analytic), np.linalg.norm(numeric), 1e-12)
    return float(np.linalg.norm(analytic - numeric) / scale)


def test_adam_matches_hand_calculation():
    p = Tensor(np.array([1.0, -2.0]), requires_grad=True)
    state = nn.AdamState(lr=0.1)
    g1 = np.array([0.5, -1.0])
    nn.adam_step([p], [g1], state)
    # first step: m_hat = g, v_hat = g^2, update = lr * g / (|g| + eps)
    np.testing.assert_allclose(p.data, [1.0 - 0.1, -2.0 + 0.1], atol=1e-7)
    g2 = np.array([0.1, 0.2])
    nn.adam_step([p], [g2], state)
    m = 0.9 * 0.1 * g1 + 0.1 * g2
    v = 0.999 * 0.001 * g1 ** 2 + 0.001 * g2 ** 2
    m_hat, v_hat = m / (1 - 0.9 ** 2), v / (1 - 0.999 ** 2)
    np.testing.assert_allclose(p.data, [0.9, -1.9] - 0.1 * m_hat / (np.sqrt(v_hat) + 1e-8))


def test_adam_class_and_zero_grad():
    p = Tensor(np.array([3.0]), requires_grad=True)
    opt = nn.Adam([p], lr=0.5)
    for _ in range(200):
        opt.zero_grad()
        ag.sum(p * p).backward()
        opt.step()
    assert abs(p.data[0]) < 0.05


def test_clip_grad_norm():
    a = Tensor(np.zeros(2), requires_grad=True)
    b = Tensor(np.zeros(1), requires_grad=True)
    a.grad, b.grad = np.array([3.0, 0.0]), np.array([4.0])
    assert nn.clip_grad_norm([a, b], 1.0) == pytest.approx(5.0)
    np.testing.assert_allclose(np.r_[a.grad, b.grad], [0.6, 0, 0.8])
    a.grad = np.array([0.3, 0.0])
    nn.clip_grad_norm([a], None)
    np.testing.assert_allclose(a.grad, [0.3, 0.0])
