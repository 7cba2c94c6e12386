"""Small float64 numpy layers with hand-written backward passes.

Every forward function returns ``(output, cache)``; the matching backward
takes the upstream gradient and the cache.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict

import numpy as np

SIGMOID_EPS = 1e-7
LOGVAR_MIN, LOGVAR_MAX = -10.0, 10.0
FD_STEP = 1e-5


class ShapeMismatch(ValueError):
    pass


def glorot(rng, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


class ParamStore:
    def __init__(self):
        self.params: Dict[str, np.ndarray] = {}
        self.grads: Dict[str, np.ndarray] = {}

    def add(self, name, value):
        if name in self.params:
            raise KeyError(f"duplicate parameter {name!r}")
        self.params[name] = np.asarray(value, dtype=np.float64)
        self.grads[name] = np.zeros_like(self.params[name])

    def __getitem__(self, name):
        return self.params[name]

    def __iter__(self):
        return iter(self.params)

    def __len__(self):
        return len(self.params)

    def zero_grad(self):
        for g in self.grads.values():
            g.fill(0.0)

    def accumulate(self, name, g):
        if g.shape != self.grads[name].shape:
            raise ShapeMismatch(f"gradient for {name} has shape {g.shape}, expected {self.grads[name].shape}")
        self.grads[name] += g

    def n_values(self):
        return sum(p.size for p in self.params.values())


# ---------------------------------------------------------------------------
# layers

def linear(x, W, b):
    if x.shape[-1] != W.shape[0] or b.shape != (W.shape[1],):
        raise ShapeMismatch(f"linear: x {x.shape}, W {W.shape}, b {b.shape}")
    return x @ W + b, (x, W)


def linear_backward(dy, cache):
    x, W = cache
    return dy @ W.T, x.T @ dy, dy.sum(axis=0)


def relu(x):
    return np.maximum(x, 0.0), x


def relu_backward(dy, cache):
    return dy * (cache > 0)


def tanh(x):
    y = np.tanh(x)
    return y, y


def tanh_backward(dy, cache):
    return dy * (1.0 - cache * cache)


def sigmoid(x):
    """Logistic function clamped to [eps, 1 - eps]."""
    y = np.empty_like(x)
    pos = x >= 0
    y[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    y[~pos] = ex / (1.0 + ex)
    clipped = np.clip(y, SIGMOID_EPS, 1.0 - SIGMOID_EPS)
    return clipped, (clipped, y == clipped)


def sigmoid_backward(dy, cache):
    y, inside = cache
    return dy * y * (1.0 - y) * inside


def clamp_logvar(lv):
    out = np.clip(lv, LOGVAR_MIN, LOGVAR_MAX)
    return out, out == lv


def clamp_backward(dy, cache):
    return dy * cache


# ---------------------------------------------------------------------------
# recurrent sentence encoder

def pad_batch(token_lists):
    lengths = np.array([len(t) for t in token_lists])
    if lengths.size == 0 or lengths.min() == 0:
        raise ValueError("empty token sequence")
    out = np.zeros((len(token_lists), lengths.max()), dtype=np.int64)
    for i, t in enumerate(token_lists):
        out[i, : len(t)] = t
    return out, lengths


def rnn_encode(tokens, lengths, E, Wx, Wh, b):
    """Vanilla tanh RNN over padded token ids; returns each sequence's last state.

    tokens: (B, T) ints, lengths: (B,), E: (V, D), Wx: (D, H), Wh: (H, H), b: (H,)
    """
    tokens = np.asarray(tokens)
    if tokens.ndim == 1:
        tokens = tokens[None, :]
        lengths = np.array([tokens.shape[1]])
    lengths = np.asarray(lengths)
    if tokens.shape[1] == 0 or lengths.min() < 1:
        raise ValueError("empty token sequence")
    if tokens.max() >= E.shape[0] or tokens.min() < 0:
        raise IndexError("token index outside the embedding matrix")
    B, T = tokens.shape
    h = np.zeros((B, Wh.shape[0]))
    hs, xs = [h], []
    for t in range(T):
        x = E[tokens[:, t]]
        active = (t < lengths)[:, None]
        h_new = np.tanh(x @ Wx + h @ Wh + b)
        h = np.where(active, h_new, h)
        xs.append(x)
        hs.append(h)
    return h, (tokens, lengths, xs, hs, E.shape, Wx, Wh)


def rnn_backward(dh, cache):
    """Backpropagation through time; returns (dE, dWx, dWh, db)."""
    tokens, lengths, xs, hs, e_shape, Wx, Wh = cache
    B, T = tokens.shape
    dE = np.zeros(e_shape)
    dWx = np.zeros_like(Wx)
    dWh = np.zeros_like(Wh)
    db = np.zeros(Wx.shape[1])
    dh = dh.copy()
    for t in range(T - 1, -1, -1):
        active = (t < lengths)[:, None]
        h, h_prev = hs[t + 1], hs[t]
        da = np.where(active, dh * (1.0 - h * h), 0.0)
        dWx += xs[t].T @ da
        dWh += h_prev.T @ da
        db += da.sum(axis=0)
        np.add.at(dE, tokens[:, t], da @ Wx.T)
        dh = np.where(active, da @ Wh.T, dh)
    return dE, dWx, dWh, db


# ---------------------------------------------------------------------------
# losses

def bce_loss(probs, targets, reduction="sum"):
    """Binary cross-entropy; returns (loss, d loss / d probs).

    ``reduction="sum"`` sums over the last axis and averages over the batch
    (same reduction as ``kl_loss``); ``"mean"`` averages over every element.
    """
    if probs.shape != targets.shape:
        raise ShapeMismatch(f"bce: probs {probs.shape} vs targets {targets.shape}")
    p = np.clip(probs, SIGMOID_EPS, 1.0 - SIGMOID_EPS)
    if reduction == "mean":
        n = p.size
    elif reduction == "sum":
        n = p.size // p.shape[-1]
    else:
        raise ValueError(f"unknown reduction {reduction!r}")
    loss = -np.sum(targets * np.log(p) + (1.0 - targets) * np.log(1.0 - p)) / n
    grad = (-(targets / p) + (1.0 - targets) / (1.0 - p)) / n
    return float(loss), grad


def kl_loss(mu, logvar):
    """KL(N(mu, exp(logvar)) || N(0, I)) summed over latent dims, averaged over batch."""
    if mu.shape != logvar.shape:
        raise ShapeMismatch(f"kl: mu {mu.shape} vs logvar {logvar.shape}")
    mu = np.atleast_2d(mu)
    logvar = np.atleast_2d(logvar)
    B = mu.shape[0]
    ev = np.exp(logvar)
    loss = -0.5 * np.sum(1.0 + logvar - mu * mu - ev) / B
    return float(loss), mu / B, -0.5 * (1.0 - ev) / B


# ---------------------------------------------------------------------------
# optimizer

@dataclass
class AdamState:
    lr: float = 5e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def for_params(cls, params, **hyper):
        state = cls(**hyper)
        for k, p in params.items():
            state.m[k] = np.zeros_like(p)
            state.v[k] = np.zeros_like(p)
        return state


class UninitializedState(KeyError):
    pass


def adam_step(params, grads, state: AdamState):
    """In-place Adam update with bias correction."""
    missing = [k for k in params if k not in state.m]
    if missing:
        raise UninitializedState(f"no Adam moments for {missing}")
    state.step += 1
    bc1 = 1.0 - state.beta1 ** state.step
    bc2 = 1.0 - state.beta2 ** state.step
    for k, p in params.items():
        g = grads[k]
        m, v = state.m[k], state.v[k]
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * (g * g)
        p -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)
    return params


# ---------------------------------------------------------------------------
# finite-difference checking

@dataclass
class GradCheckReport:
    max_rel_error: float
    per_param: Dict[str, float]
    tolerance: float
    n_checked: int
    floor: float = 0.0

    @property
    def passed(self):
        return self.max_rel_error <= self.tolerance


def rel_error(a, b, floor=1e-6):
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)


def gradient_check(
    loss_fn: Callable[[], float],
    params: Dict[str, np.ndarray],
    grads: Dict[str, np.ndarray],
    tolerance: float = 1e-4,
    step: float = FD_STEP,
    max_per_param=None,
    rng=None,
    floor: float = 1e-6,
    indices=None,
) -> GradCheckReport:
    """Compare analytic ``grads`` with central differences of ``loss_fn``.

    ``loss_fn`` must read ``params`` in place. Relative error is
    |a - n| / max(|a|, |n|, floor). With ``max_per_param`` set, that many
    entries per tensor are drawn (without replacement) from ``rng``;
    ``indices`` maps a tensor name to the flat entries to check instead.

    Central differences carry round-off of about |L| * machine-eps / step,
    so the floor is raised until that noise alone stays under ``tolerance``.
    """
    noise = abs(loss_fn()) * np.finfo(np.float64).eps / step
    floor = max(floor, noise / tolerance)
    per_param = {}
    n_checked = 0
    for name, p in params.items():
        if not p.flags.c_contiguous:
            raise ValueError(f"parameter {name} must be C-contiguous")
        flat = p.reshape(-1)
        g = grads[name].reshape(-1)
        idx = np.arange(flat.size)
        if indices is not None and name in indices:
            idx = np.asarray(indices[name])
        elif max_per_param is not None and flat.size > max_per_param:
            idx = np.sort(rng.choice(flat.size, size=max_per_param, replace=False))
        worst = 0.0
        for i in idx:
            old = flat[i]
            flat[i] = old + step
            up = loss_fn()
            flat[i] = old - step
            down = loss_fn()
            flat[i] = old
            num = (up - down) / (2 * step)
            worst = max(worst, float(rel_error(g[i], num, floor)))
        per_param[name] = worst
        n_checked += len(idx)
    return GradCheckReport(max(per_param.values()), per_param, tolerance, n_checked, floor)
