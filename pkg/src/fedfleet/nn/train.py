"""Loss, gradients, Adam, and the local training loop.

Everything here is functional: optimizer steps and training return new
vectors and leave their inputs alone, so callers can hold onto old
parameters for anchoring or equivalence checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .arch import ArchSpec
from .backward import model_backward
from .forward import model_forward

EVAL_CHUNK = 512


def mae_loss(preds, labels) -> float:
    preds = np.asarray(preds)
    labels = np.asarray(labels)
    if preds.shape != labels.shape or preds.size == 0:
        raise ValueError("predictions/labels must be equal-length and non-empty")
    return float(np.mean(np.abs(preds - labels)))


def batch_gradient(vec, arch, X, y, mode="train", rng=None):
    """(loss, flat gradient) of batch MAE; dropout masks shared with forward.

    The MAE subgradient at exactly zero residual is 0 (np.sign convention),
    so a perfectly fit batch produces a zero gradient.
    """
    preds, cache = model_forward(vec, arch, X, mode=mode, rng=rng)
    resid = preds - y
    loss = float(np.mean(np.abs(resid)))
    dpreds = np.sign(resid) / len(y)
    return loss, model_backward(vec, arch, cache, dpreds)


def backward(vec, arch, X, y, rng=None, mode="train"):
    """Gradient-only form of batch_gradient."""
    return batch_gradient(vec, arch, X, y, mode=mode, rng=rng)[1]


def full_batch_gradient(vec, arch, ds, chunk: int = 256):
    """Deterministic whole-split MAE gradient, dropout disabled.

    Chunked to bound cache memory; chunk gradients recombine with sample
    weights, which is exact for a mean-based loss up to float rounding.
    """
    n = len(ds.y)
    if n == 0:
        raise ValueError("empty dataset")
    total = np.zeros_like(vec)
    for s in range(0, n, chunk):
        Xc, yc = ds.X[s : s + chunk], ds.y[s : s + chunk]
        _, g = batch_gradient(vec, arch, Xc, yc, mode="eval")
        total += (len(yc) / n) * g
    return total


def predict(vec, arch, X, chunk: int = EVAL_CHUNK):
    """Eval-mode predictions for an (n, m, f) stack of windows."""
    outs = []
    for s in range(0, len(X), chunk):
        preds, _ = model_forward(vec, arch, X[s : s + chunk], mode="eval")
        outs.append(preds)
    return np.concatenate(outs)


def evaluate(vec, arch, ds) -> float:
    """MAE (Wh) over a windowed dataset.

    The absolute errors are reduced with math.fsum, so the value is exactly
    invariant to dataset ordering.
    """
    if len(ds.y) == 0:
        raise ValueError("empty dataset")
    preds = predict(vec, arch, ds.X)
    return math.fsum(np.abs(preds - ds.y).tolist()) / len(ds.y)


def central_difference(f, w: np.ndarray, coords, h: float):
    """Generic two-sided difference of a scalar function at chosen coordinates."""
    if h <= 0:
        raise ValueError("h must be positive")
    approx = np.empty(len(coords))
    for k, c in enumerate(coords):
        wp = w.copy()
        wp[c] += h
        wm = w.copy()
        wm[c] -= h
        approx[k] = (f(wp) - f(wm)) / (2.0 * h)
    return approx


def finite_diff_gradient(vec, arch, X, y, h: float = 1e-5, coords=None):
    """Central-difference MAE gradient at selected coordinates, dropout off."""
    if coords is None:
        coords = np.arange(len(vec))

    def loss_at(w):
        preds, _ = model_forward(w, arch, X, mode="eval")
        return float(np.mean(np.abs(preds - y)))

    return central_difference(loss_at, vec, coords, h)


@dataclass(frozen=True)
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def init(cls, size: int, lr: float = 1e-3):
        return cls(m=np.zeros(size), v=np.zeros(size), lr=lr)


def adam_step(opt: AdamState, params: np.ndarray, grad: np.ndarray):
    """One bias-corrected Adam update; returns (new state, new params)."""
    if grad.shape != params.shape or opt.m.shape != params.shape:
        raise ValueError("parameter/gradient/moment shapes differ")
    t = opt.step + 1
    m = opt.beta1 * opt.m + (1.0 - opt.beta1) * grad
    v = opt.beta2 * opt.v + (1.0 - opt.beta2) * grad * grad
    m_hat = m / (1.0 - opt.beta1**t)
    v_hat = v / (1.0 - opt.beta2**t)
    new_params = params - opt.lr * m_hat / (np.sqrt(v_hat) + opt.eps)
    return (
        AdamState(m=m, v=v, step=t, lr=opt.lr, beta1=opt.beta1, beta2=opt.beta2, eps=opt.eps),
        new_params,
    )


@dataclass(frozen=True)
class TrainConfig:
    batch: int = 70
    epochs: int = 65
    seed: int = 0
    shuffle: bool = True
    lr: float = 1e-3

    def __post_init__(self):
        if self.batch < 1 or self.epochs < 0:
            raise ValueError("batch must be >= 1 and epochs >= 0")


def train_local(params, arch: ArchSpec, ds, cfg: TrainConfig, prox_anchor=None, prox_mu: float = 0.0):
    """E epochs of shuffled mini-batch Adam on one client's split.

    A fresh optimizer state starts every call, so a local phase is a pure
    function of (params, data, config). The optional proximal term adds
    mu*(w - anchor) to each batch gradient with the anchor held fixed; with
    mu == 0 the arithmetic is bit-identical to plain training.
    """
    if len(ds.y) == 0:
        raise ValueError("empty training split")
    if prox_mu < 0:
        raise ValueError("prox_mu must be >= 0")
    vec = np.array(params, dtype=float, copy=True)
    opt = AdamState.init(len(vec), lr=cfg.lr)
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    n = len(ds.y)
    for _ in range(cfg.epochs):
        order = rng.permutation(n) if cfg.shuffle else np.arange(n)
        for s in range(0, n, cfg.batch):
            idx = order[s : s + cfg.batch]
            _, grad = batch_gradient(vec, arch, ds.X[idx], ds.y[idx], mode="train", rng=rng)
            if prox_mu != 0.0:
                grad = grad + prox_mu * (vec - prox_anchor)
            opt, vec = adam_step(opt, vec, grad)
    return vec
