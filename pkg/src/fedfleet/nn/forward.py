"""Batched forward passes with caches sized for backpropagation.

Recurrent layers precompute the input-side affine term for all timesteps in
one matmul and only loop over time for the recurrent half, which keeps the
1 Hz window length affordable in plain numpy. Caches hold every
post-nonlinearity activation the backward pass needs.
"""

from __future__ import annotations

import numpy as np

from .arch import ArchSpec, build_partition


def _sigmoid(x):
    # split by sign to stay overflow-free in float64
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def apply_dropout(x: np.ndarray, p: float, rng):
    """Inverted dropout: zero with probability p, scale survivors by 1/(1-p).

    Returns (dropped, mask); the mask already carries the 1/(1-p) factor so
    the backward pass is a plain elementwise product. Expectation over masks
    equals the input, which is what keeps the eval path untouched.
    """
    if p <= 0.0:
        return x, None
    mask = (rng.random(x.shape) >= p) / (1.0 - p)
    return x * mask, mask


def _lstm_layer(X_in, W, b, h):
    B, m, _ = X_in.shape
    d = X_in.shape[2]
    Zx = X_in.reshape(B * m, d) @ W[:d] + b
    Zx = Zx.reshape(B, m, 4 * h)
    Wh = W[d:]
    I = np.empty((B, m, h))
    F = np.empty((B, m, h))
    Gg = np.empty((B, m, h))
    O = np.empty((B, m, h))
    C = np.empty((B, m, h))
    TC = np.empty((B, m, h))  # tanh(c)
    H = np.empty((B, m, h))
    h_prev = np.zeros((B, h))
    c_prev = np.zeros((B, h))
    for t in range(m):
        a = Zx[:, t] + h_prev @ Wh
        i = _sigmoid(a[:, :h])
        f = _sigmoid(a[:, h : 2 * h])
        g = np.tanh(a[:, 2 * h : 3 * h])
        o = _sigmoid(a[:, 3 * h :])
        c = f * c_prev + i * g
        tc = np.tanh(c)
        hh = o * tc
        I[:, t], F[:, t], Gg[:, t], O[:, t] = i, f, g, o
        C[:, t], TC[:, t], H[:, t] = c, tc, hh
        h_prev, c_prev = hh, c
    return H, {"X": X_in, "I": I, "F": F, "G": Gg, "O": O, "C": C, "TC": TC, "H": H}


def _gru_layer(X_in, W, b, h):
    B, m, d = X_in.shape
    Zx = X_in.reshape(B * m, d) @ W[:d] + b
    Zx = Zx.reshape(B, m, 3 * h)
    Wh = W[d:]
    R = np.empty((B, m, h))
    Z = np.empty((B, m, h))
    N = np.empty((B, m, h))
    RH = np.empty((B, m, h))  # r * h_prev, reused by the weight gradient
    H = np.empty((B, m, h))
    h_prev = np.zeros((B, h))
    for t in range(m):
        rz = Zx[:, t, : 2 * h] + h_prev @ Wh[:, : 2 * h]
        r = _sigmoid(rz[:, :h])
        z = _sigmoid(rz[:, h:])
        rh = r * h_prev
        n = np.tanh(Zx[:, t, 2 * h :] + rh @ Wh[:, 2 * h :])
        hh = (1.0 - z) * n + z * h_prev
        R[:, t], Z[:, t], N[:, t], RH[:, t], H[:, t] = r, z, n, rh, hh
        h_prev = hh
    return H, {"X": X_in, "R": R, "Z": Z, "N": N, "RH": RH, "H": H}


def model_forward(vec: np.ndarray, arch: ArchSpec, X: np.ndarray, mode: str = "eval", rng=None):
    """Run a batch of windows through the network.

    X: (B, m, input_dim). Returns (predictions (B,), cache). In train mode
    the inter-layer dropout masks are drawn from rng (layer order, low to
    high) and stored in the cache for the paired backward pass.
    """
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be train or eval, not {mode!r}")
    if X.ndim != 3 or X.shape[1] != arch.window or X.shape[2] != arch.input_dim:
        raise ValueError(f"window batch shape {X.shape} does not match arch {arch.window}x{arch.input_dim}")
    if mode == "train" and rng is None and any(p > 0 for p in arch.dropout):
        raise ValueError("train mode with dropout needs an rng")
    part = build_partition(arch)
    views = part.views(vec)
    prefix = arch.layer_prefix
    layers = []
    masks = []

    if arch.kind == "ann":
        cur = X.reshape(X.shape[0], arch.window * arch.input_dim)
        for i, h in enumerate(arch.hidden, start=1):
            z = cur @ views[f"{prefix}{i}.W"] + views[f"{prefix}{i}.b"]
            act = np.tanh(z)
            layers.append({"X": cur, "H": act})
            if i <= len(arch.dropout):
                if mode == "train":
                    cur, mk = apply_dropout(act, arch.dropout[i - 1], rng)
                else:
                    cur, mk = act, None
                masks.append(mk)
            else:
                cur = act
        last = cur
    else:
        step = _lstm_layer if arch.kind == "lstm" else _gru_layer
        cur = X
        for i, h in enumerate(arch.hidden, start=1):
            H, cache = step(cur, views[f"{prefix}{i}.W"], views[f"{prefix}{i}.b"], h)
            layers.append(cache)
            if i <= len(arch.dropout):
                if mode == "train":
                    cur, mk = apply_dropout(H, arch.dropout[i - 1], rng)
                else:
                    cur, mk = H, None
                masks.append(mk)
            else:
                cur = H
        last = cur[:, -1, :]  # final timestep of the top recurrent layer

    preds = (last @ views["out.W"] + views["out.b"]).ravel()
    cache = {"layers": layers, "masks": masks, "last": last, "part": part, "views": views}
    return preds, cache


def forward(vec, arch, window: np.ndarray, mode: str = "eval", rng=None) -> float:
    """Single-window convenience wrapper; returns the scalar prediction (Wh)."""
    preds, _ = model_forward(vec, arch, window[None, :, :], mode=mode, rng=rng)
    return float(preds[0])
