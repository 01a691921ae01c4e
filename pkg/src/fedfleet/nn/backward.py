"""Backpropagation (through time, for the recurrent kinds).

Each layer's backward mirrors the cache layout of its forward. The
per-timestep loop only carries the recurrent part; input-side weight and
input gradients collapse into whole-sequence matmuls afterwards.
"""

from __future__ import annotations

import numpy as np

from .arch import ArchSpec


def _lstm_layer_backward(cache, W, dH_seq):
    X_in = cache["X"]
    B, m, d = X_in.shape
    H = cache["H"]
    h = H.shape[2]
    Wh = W[d:]
    I, F, Gg, O, C, TC = cache["I"], cache["F"], cache["G"], cache["O"], cache["C"], cache["TC"]
    dA = np.empty((B, m, 4 * h))
    dh_carry = np.zeros((B, h))
    dc_carry = np.zeros((B, h))
    for t in range(m - 1, -1, -1):
        dh = dH_seq[:, t] + dh_carry
        i, f, g, o, tc = I[:, t], F[:, t], Gg[:, t], O[:, t], TC[:, t]
        do = dh * tc
        dc = dc_carry + dh * o * (1.0 - tc * tc)
        c_prev = C[:, t - 1] if t > 0 else 0.0
        da = dA[:, t]
        da[:, :h] = (dc * g) * i * (1.0 - i)
        da[:, h : 2 * h] = (dc * c_prev) * f * (1.0 - f)
        da[:, 2 * h : 3 * h] = (dc * i) * (1.0 - g * g)
        da[:, 3 * h :] = do * o * (1.0 - o)
        dc_carry = dc * f
        dh_carry = da @ Wh.T
    dA2 = dA.reshape(B * m, 4 * h)
    X2 = X_in.reshape(B * m, d)
    Hprev = np.zeros_like(H)
    Hprev[:, 1:] = H[:, :-1]
    dW = np.empty_like(W)
    dW[:d] = X2.T @ dA2
    dW[d:] = Hprev.reshape(B * m, h).T @ dA2
    db = dA2.sum(axis=0)
    dX = (dA2 @ W[:d].T).reshape(B, m, d)
    return dX, dW, db


def _gru_layer_backward(cache, W, dH_seq):
    X_in = cache["X"]
    B, m, d = X_in.shape
    H = cache["H"]
    h = H.shape[2]
    Wh = W[d:]
    R, Z, N, RH = cache["R"], cache["Z"], cache["N"], cache["RH"]
    dA = np.empty((B, m, 3 * h))
    dh_carry = np.zeros((B, h))
    for t in range(m - 1, -1, -1):
        dh = dH_seq[:, t] + dh_carry
        r, z, n = R[:, t], Z[:, t], N[:, t]
        h_prev = H[:, t - 1] if t > 0 else np.zeros((B, h))
        dan = (dh * (1.0 - z)) * (1.0 - n * n)
        dRH = dan @ Wh[:, 2 * h :].T
        da = dA[:, t]
        da[:, :h] = (dRH * h_prev) * r * (1.0 - r)
        da[:, h : 2 * h] = (dh * (h_prev - n)) * z * (1.0 - z)
        da[:, 2 * h :] = dan
        dh_carry = dh * z + dRH * r + da[:, : 2 * h] @ Wh[:, : 2 * h].T
    dA2 = dA.reshape(B * m, 3 * h)
    X2 = X_in.reshape(B * m, d)
    Hprev = np.zeros_like(H)
    Hprev[:, 1:] = H[:, :-1]
    dW = np.empty_like(W)
    dW[:d] = X2.T @ dA2
    dW[d:, : 2 * h] = Hprev.reshape(B * m, h).T @ dA2[:, : 2 * h]
    dW[d:, 2 * h :] = RH.reshape(B * m, h).T @ dA2[:, 2 * h :]
    db = dA2.sum(axis=0)
    dX = (dA2 @ W[:d].T).reshape(B, m, d)
    return dX, dW, db


def model_backward(vec: np.ndarray, arch: ArchSpec, cache, dpreds: np.ndarray) -> np.ndarray:
    """Gradient of sum(dpreds * preds) wrt the flat parameter vector.

    dpreds already contains the loss derivative per prediction, so MAE,
    squared error, or any other per-sample loss plugs in the same way.
    """
    part = cache["part"]
    views = cache["views"]
    grad = np.zeros(part.total)
    gviews = part.views(grad)
    prefix = arch.layer_prefix
    layers = cache["layers"]
    masks = cache["masks"]
    n_layers = len(arch.hidden)

    last = cache["last"]
    gviews["out.W"][:] = last.T @ dpreds[:, None]
    gviews["out.b"][:] = dpreds.sum()
    dlast = dpreds[:, None] @ views["out.W"].T  # (B, h_top)

    if arch.kind == "ann":
        d_up = dlast
        for i in range(n_layers, 0, -1):
            lc = layers[i - 1]
            dz = d_up * (1.0 - lc["H"] * lc["H"])
            gviews[f"{prefix}{i}.W"][:] = lc["X"].T @ dz
            gviews[f"{prefix}{i}.b"][:] = dz.sum(axis=0)
            if i > 1:
                d_up = dz @ views[f"{prefix}{i}.W"].T
                mk = masks[i - 2]
                if mk is not None:
                    d_up = d_up * mk
        return grad

    layer_backward = _lstm_layer_backward if arch.kind == "lstm" else _gru_layer_backward
    B, m = layers[-1]["H"].shape[0], layers[-1]["H"].shape[1]
    dH = np.zeros_like(layers[-1]["H"])
    dH[:, -1] = dlast
    for i in range(n_layers, 0, -1):
        W = views[f"{prefix}{i}.W"]
        dX, dW, db = layer_backward(layers[i - 1], W, dH)
        gviews[f"{prefix}{i}.W"][:] = dW
        gviews[f"{prefix}{i}.b"][:] = db
        if i > 1:
            mk = masks[i - 2]
            dH = dX * mk if mk is not None else dX
    return grad
