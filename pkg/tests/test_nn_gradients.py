import math

import numpy as np
import pytest

from fedfleet.nn import (
    ArchSpec,
    batch_gradient,
    central_difference,
    finite_diff_gradient,
    init_model,
    predict,
)

REL_TOL = 1e-4


def perturbed_model(kind, seed=1, scale=0.3):
    arch = ArchSpec(kind=kind, window=5, hidden=(3, 3, 3), dropout=(0.0, 0.0))
    vec, part = init_model(arch, seed=seed)
    rng = np.random.default_rng(seed + 100)
    return arch, vec + rng.normal(scale=scale, size=vec.shape), rng


def relative_errors(analytic, approx):
    floor = np.full_like(approx, 1e-6)
    denom = np.maximum.reduce([np.abs(analytic), np.abs(approx), floor])
    return np.abs(analytic - approx) / denom


@pytest.mark.parametrize("kind", ["ann", "gru", "lstm"])
def test_bptt_matches_central_differences(kind):
    arch, vec, rng = perturbed_model(kind)
    X = rng.normal(size=(4, 5, 5))
    y = rng.normal(size=4)
    _, g = batch_gradient(vec, arch, X, y, mode="eval")
    coords = rng.choice(len(vec), size=25, replace=False)
    fd = finite_diff_gradient(vec, arch, X, y, h=1e-5, coords=coords)
    assert relative_errors(g[coords], fd).max() < REL_TOL


def test_central_difference_on_quadratic():
    f = lambda w: float(w[0] ** 2)
    approx = central_difference(f, np.array([3.0]), [0], 1e-5)
    assert abs(approx[0] - 6.0) < 1e-8


def test_truncation_error_ordering():
    # exp has non-vanishing third derivative, so h=1e-2 must be visibly worse
    f = lambda w: math.exp(w[0])
    w = np.array([1.0])
    coarse = abs(central_difference(f, w, [0], 1e-2)[0] - math.e)
    fine = abs(central_difference(f, w, [0], 1e-5)[0] - math.e)
    assert coarse > fine
    assert coarse > 1e-7 > fine


def test_zero_residual_batch_gives_zero_gradient():
    arch, vec, rng = perturbed_model("lstm")
    X = rng.normal(size=(6, 5, 5))
    labels = predict(vec, arch, X)  # exact fit by construction
    _, g = batch_gradient(vec, arch, X, labels, mode="eval")
    assert np.all(g == 0.0)


def test_gradient_depends_only_on_residual_sign():
    arch, vec, rng = perturbed_model("gru")
    X = rng.normal(size=(1, 5, 5))
    base = predict(vec, arch, X)
    _, g_small = batch_gradient(vec, arch, X, base - 1.0, mode="eval")
    _, g_large = batch_gradient(vec, arch, X, base - 100.0, mode="eval")
    assert (g_small == g_large).all()
    _, g_neg = batch_gradient(vec, arch, X, base + 5.0, mode="eval")
    assert (g_neg == -g_small).all()


def test_finite_diff_requires_positive_h():
    arch, vec, rng = perturbed_model("ann")
    with pytest.raises(ValueError):
        finite_diff_gradient(vec, arch, np.zeros((1, 5, 5)), np.zeros(1), h=0.0, coords=[0])
