import numpy as np
import pytest

from fedfleet.errors import CheckpointError, PartitionError
from fedfleet.nn import (
    ArchSpec,
    apply_dropout,
    build_partition,
    flatten,
    forward,
    init_model,
    load_checkpoint,
    mae_loss,
    model_forward,
    save_checkpoint,
    unflatten,
)


def test_arch_validation():
    with pytest.raises(ValueError):
        ArchSpec(kind="cnn")
    with pytest.raises(ValueError):
        ArchSpec(kind="ann", hidden=(40, 32, 16), dropout=(0.1,))
    with pytest.raises(ValueError):
        ArchSpec(kind="ann", dropout=(0.1, 1.0))


def test_ann_parameter_count():
    arch = ArchSpec(kind="ann")  # 60x5 flattened input
    part = build_partition(arch)
    assert part.total == 300 * 40 + 40 + 40 * 32 + 32 + 32 * 16 + 16 + 16 * 1 + 1
    assert part.total == 13897


def test_lstm_parameter_counts():
    part = build_partition(ArchSpec(kind="lstm"))
    first = part.segment("lstm1.W").size + part.segment("lstm1.b").size
    assert first == 4 * 40 * (5 + 40) + 4 * 40 == 7360
    assert part.total == 19857


def test_partition_tiles_exactly():
    for kind in ("ann", "gru", "lstm"):
        part = build_partition(ArchSpec(kind=kind))
        off = 0
        for seg in part.segments:
            assert seg.offset == off
            off += seg.size
        assert off == part.total


def test_init_is_deterministic():
    arch = ArchSpec(kind="gru")
    a, _ = init_model(arch, 9)
    b, _ = init_model(arch, 9)
    assert (a == b).all()
    c, _ = init_model(arch, 10)
    assert not (a == c).all()


def test_lstm_forget_bias_is_one():
    arch = ArchSpec(kind="lstm")
    vec, part = init_model(arch, 0)
    views = part.views(vec)
    for i, h in enumerate(arch.hidden, start=1):
        b = views[f"lstm{i}.b"]
        assert (b[h : 2 * h] == 1.0).all()
        assert (b[:h] == 0.0).all() and (b[2 * h :] == 0.0).all()
    assert (views["out.b"] == 0.0).all()


def test_flatten_unflatten_round_trip():
    arch = ArchSpec(kind="lstm", window=7, hidden=(4, 3, 2), dropout=(0.1, 0.2))
    vec, part = init_model(arch, 3)
    named = unflatten(vec, part)
    back = flatten(named, part)
    assert back.tobytes() == vec.tobytes()
    named.pop("out.b")
    with pytest.raises(PartitionError):
        flatten(named, part)


def test_zero_model_predicts_zero():
    rng = np.random.default_rng(0)
    for kind in ("ann", "gru", "lstm"):
        arch = ArchSpec(kind=kind, window=6, hidden=(3, 3, 3), dropout=(0.1, 0.2))
        part = build_partition(arch)
        vec = np.zeros(part.total)
        X = rng.normal(size=(3, 6, 5))
        preds, _ = model_forward(vec, arch, X, mode="eval")
        assert (preds == 0.0).all()


def test_eval_forward_is_deterministic():
    rng = np.random.default_rng(1)
    arch = ArchSpec(kind="lstm", window=6, hidden=(4, 3, 2), dropout=(0.3, 0.3))
    vec, _ = init_model(arch, 2)
    w = rng.normal(size=(6, 5))
    assert forward(vec, arch, w, mode="eval") == forward(vec, arch, w, mode="eval")


def test_train_mode_requires_rng_when_dropping():
    arch = ArchSpec(kind="ann", window=6, hidden=(3, 3, 3), dropout=(0.5, 0.5))
    vec, _ = init_model(arch, 2)
    with pytest.raises(ValueError):
        model_forward(vec, arch, np.zeros((2, 6, 5)), mode="train")


def test_forward_rejects_shape_mismatch():
    arch = ArchSpec(kind="ann", window=6, hidden=(3, 3, 3), dropout=(0.0, 0.0))
    vec, _ = init_model(arch, 2)
    with pytest.raises(ValueError):
        model_forward(vec, arch, np.zeros((2, 5, 5)))


def test_dropout_monte_carlo_expectation():
    rng = np.random.default_rng(7)
    x = rng.normal(size=50) + 3.0
    acc = np.zeros_like(x)
    draws = 10_000
    for _ in range(draws):
        dropped, _ = apply_dropout(x, 0.5, rng)
        acc += dropped
    mean = acc / draws
    rel = np.linalg.norm(mean - x) / np.linalg.norm(x)
    assert rel < 0.02


def test_dropout_mask_scale():
    rng = np.random.default_rng(8)
    x = np.ones(1000)
    dropped, mask = apply_dropout(x, 0.25, rng)
    kept = dropped[dropped != 0.0]
    assert np.allclose(kept, 1.0 / 0.75)
    assert (dropped == x * mask).all()


def test_dropout_zero_rate_is_identity():
    x = np.arange(5.0)
    out, mask = apply_dropout(x, 0.0, rng=None)
    assert out is x and mask is None


def test_mae_loss_cases():
    assert mae_loss([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert mae_loss([0.0], [3.0]) == 3.0
    assert mae_loss([1.0, 3.0], [2.0, 5.0]) == 1.5
    with pytest.raises(ValueError):
        mae_loss([], [])
    with pytest.raises(ValueError):
        mae_loss([1.0], [1.0, 2.0])


def test_checkpoint_round_trip(tmp_path):
    arch = ArchSpec(kind="lstm", window=9, hidden=(5, 4, 3), dropout=(0.1, 0.2))
    vec, part = init_model(arch, 11)
    vec += np.random.default_rng(0).normal(size=vec.shape)
    p = tmp_path / "model.ckpt"
    save_checkpoint(p, vec, arch, meta={"round": 3, "algorithm": "avg"})
    vec2, arch2, part2, meta = load_checkpoint(p)
    assert vec2.tobytes() == vec.tobytes()
    assert arch2 == arch
    assert part2.names() == part.names()
    assert meta == {"round": 3, "algorithm": "avg"}


def test_checkpoint_rejects_garbage(tmp_path):
    p = tmp_path / "junk.ckpt"
    p.write_bytes(b"NOPE" + b"\x00" * 32)
    with pytest.raises(CheckpointError):
        load_checkpoint(p)


def test_checkpoint_rejects_future_version(tmp_path):
    arch = ArchSpec(kind="ann", window=5, hidden=(2, 2, 2), dropout=(0.0, 0.0))
    vec, _ = init_model(arch, 0)
    p = tmp_path / "m.ckpt"
    save_checkpoint(p, vec, arch)
    raw = bytearray(p.read_bytes())
    raw[4] = 99
    p.write_bytes(bytes(raw))
    with pytest.raises(CheckpointError):
        load_checkpoint(p)
