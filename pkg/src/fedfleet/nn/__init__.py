from .arch import (
    ArchSpec,
    LayerPartition,
    Segment,
    build_partition,
    flatten,
    init_model,
    unflatten,
)
from .checkpoint import load_checkpoint, save_checkpoint
from .forward import apply_dropout, forward, model_forward
from .train import (
    AdamState,
    TrainConfig,
    adam_step,
    backward,
    batch_gradient,
    central_difference,
    evaluate,
    finite_diff_gradient,
    full_batch_gradient,
    mae_loss,
    predict,
    train_local,
)

__all__ = [
    "ArchSpec",
    "LayerPartition",
    "Segment",
    "build_partition",
    "flatten",
    "init_model",
    "unflatten",
    "load_checkpoint",
    "save_checkpoint",
    "apply_dropout",
    "forward",
    "model_forward",
    "AdamState",
    "TrainConfig",
    "adam_step",
    "backward",
    "batch_gradient",
    "central_difference",
    "evaluate",
    "finite_diff_gradient",
    "full_batch_gradient",
    "mae_loss",
    "predict",
    "train_local",
]
