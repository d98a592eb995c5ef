"""
Training schedules (two-stage anchor, iterative, simultaneous), optimizer,
evaluation and the forgetting protocol.
"""
from .evaluation import (
    CSV_COLUMNS,
    TARGETED,
    EvalJob,
    EvalRecord,
    ForgettingReport,
    PairScore,
    evaluate_grid,
    evaluate_pair,
    forgetting_eval,
    forgetting_labels,
    reconstruct,
    records_frame,
    select_snapshots,
)
from .loss import mse_loss
from .manifest import MANIFEST_NAME, RunManifest, SnapshotEntry
from .optim import AdamState, adam_step, named_grads
from .schedules import (
    LossRecord,
    Snapshot,
    TrainResult,
    freeze_encoder,
    pair_loss,
    simultaneous_loss,
    train_end_to_end,
    train_iterative,
    train_simultaneous,
    train_stage1,
    train_stage2_decoder,
    train_two_stage,
)

__all__ = [
    "AdamState",
    "CSV_COLUMNS",
    "EvalJob",
    "EvalRecord",
    "ForgettingReport",
    "LossRecord",
    "MANIFEST_NAME",
    "PairScore",
    "RunManifest",
    "Snapshot",
    "SnapshotEntry",
    "TARGETED",
    "TrainResult",
    "adam_step",
    "evaluate_grid",
    "evaluate_pair",
    "forgetting_eval",
    "forgetting_labels",
    "freeze_encoder",
    "mse_loss",
    "named_grads",
    "pair_loss",
    "reconstruct",
    "records_frame",
    "select_snapshots",
    "simultaneous_loss",
    "train_end_to_end",
    "train_iterative",
    "train_simultaneous",
    "train_stage1",
    "train_stage2_decoder",
    "train_two_stage",
]
