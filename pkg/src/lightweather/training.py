"""Mini-batch training with mean-absolute-error loss and Adam, validation
early stopping, streaming MSE/MAE evaluation in original data units, and
the training-history CSV.

Determinism contract: with a fixed config and seed, batch order, every
update, and the resulting best checkpoint are all reproducible exactly.
The only non-reproducible history column is the per-epoch wall time.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass

import numpy as np

from .data import Normalizer, WindowSet, normalize_invert
from .errors import ConfigError, EvaluationError, TrainingError
from .model import ModelParams, loss_and_grads
from .numerics import AdamState, adam_step
from . import model as model_ops

HISTORY_HEADER = ["epoch", "train_mae", "val_mae", "val_mse", "seconds"]


@dataclass
class TrainConfig:
    lr: float = 5e-4
    batch_size: int = 32
    max_epochs: int = 100
    patience: int = 5
    seed: int = 0

    def validate(self) -> None:
        if self.lr < 0:
            raise ConfigError(f"lr must be >= 0, got {self.lr}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.max_epochs < 1:
            raise ConfigError(f"max_epochs must be >= 1, got {self.max_epochs}")
        if not 1 <= self.patience <= self.max_epochs:
            raise ConfigError(
                f"patience {self.patience} must be in [1, max_epochs={self.max_epochs}]"
            )


@dataclass
class Metrics:
    mse: float
    mae: float
    n_points: int


class MetricAccumulator:
    """Streaming pooled MSE/MAE; agrees with a one-pass computation."""

    def __init__(self):
        self.sum_sq = 0.0
        self.sum_abs = 0.0
        self.n = 0

    def add(self, pred: np.ndarray, truth: np.ndarray) -> None:
        diff = np.asarray(pred, dtype=np.float64) - np.asarray(truth, dtype=np.float64)
        self.sum_sq += float((diff * diff).sum())
        self.sum_abs += float(np.abs(diff).sum())
        self.n += diff.size

    def result(self) -> Metrics:
        if self.n == 0:
            raise EvaluationError("no points accumulated")
        return Metrics(mse=self.sum_sq / self.n, mae=self.sum_abs / self.n, n_points=self.n)


def mae_loss(pred: np.ndarray, truth: np.ndarray) -> float:
    """Mean of |pred - truth| over all T_f * N * C entries."""
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape:
        raise ConfigError(f"pred shape {pred.shape} != truth shape {truth.shape}")
    return float(np.abs(pred - truth).mean())


def _batches(n: int, batch_size: int, perm: np.ndarray | None = None):
    order = perm if perm is not None else np.arange(n)
    for lo in range(0, n, batch_size):
        yield order[lo : lo + batch_size]


def evaluate(
    params: ModelParams,
    windows: WindowSet,
    coords_norm: np.ndarray,
    normalizer: Normalizer | None,
    batch_size: int = 32,
) -> Metrics:
    """Pooled test metrics in original data units."""
    if len(windows) == 0:
        raise EvaluationError("empty split: no windows to evaluate")
    acc = MetricAccumulator()
    for idx in _batches(len(windows), batch_size):
        b = windows.batch(idx)
        pred, _ = model_ops.forward_batch(
            b["history"], coords_norm, b["hours"], b["days"], b["months"], params
        )
        if normalizer is not None:
            pred = normalize_invert(pred, normalizer)
        acc.add(pred, b["future_raw"])
    return acc.result()


@dataclass
class FitResult:
    params: ModelParams  # best-validation checkpoint
    history: list[dict]
    best_epoch: int
    best_val_mae: float


def fit(
    params: ModelParams,
    train_windows: WindowSet,
    val_windows: WindowSet,
    coords_norm: np.ndarray,
    config: TrainConfig,
    normalizer: Normalizer | None = None,
) -> FitResult:
    """Epochs of seeded shuffled mini-batches; returns the best-val params.

    Per-batch gradients are averages over the batch's windows. Validation
    MAE (original units) drives early stopping: training stops after
    `patience` epochs without strict improvement or at max_epochs.
    """
    config.validate()
    if len(train_windows) == 0 or len(val_windows) == 0:
        raise ConfigError("train and val splits must both contain windows")

    states = {
        name: AdamState.zeros_like(arr) for name, arr in params.named_tensors()
    }
    best_params = params.copy()
    best_val = np.inf
    best_epoch = -1
    epochs_since_best = 0
    history: list[dict] = []

    for epoch in range(config.max_epochs):
        t0 = time.perf_counter()
        perm = np.random.default_rng([config.seed, epoch]).permutation(
            len(train_windows)
        )
        abs_err_sum = 0.0
        n_samples = 0
        for bi, idx in enumerate(_batches(len(train_windows), config.batch_size, perm)):
            b = train_windows.batch(idx)
            loss, grads = loss_and_grads(
                params,
                b["history"],
                b["future"],
                coords_norm,
                b["hours"],
                b["days"],
                b["months"],
            )
            if not np.isfinite(loss):
                raise TrainingError(
                    f"non-finite loss at epoch {epoch}, batch {bi}"
                )
            for name, tensor in params.named_tensors():
                params.set_tensor(
                    name, adam_step(tensor, grads[name], states[name], config.lr, name)
                )
            abs_err_sum += loss * len(idx)
            n_samples += len(idx)

        val_metrics = evaluate(
            params, val_windows, coords_norm, normalizer, config.batch_size
        )
        seconds = time.perf_counter() - t0
        history.append(
            {
                "epoch": epoch,
                "train_mae": abs_err_sum / n_samples,
                "val_mae": val_metrics.mae,
                "val_mse": val_metrics.mse,
                "seconds": seconds,
            }
        )
        if val_metrics.mae < best_val:
            best_val = val_metrics.mae
            best_epoch = epoch
            best_params = params.copy()
            epochs_since_best = 0
        else:
            epochs_since_best += 1
            if epochs_since_best >= config.patience:
                break

    return FitResult(
        params=best_params,
        history=history,
        best_epoch=best_epoch,
        best_val_mae=float(best_val),
    )


def write_history_csv(path, history: list[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(HISTORY_HEADER)
        for row in history:
            writer.writerow(
                [
                    row["epoch"],
                    repr(float(row["train_mae"])),
                    repr(float(row["val_mae"])),
                    repr(float(row["val_mse"])),
                    f"{row['seconds']:.3f}",
                ]
            )
