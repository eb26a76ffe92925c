"""The historical-inertia baseline and the positional-encoding ablation
harness: spatial encoding absolute / relative (station-index table) / none,
temporal encoding absolute / none.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .data import ObservationSet, split_windows
from .errors import ConfigError
from .model import ModelConfig, ModelParams, init_params, normalize_coords
from .training import Metrics, MetricAccumulator, TrainConfig, _batches, evaluate, fit

# Ablation rows in reporting order: each tuple is (spatial, temporal).
ABLATION_GRID = [
    ("none", "absolute"),
    ("absolute", "none"),
    ("relative", "absolute"),
    ("absolute", "absolute"),
]


@dataclass(frozen=True)
class AblationSpec:
    spatial: str  # absolute | relative | none
    temporal: str  # absolute | none


def hi_forecast(history: np.ndarray, t_f: int) -> np.ndarray:
    """Copy the most recent t_f steps forward as the forecast.

    Accepts [T_h, N, C] or a batch [B, T_h, N, C]; the time axis is the
    one with length T_h.
    """
    history = np.asarray(history, dtype=np.float64)
    axis = 0 if history.ndim == 3 else 1
    t_h = history.shape[axis]
    if t_f > t_h:
        raise ConfigError(f"hi_forecast needs T_f <= T_h, got {t_f} > {t_h}")
    if axis == 0:
        return history[t_h - t_f :].copy()
    return history[:, t_h - t_f :].copy()


def evaluate_hi(windows, batch_size: int = 32) -> Metrics:
    """Pooled HI metrics over a window set, in original data units."""
    if len(windows) == 0:
        raise ConfigError("empty split: no windows for the HI baseline")
    acc = MetricAccumulator()
    for idx in _batches(len(windows), batch_size):
        b = windows.batch(idx)
        hist_steps = windows.starts[idx][:, None] + np.arange(windows.t_h)
        raw_history = windows.raw_values[hist_steps]
        acc.add(hi_forecast(raw_history, windows.t_f), b["future_raw"])
    return acc.result()


def build_variant(spec: AblationSpec, config: ModelConfig, seed: int) -> ModelParams:
    """Instantiate the configured encoding variant.

    (absolute, absolute) reproduces the base model exactly; "none" drops
    the corresponding term from the additive fusion; relative spatial
    replaces the coordinate layer with a learnable station-index table.
    """
    variant = replace(
        config, spatial_encoding=spec.spatial, temporal_encoding=spec.temporal
    )
    variant.validate()
    return init_params(variant, seed)


def run_ablation_suite(
    obs: ObservationSet,
    config: ModelConfig,
    train_config: TrainConfig,
    seeds: list[int],
    normalize: bool = True,
) -> list[dict]:
    """Train every encoding variant for every seed; report test metrics.

    Returns one row per (spatial, temporal, seed) with test MSE/MAE in
    original units. Failures are re-raised annotated with the variant.
    """
    if len(seeds) < 3:
        raise ConfigError(f"ablation needs >= 3 seeds, got {len(seeds)}")
    base = replace(config, n_stations=obs.n_stations, n_vars=obs.n_vars)
    prepared = split_windows(obs, base.t_h, base.t_f, normalize=normalize)
    coords_norm = normalize_coords(obs.coords)
    rows = []
    for spatial, temporal in ABLATION_GRID:
        spec = AblationSpec(spatial=spatial, temporal=temporal)
        for seed in seeds:
            try:
                params = build_variant(spec, base, seed)
                result = fit(
                    params,
                    prepared.train,
                    prepared.val,
                    coords_norm,
                    replace(train_config, seed=seed),
                    prepared.normalizer,
                )
                metrics = evaluate(
                    result.params,
                    prepared.test,
                    coords_norm,
                    prepared.normalizer,
                    train_config.batch_size,
                )
            except Exception as exc:
                raise type(exc)(
                    f"[spatial={spatial}, temporal={temporal}, seed={seed}] {exc}"
                ) from exc
            rows.append(
                {
                    "spatial": spatial,
                    "temporal": temporal,
                    "seed": seed,
                    "mse": metrics.mse,
                    "mae": metrics.mae,
                }
            )
    return rows


def summarize_ablation(rows: list[dict]) -> list[dict]:
    """Mean MSE/MAE per variant, in ABLATION_GRID order."""
    out = []
    for spatial, temporal in ABLATION_GRID:
        sub = [r for r in rows if r["spatial"] == spatial and r["temporal"] == temporal]
        if not sub:
            continue
        out.append(
            {
                "spatial": spatial,
                "temporal": temporal,
                "mse": float(np.mean([r["mse"] for r in sub])),
                "mae": float(np.mean([r["mae"] for r in sub])),
                "n_seeds": len(sub),
            }
        )
    return out
