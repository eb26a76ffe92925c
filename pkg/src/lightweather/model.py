"""The forecasting network: per-series data embedding, absolute spatial and
temporal encodings fused by addition, a residual MLP encoder, and a linear
regression head.

Every (station, variable) series is processed independently by shared
weights; spatial information enters only through the coordinate encoding,
so the parameter count does not depend on the station count. The forward
pass follows the sequence transpose -> embed -> encode -> regress ->
transpose, vectorized over all (window, station, variable) rows of a batch.

Variants used by the ablation harness are expressed through ModelConfig:
spatial_encoding may be "absolute" (a 3 -> d layer over normalized
lat/lon/elevation), "relative" (a learnable station-index table), or
"none"; temporal_encoding may be "absolute" (hour/day/month tables) or
"none".
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime

import numpy as np

from .errors import ConfigError, ShapeError, ValidationError
from .numerics import (
    LinearLayer,
    linear_backward,
    linear_forward,
    relu,
    relu_backward,
)

SPATIAL_MODES = ("absolute", "relative", "none")
TEMPORAL_MODES = ("absolute", "none")

HOURS_PER_DAY = 24
DAYS_PER_MONTH = 31
MONTHS_PER_YEAR = 12


@dataclass
class ModelConfig:
    """Dimensions and encoding variant of one model instance."""

    d: int = 64
    n_layers: int = 2
    t_h: int = 48
    t_f: int = 24
    n_vars: int = 1
    spatial_encoding: str = "absolute"
    temporal_encoding: str = "absolute"
    n_stations: int | None = None  # required only for relative spatial encoding

    def validate(self) -> None:
        for name in ("d", "n_layers", "t_h", "t_f", "n_vars"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.spatial_encoding not in SPATIAL_MODES:
            raise ConfigError(f"unknown spatial_encoding {self.spatial_encoding!r}")
        if self.temporal_encoding not in TEMPORAL_MODES:
            raise ConfigError(f"unknown temporal_encoding {self.temporal_encoding!r}")
        if self.spatial_encoding == "relative" and not self.n_stations:
            raise ConfigError("relative spatial encoding requires n_stations")


@dataclass(frozen=True)
class TimeFeature:
    """Calendar features of one forecast start step."""

    hour: int
    day_index: int  # day of month - 1
    month_index: int  # month - 1

    def __post_init__(self):
        if not 0 <= self.hour < HOURS_PER_DAY:
            raise ValidationError(f"hour {self.hour} outside [0, 24)")
        if not 0 <= self.day_index < DAYS_PER_MONTH:
            raise ValidationError(f"day_index {self.day_index} outside [0, 31)")
        if not 0 <= self.month_index < MONTHS_PER_YEAR:
            raise ValidationError(f"month_index {self.month_index} outside [0, 12)")

    @classmethod
    def from_timestamp(cls, ts: datetime) -> "TimeFeature":
        return cls(hour=ts.hour, day_index=ts.day - 1, month_index=ts.month - 1)


@dataclass(frozen=True)
class StationCoord:
    """Geographic position of one station (degrees, degrees, meters)."""

    latitude: float
    longitude: float
    elevation: float

    def validate(self) -> None:
        if not -90.0 <= self.latitude <= 90.0:
            raise ValidationError(f"latitude {self.latitude} outside [-90, 90]")
        if not -180.0 <= self.longitude <= 180.0:
            raise ValidationError(f"longitude {self.longitude} outside [-180, 180]")
        if not np.isfinite(self.elevation):
            raise ValidationError(f"elevation {self.elevation} is not finite")


def coord_matrix(coords: list[StationCoord]) -> np.ndarray:
    """Stack coordinates into a raw [N, 3] (lat, lon, elev) array."""
    return np.array(
        [[c.latitude, c.longitude, c.elevation] for c in coords], dtype=np.float64
    ).reshape(len(coords), 3)


def normalize_coords(coords) -> np.ndarray:
    """Map (lat, lon, elev) to O(1) inputs: lat/90, lon/180, elev/10000.

    Accepts a list of StationCoord (validated) or a raw [N, 3] array.
    """
    if len(coords) and isinstance(coords[0], StationCoord):
        for c in coords:
            c.validate()
        raw = coord_matrix(coords)
    else:
        raw = np.asarray(coords, dtype=np.float64).reshape(-1, 3)
    return raw / np.array([90.0, 180.0, 10000.0])


@dataclass
class EncoderLayer:
    fc1: LinearLayer
    fc2: LinearLayer


@dataclass
class ModelParams:
    """Every learnable tensor of the network, addressable by name."""

    config: ModelConfig
    fc_embed: LinearLayer
    fc_regress: LinearLayer
    encoder: list[EncoderLayer]
    fc_spatial: LinearLayer | None = None
    station_table: np.ndarray | None = None
    table_hour: np.ndarray | None = None
    table_day: np.ndarray | None = None
    table_month: np.ndarray | None = None

    def named_tensors(self) -> list[tuple[str, np.ndarray]]:
        """Canonical (name, array) list; also the checkpoint manifest order."""
        out = [
            ("fc_embed.weight", self.fc_embed.weight),
            ("fc_embed.bias", self.fc_embed.bias),
        ]
        if self.fc_spatial is not None:
            out.append(("fc_spatial.weight", self.fc_spatial.weight))
            out.append(("fc_spatial.bias", self.fc_spatial.bias))
        if self.station_table is not None:
            out.append(("station_table", self.station_table))
        if self.table_hour is not None:
            out.append(("table_hour", self.table_hour))
            out.append(("table_day", self.table_day))
            out.append(("table_month", self.table_month))
        for i, layer in enumerate(self.encoder):
            out.append((f"encoder.{i}.fc1.weight", layer.fc1.weight))
            out.append((f"encoder.{i}.fc1.bias", layer.fc1.bias))
            out.append((f"encoder.{i}.fc2.weight", layer.fc2.weight))
            out.append((f"encoder.{i}.fc2.bias", layer.fc2.bias))
        out.append(("fc_regress.weight", self.fc_regress.weight))
        out.append(("fc_regress.bias", self.fc_regress.bias))
        return out

    def set_tensor(self, name: str, value: np.ndarray) -> None:
        value = np.ascontiguousarray(value, dtype=np.float64)
        if name == "station_table":
            self.station_table = value
            return
        if name in ("table_hour", "table_day", "table_month"):
            setattr(self, name, value)
            return
        parts = name.split(".")
        if parts[0] == "encoder":
            layer = getattr(self.encoder[int(parts[1])], parts[2])
            setattr(layer, parts[3], value)
            return
        if parts[0] in ("fc_embed", "fc_spatial", "fc_regress") and len(parts) == 2:
            setattr(getattr(self, parts[0]), parts[1], value)
            return
        raise KeyError(f"unknown tensor name {name!r}")

    def copy(self) -> "ModelParams":
        clone = init_params(self.config, seed=0)
        for name, arr in self.named_tensors():
            clone.set_tensor(name, arr.copy())
        return clone

    def n_params(self) -> int:
        return sum(arr.size for _, arr in self.named_tensors())


def parameter_count(config: ModelConfig) -> int:
    """Exact enumerated parameter count for the configured variant.

    For the base (absolute/absolute) variant this is
    d(T_h+1) + 4d + 67d + 2*L*d*(d+1) + T_f(d+1).
    """
    config.validate()
    d = config.d
    n = d * (config.t_h + 1)
    if config.spatial_encoding == "absolute":
        n += 4 * d
    elif config.spatial_encoding == "relative":
        n += config.n_stations * d
    if config.temporal_encoding == "absolute":
        n += (HOURS_PER_DAY + DAYS_PER_MONTH + MONTHS_PER_YEAR) * d
    n += 2 * config.n_layers * d * (d + 1)
    n += config.t_f * (d + 1)
    return n


def tensor_shapes(config: ModelConfig) -> list[tuple[str, tuple[int, ...]]]:
    """Shapes of every tensor the configured variant owns, in canonical order."""
    config.validate()
    d = config.d
    shapes: list[tuple[str, tuple[int, ...]]] = [
        ("fc_embed.weight", (d, config.t_h)),
        ("fc_embed.bias", (d,)),
    ]
    if config.spatial_encoding == "absolute":
        shapes += [("fc_spatial.weight", (d, 3)), ("fc_spatial.bias", (d,))]
    elif config.spatial_encoding == "relative":
        shapes.append(("station_table", (config.n_stations, d)))
    if config.temporal_encoding == "absolute":
        shapes += [
            ("table_hour", (HOURS_PER_DAY, d)),
            ("table_day", (DAYS_PER_MONTH, d)),
            ("table_month", (MONTHS_PER_YEAR, d)),
        ]
    for i in range(config.n_layers):
        shapes += [
            (f"encoder.{i}.fc1.weight", (d, d)),
            (f"encoder.{i}.fc1.bias", (d,)),
            (f"encoder.{i}.fc2.weight", (d, d)),
            (f"encoder.{i}.fc2.bias", (d,)),
        ]
    shapes += [("fc_regress.weight", (config.t_f, d)), ("fc_regress.bias", (config.t_f,))]
    return shapes


def closed_form_count(config: ModelConfig) -> int:
    """Analytic count (2Ld + T_h + T_f + 70)(d+1).

    Differs from parameter_count by |2d - T_h - 70| on the base variant
    because it books the embedding/spatial/temporal bias terms differently;
    both are reported side by side by the CLI, reconciled nowhere.
    """
    return (2 * config.n_layers * config.d + config.t_h + config.t_f + 70) * (
        config.d + 1
    )


def _uniform(rng: np.random.Generator, bound: float, shape) -> np.ndarray:
    return rng.uniform(-bound, bound, size=shape)


def _init_linear(rng: np.random.Generator, d_out: int, d_in: int) -> LinearLayer:
    bound = 1.0 / np.sqrt(d_in)
    return LinearLayer(
        weight=_uniform(rng, bound, (d_out, d_in)),
        bias=_uniform(rng, bound, d_out),
    )


def init_params(config: ModelConfig, seed: int) -> ModelParams:
    """Deterministic initialization: linear layers uniform in +-1/sqrt(fan_in),
    embedding tables uniform in +-1/sqrt(d)."""
    config.validate()
    rng = np.random.default_rng(seed)
    d = config.d
    fc_embed = _init_linear(rng, d, config.t_h)
    fc_spatial = None
    station_table = None
    if config.spatial_encoding == "absolute":
        fc_spatial = _init_linear(rng, d, 3)
    elif config.spatial_encoding == "relative":
        station_table = _uniform(rng, 1.0 / np.sqrt(d), (config.n_stations, d))
    table_hour = table_day = table_month = None
    if config.temporal_encoding == "absolute":
        bound = 1.0 / np.sqrt(d)
        table_hour = _uniform(rng, bound, (HOURS_PER_DAY, d))
        table_day = _uniform(rng, bound, (DAYS_PER_MONTH, d))
        table_month = _uniform(rng, bound, (MONTHS_PER_YEAR, d))
    encoder = [
        EncoderLayer(fc1=_init_linear(rng, d, d), fc2=_init_linear(rng, d, d))
        for _ in range(config.n_layers)
    ]
    fc_regress = _init_linear(rng, config.t_f, d)
    return ModelParams(
        config=config,
        fc_embed=fc_embed,
        fc_regress=fc_regress,
        encoder=encoder,
        fc_spatial=fc_spatial,
        station_table=station_table,
        table_hour=table_hour,
        table_day=table_day,
        table_month=table_month,
    )


# ---------------------------------------------------------------------------
# Single-vector operations (the definitional contracts; the batch path below
# is the same math over row stacks).
# ---------------------------------------------------------------------------


def embed_data(x: np.ndarray, params: ModelParams) -> np.ndarray:
    """Map one station-variable history of length T_h to a d-vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (params.config.t_h,):
        raise ShapeError(f"history shape {x.shape}, expected ({params.config.t_h},)")
    return linear_forward(x, params.fc_embed)


def encode_spatial(coord: StationCoord, params: ModelParams) -> np.ndarray:
    """Encode one station's normalized coordinates to a d-vector."""
    if params.fc_spatial is None:
        raise ConfigError("model has no coordinate-based spatial encoder")
    coord.validate()
    return linear_forward(normalize_coords([coord])[0], params.fc_spatial)


def lookup_temporal(
    tf: TimeFeature, params: ModelParams
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Row lookups into the hour/day/month tables."""
    if params.table_hour is None:
        raise ConfigError("model has no temporal encoding tables")
    return (
        params.table_hour[tf.hour].copy(),
        params.table_day[tf.day_index].copy(),
        params.table_month[tf.month_index].copy(),
    )


def fuse(e, s, t, d, m) -> np.ndarray:
    """Elementwise sum of the five d-vectors."""
    vecs = [np.asarray(v, dtype=np.float64) for v in (e, s, t, d, m)]
    for v in vecs[1:]:
        if v.shape != vecs[0].shape:
            raise ShapeError(f"fuse shapes disagree: {v.shape} vs {vecs[0].shape}")
    return vecs[0] + vecs[1] + vecs[2] + vecs[3] + vecs[4]


def encoder_forward(h: np.ndarray, params: ModelParams) -> np.ndarray:
    """L residual blocks z <- fc2(relu(fc1(z))) + z."""
    z = np.asarray(h, dtype=np.float64)
    if z.shape[-1] != params.config.d:
        raise ShapeError(f"encoder input width {z.shape[-1]} != d {params.config.d}")
    for layer in params.encoder:
        z = linear_forward(relu(linear_forward(z, layer.fc1)), layer.fc2) + z
    return z


# ---------------------------------------------------------------------------
# Batched forward / backward
# ---------------------------------------------------------------------------


def _check_time_indices(hours, days, months, batch: int):
    arrs = []
    for name, a, hi in (
        ("hours", hours, HOURS_PER_DAY),
        ("days", days, DAYS_PER_MONTH),
        ("months", months, MONTHS_PER_YEAR),
    ):
        a = np.asarray(a, dtype=np.intp).reshape(-1)
        if a.shape != (batch,):
            raise ShapeError(f"{name} has shape {a.shape}, expected ({batch},)")
        if a.size and (a.min() < 0 or a.max() >= hi):
            raise ValidationError(f"{name} index outside [0, {hi})")
        arrs.append(a)
    return arrs


def forward_batch(
    history: np.ndarray,
    coords_norm: np.ndarray,
    hours,
    days,
    months,
    params: ModelParams,
    want_cache: bool = False,
):
    """Forward pass over a batch of windows.

    history: [B, T_h, N, C]; coords_norm: normalized [N, 3]; hours/days/
    months: per-window calendar indices [B]. Returns predictions
    [B, T_f, N, C] and, when requested, the cache needed by backward_batch.
    """
    cfg = params.config
    history = np.asarray(history, dtype=np.float64)
    if history.ndim != 4:
        raise ShapeError(f"history must be [B, T_h, N, C], got {history.shape}")
    n_batch, t_h, n_stations, n_vars = history.shape
    if t_h != cfg.t_h or n_vars != cfg.n_vars:
        raise ShapeError(
            f"history {history.shape} inconsistent with T_h={cfg.t_h}, C={cfg.n_vars}"
        )
    if not np.isfinite(history).all():
        raise ValidationError("history contains non-finite values")
    hours, days, months = _check_time_indices(hours, days, months, n_batch)

    x_rows = np.ascontiguousarray(
        history.transpose(0, 2, 3, 1).reshape(-1, t_h)
    )  # row = (window, station, variable)
    e = linear_forward(x_rows, params.fc_embed)
    h4 = e.reshape(n_batch, n_stations, n_vars, cfg.d)

    if cfg.spatial_encoding == "absolute":
        coords_norm = np.asarray(coords_norm, dtype=np.float64)
        if coords_norm.shape != (n_stations, 3):
            raise ShapeError(
                f"coords shape {coords_norm.shape}, expected ({n_stations}, 3)"
            )
        s_rows = linear_forward(coords_norm, params.fc_spatial)
        h4 += s_rows[None, :, None, :]
    elif cfg.spatial_encoding == "relative":
        if n_stations != params.station_table.shape[0]:
            raise ShapeError(
                f"{n_stations} stations but table holds "
                f"{params.station_table.shape[0]}"
            )
        s_rows = params.station_table
        h4 += s_rows[None, :, None, :]

    if cfg.temporal_encoding == "absolute":
        time_rows = (
            params.table_hour[hours] + params.table_day[days] + params.table_month[months]
        )
        h4 += time_rows[:, None, None, :]

    z = h4.reshape(-1, cfg.d)
    z_list = [z]
    a_list = []
    for layer in params.encoder:
        a = linear_forward(z, layer.fc1)
        z = linear_forward(relu(a), layer.fc2) + z
        a_list.append(a)
        z_list.append(z)

    y_rows = linear_forward(z, params.fc_regress)
    pred = np.ascontiguousarray(
        y_rows.reshape(n_batch, n_stations, n_vars, cfg.t_f).transpose(0, 3, 1, 2)
    )
    if not want_cache:
        return pred, None
    cache = {
        "x_rows": x_rows,
        "coords_norm": coords_norm if cfg.spatial_encoding == "absolute" else None,
        "hours": hours,
        "days": days,
        "months": months,
        "z_list": z_list,
        "a_list": a_list,
        "dims": (n_batch, n_stations, n_vars),
    }
    return pred, cache


def backward_batch(grad_pred: np.ndarray, cache: dict, params: ModelParams) -> dict:
    """Reverse-mode pass; returns gradients keyed like named_tensors().

    Temporal-table gradients are nonzero only at rows indexed by the batch.
    """
    cfg = params.config
    n_batch, n_stations, n_vars = cache["dims"]
    grad_pred = np.asarray(grad_pred, dtype=np.float64)
    g_rows = np.ascontiguousarray(
        grad_pred.transpose(0, 2, 3, 1).reshape(-1, cfg.t_f)
    )
    grads: dict[str, np.ndarray] = {}

    gz, gw, gb = linear_backward(cache["z_list"][-1], params.fc_regress, g_rows)
    grads["fc_regress.weight"] = gw
    grads["fc_regress.bias"] = gb

    for i in reversed(range(cfg.n_layers)):
        layer = params.encoder[i]
        a = cache["a_list"][i]
        gs, gw2, gb2 = linear_backward(relu(a), layer.fc2, gz)
        ga = relu_backward(a, gs)
        gz_in, gw1, gb1 = linear_backward(cache["z_list"][i], layer.fc1, ga)
        grads[f"encoder.{i}.fc1.weight"] = gw1
        grads[f"encoder.{i}.fc1.bias"] = gb1
        grads[f"encoder.{i}.fc2.weight"] = gw2
        grads[f"encoder.{i}.fc2.bias"] = gb2
        gz = gz_in + gz  # residual path

    gh4 = gz.reshape(n_batch, n_stations, n_vars, cfg.d)

    if cfg.temporal_encoding == "absolute":
        g_window = gh4.sum(axis=(1, 2))  # [B, d]
        for name, idx, rows in (
            ("table_hour", cache["hours"], HOURS_PER_DAY),
            ("table_day", cache["days"], DAYS_PER_MONTH),
            ("table_month", cache["months"], MONTHS_PER_YEAR),
        ):
            g_table = np.zeros((rows, cfg.d))
            np.add.at(g_table, idx, g_window)
            grads[name] = g_table

    if cfg.spatial_encoding == "absolute":
        g_station = gh4.sum(axis=(0, 2))  # [N, d]
        _, gw_s, gb_s = linear_backward(cache["coords_norm"], params.fc_spatial, g_station)
        grads["fc_spatial.weight"] = gw_s
        grads["fc_spatial.bias"] = gb_s
    elif cfg.spatial_encoding == "relative":
        grads["station_table"] = gh4.sum(axis=(0, 2))

    _, gw_e, gb_e = linear_backward(cache["x_rows"], params.fc_embed, gz)
    grads["fc_embed.weight"] = gw_e
    grads["fc_embed.bias"] = gb_e
    return grads


def forward(
    history: np.ndarray,
    coords: list[StationCoord],
    tf: TimeFeature,
    params: ModelParams,
) -> np.ndarray:
    """Single-window forward: [T_h, N, C] -> [T_f, N, C]."""
    history = np.asarray(history, dtype=np.float64)
    if history.ndim != 3:
        raise ShapeError(f"history must be [T_h, N, C], got {history.shape}")
    coords_norm = normalize_coords(coords) if coords is not None else None
    pred, _ = forward_batch(
        history[None],
        coords_norm,
        np.array([tf.hour]),
        np.array([tf.day_index]),
        np.array([tf.month_index]),
        params,
    )
    return pred[0]


def loss_and_grads(
    params: ModelParams,
    history: np.ndarray,
    future: np.ndarray,
    coords_norm: np.ndarray,
    hours,
    days,
    months,
) -> tuple[float, dict]:
    """Mean absolute error of a batch and its gradients for every tensor.

    The loss is the plain mean of |pred - truth| over all batch elements,
    i.e. the per-window 1/(N*C*T_f) normalization averaged over windows, so
    batch gradients are averages of per-window gradients.
    """
    pred, cache = forward_batch(
        history, coords_norm, hours, days, months, params, want_cache=True
    )
    future = np.asarray(future, dtype=np.float64)
    if future.shape != pred.shape:
        raise ShapeError(f"future shape {future.shape} != pred shape {pred.shape}")
    diff = pred - future
    loss = float(np.abs(diff).sum() / diff.size)
    grad_pred = np.sign(diff) / diff.size
    return loss, backward_batch(grad_pred, cache, params)
