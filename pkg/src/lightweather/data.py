"""Station/observation CSV ingestion, chronological splits, sliding-window
samples, and per-variable z-score normalization.

File formats (UTF-8, comma-separated, header required):

  stations CSV:      station_id,lat,lon,elev
  observations CSV:  timestamp,station_id,var_0[,var_1,...]

Observation timestamps are ISO-8601 on a uniform hourly or daily grid, in
long format (one row per timestamp and station). Missing cells are forward
filled within a station; a station missing more than 10% of its cells, or
missing its very first value, is an ingestion error.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import datetime, timedelta
from typing import Iterator

import numpy as np

from .errors import ConfigError, IngestionError
from .model import StationCoord, TimeFeature

STATIONS_HEADER = ["station_id", "lat", "lon", "elev"]


def load_stations_csv(path) -> tuple[list[str], list[StationCoord]]:
    """Read the station table; order is preserved."""
    ids: list[str] = []
    coords: list[StationCoord] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != STATIONS_HEADER:
            raise IngestionError(
                f"{path}: expected header {','.join(STATIONS_HEADER)}, got {header}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise IngestionError(f"{path}: line {lineno}: expected 4 columns")
            sid = row[0].strip()
            try:
                lat, lon, elev = (float(v) for v in row[1:])
            except ValueError as exc:
                raise IngestionError(f"{path}: line {lineno}: {exc}") from exc
            coord = StationCoord(latitude=lat, longitude=lon, elevation=elev)
            try:
                coord.validate()
            except Exception as exc:
                raise IngestionError(f"{path}: line {lineno}: {exc}") from exc
            if sid in ids:
                raise IngestionError(f"{path}: line {lineno}: duplicate station {sid}")
            ids.append(sid)
            coords.append(coord)
    if not ids:
        raise IngestionError(f"{path}: no stations")
    return ids, coords


def write_stations_csv(path, ids: list[str], coords: list[StationCoord]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(STATIONS_HEADER)
        for sid, c in zip(ids, coords):
            writer.writerow([sid, repr(c.latitude), repr(c.longitude), repr(c.elevation)])


@dataclass
class ObservationSet:
    """Aligned station metadata, timestamps, and a [T, N, C] value tensor."""

    timestamps: list[datetime]
    station_ids: list[str]
    coords: list[StationCoord]
    values: np.ndarray
    var_names: list[str]
    interval: timedelta

    @property
    def n_steps(self) -> int:
        return self.values.shape[0]

    @property
    def n_stations(self) -> int:
        return self.values.shape[1]

    @property
    def n_vars(self) -> int:
        return self.values.shape[2]


def _parse_timestamp(raw: str, path, lineno: int) -> datetime:
    try:
        return datetime.fromisoformat(raw.strip())
    except ValueError as exc:
        raise IngestionError(f"{path}: line {lineno}: bad timestamp {raw!r}") from exc


def load_observations_csv(
    path, station_ids: list[str], coords: list[StationCoord]
) -> ObservationSet:
    """Read long-format observations into a dense [T, N, C] tensor.

    Stations are ordered per the station table; rows may arrive in any
    order but each (timestamp, station) pair at most once.
    """
    sid_index = {sid: i for i, sid in enumerate(station_ids)}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if (
            header is None
            or len(header) < 3
            or header[0].strip() != "timestamp"
            or header[1].strip() != "station_id"
        ):
            raise IngestionError(
                f"{path}: expected header timestamp,station_id,<var columns>, got {header}"
            )
        var_names = [h.strip() for h in header[2:]]
        n_vars = len(var_names)

        cells: dict[datetime, dict[int, list[float]]] = {}
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2 + n_vars:
                raise IngestionError(
                    f"{path}: line {lineno}: expected {2 + n_vars} columns"
                )
            ts = _parse_timestamp(row[0], path, lineno)
            sid = row[1].strip()
            if sid not in sid_index:
                raise IngestionError(f"{path}: line {lineno}: unknown station {sid!r}")
            vals = []
            for raw in row[2:]:
                raw = raw.strip()
                if raw == "":
                    vals.append(np.nan)  # explicit missing cell
                    continue
                try:
                    vals.append(float(raw))
                except ValueError as exc:
                    raise IngestionError(f"{path}: line {lineno}: {exc}") from exc
            per_ts = cells.setdefault(ts, {})
            si = sid_index[sid]
            if si in per_ts:
                raise IngestionError(
                    f"{path}: line {lineno}: duplicate ({ts.isoformat()}, {sid})"
                )
            per_ts[si] = vals

    if not cells:
        raise IngestionError(f"{path}: no observations")
    timestamps = sorted(cells)
    if len(timestamps) < 2:
        raise IngestionError(f"{path}: need at least 2 timestamps to fix the interval")
    interval = timestamps[1] - timestamps[0]
    if interval <= timedelta(0):
        raise IngestionError(f"{path}: non-increasing timestamps")
    for a, b in zip(timestamps, timestamps[1:]):
        if b - a != interval:
            raise IngestionError(
                f"{path}: non-uniform timestamp grid at {b.isoformat()} "
                f"(step {b - a}, expected {interval})"
            )

    n_steps, n_stations = len(timestamps), len(station_ids)
    values = np.full((n_steps, n_stations, n_vars), np.nan)
    for t, ts in enumerate(timestamps):
        for si, vals in cells[ts].items():
            values[t, si, :] = vals

    # forward fill per station/variable, bounded by the 10% rule
    max_missing = 0.10 * n_steps * n_vars
    for si, sid in enumerate(station_ids):
        missing = int(np.isnan(values[:, si, :]).sum())
        if missing > max_missing:
            raise IngestionError(
                f"{path}: station {sid}: {missing} missing cells exceed 10%"
            )
        if missing == 0:
            continue
        for vi in range(n_vars):
            col = values[:, si, vi]
            if np.isnan(col[0]):
                raise IngestionError(
                    f"{path}: station {sid}: variable {var_names[vi]} missing at the "
                    f"first timestamp; cannot forward fill"
                )
            for t in range(1, n_steps):
                if np.isnan(col[t]):
                    col[t] = col[t - 1]

    return ObservationSet(
        timestamps=timestamps,
        station_ids=list(station_ids),
        coords=list(coords),
        values=values,
        var_names=var_names,
        interval=interval,
    )


def write_observations_csv(path, obs: ObservationSet) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestamp", "station_id"] + list(obs.var_names))
        for t, ts in enumerate(obs.timestamps):
            for si, sid in enumerate(obs.station_ids):
                writer.writerow(
                    [ts.isoformat(), sid]
                    + [repr(float(v)) for v in obs.values[t, si, :]]
                )


def chronological_split(
    n_total: int, t_h: int | None = None, t_f: int | None = None
) -> tuple[range, range, range]:
    """Time-ordered 7:1:2 partition into train/val/test index ranges."""
    n_train = int(np.floor(0.7 * n_total))
    n_val = int(np.floor(0.1 * n_total))
    train = range(0, n_train)
    val = range(n_train, n_train + n_val)
    test = range(n_train + n_val, n_total)
    if t_h is not None and t_f is not None:
        need = t_h + t_f
        for name, span in (("train", train), ("val", val), ("test", test)):
            if len(span) < need:
                raise ConfigError(
                    f"{name} split has {len(span)} steps; needs >= {need} "
                    f"for T_h={t_h}, T_f={t_f}"
                )
    return train, val, test


@dataclass
class WindowSample:
    """One training example: contiguous history and future slices."""

    history: np.ndarray  # [T_h, N, C]
    future: np.ndarray  # [T_f, N, C]
    time_feature: TimeFeature  # of the first forecast step


class WindowSet:
    """Sliding windows over one split, served as index-gathered batches.

    `values` feeds the model (normalized when normalization is on);
    `raw_values` keeps original units for metric computation. Windows are
    views: nothing is materialized until a batch is requested.
    """

    def __init__(self, values, raw_values, timestamps, starts, t_h: int, t_f: int):
        self.values = values
        self.raw_values = raw_values
        self.timestamps = timestamps
        self.starts = np.asarray(starts, dtype=np.intp)
        self.t_h = t_h
        self.t_f = t_f
        feats = [TimeFeature.from_timestamp(timestamps[s + t_h]) for s in self.starts]
        self.hours = np.array([f.hour for f in feats], dtype=np.intp)
        self.days = np.array([f.day_index for f in feats], dtype=np.intp)
        self.months = np.array([f.month_index for f in feats], dtype=np.intp)

    def __len__(self) -> int:
        return len(self.starts)

    @property
    def n_stations(self) -> int:
        return self.values.shape[1]

    @property
    def n_vars(self) -> int:
        return self.values.shape[2]

    def batch(self, idx) -> dict:
        """Gather windows idx -> history/future tensors plus calendar indices."""
        idx = np.asarray(idx, dtype=np.intp)
        s = self.starts[idx]
        hist_steps = s[:, None] + np.arange(self.t_h)
        fut_steps = s[:, None] + self.t_h + np.arange(self.t_f)
        return {
            "history": self.values[hist_steps],
            "future": self.values[fut_steps],
            "future_raw": self.raw_values[fut_steps],
            "hours": self.hours[idx],
            "days": self.days[idx],
            "months": self.months[idx],
        }

    def iter_samples(self) -> Iterator[WindowSample]:
        for k in range(len(self)):
            b = self.batch([k])
            yield WindowSample(
                history=b["history"][0],
                future=b["future"][0],
                time_feature=TimeFeature(
                    hour=int(b["hours"][0]),
                    day_index=int(b["days"][0]),
                    month_index=int(b["months"][0]),
                ),
            )


def make_windows(
    values: np.ndarray,
    timestamps,
    span: range,
    t_h: int,
    t_f: int,
    raw_values: np.ndarray | None = None,
) -> WindowSet:
    """All stride-1 windows fully inside `span`: count = len - T_h - T_f + 1."""
    n = len(span) - t_h - t_f + 1
    starts = np.arange(span.start, span.start + max(n, 0))
    return WindowSet(
        values=values,
        raw_values=values if raw_values is None else raw_values,
        timestamps=timestamps,
        starts=starts,
        t_h=t_h,
        t_f=t_f,
    )


@dataclass
class Normalizer:
    """Per-variable z-score fitted on the training split only."""

    mean: np.ndarray  # [C]
    std: np.ndarray  # [C]


def normalize_fit(values: np.ndarray, span: range | None = None) -> Normalizer:
    data = values[span.start : span.stop] if span is not None else values
    mean = data.mean(axis=(0, 1))
    std = data.std(axis=(0, 1))
    for vi, s in enumerate(std):
        if s <= 0.0:
            raise IngestionError(f"degenerate variable {vi}: zero variance")
    return Normalizer(mean=mean, std=std)


def normalize_apply(values: np.ndarray, norm: Normalizer) -> np.ndarray:
    return (values - norm.mean) / norm.std


def normalize_invert(values: np.ndarray, norm: Normalizer) -> np.ndarray:
    return values * norm.std + norm.mean


@dataclass
class PreparedData:
    train: WindowSet
    val: WindowSet
    test: WindowSet
    normalizer: Normalizer | None


def split_windows(
    obs: ObservationSet, t_h: int, t_f: int, normalize: bool = True
) -> PreparedData:
    """Split 7:1:2, fit the normalizer on train, and window every split."""
    train_span, val_span, test_span = chronological_split(obs.n_steps, t_h, t_f)
    norm = normalize_fit(obs.values, train_span) if normalize else None
    model_values = normalize_apply(obs.values, norm) if normalize else obs.values
    sets = [
        make_windows(model_values, obs.timestamps, span, t_h, t_f, raw_values=obs.values)
        for span in (train_span, val_span, test_span)
    ]
    return PreparedData(train=sets[0], val=sets[1], test=sets[2], normalizer=norm)
