"""Binary checkpoint container.

Layout: magic bytes "LWCKPT1", a little-endian uint32 manifest length, a
UTF-8 JSON manifest (model config plus one entry per tensor: name, shape,
element type), then the raw tensor data little-endian in manifest order.
Round-trips are bit-exact; a truncated or inconsistent file fails before
anything is loaded.
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict

import numpy as np

from .errors import CheckpointError
from .model import ModelConfig, ModelParams, init_params, tensor_shapes

MAGIC = b"LWCKPT1"
_DTYPES = {"float64": "<f8", "float32": "<f4"}


def checkpoint_save(path, params: ModelParams, dtype: str = "float64") -> None:
    if dtype not in _DTYPES:
        raise CheckpointError(f"unsupported element type {dtype!r}")
    tensors = params.named_tensors()
    manifest = {
        "config": asdict(params.config),
        "tensors": [
            {"name": name, "shape": list(arr.shape), "dtype": dtype}
            for name, arr in tensors
        ],
    }
    blob = json.dumps(manifest, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for _, arr in tensors:
            fh.write(np.ascontiguousarray(arr, dtype=_DTYPES[dtype]).tobytes())


def checkpoint_load(path, expected_config: ModelConfig | None = None) -> ModelParams:
    """Load and validate; `expected_config` mismatches name offending tensors."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < len(MAGIC) + 4 or raw[: len(MAGIC)] != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint (bad magic)")
    (mlen,) = struct.unpack("<I", raw[len(MAGIC) : len(MAGIC) + 4])
    body = len(MAGIC) + 4
    if len(raw) < body + mlen:
        raise CheckpointError(f"{path}: truncated manifest")
    try:
        manifest = json.loads(raw[body : body + mlen].decode("utf-8"))
        config = ModelConfig(**manifest["config"])
        entries = manifest["tensors"]
    except (ValueError, KeyError, TypeError) as exc:
        raise CheckpointError(f"{path}: bad manifest: {exc}") from exc

    declared = {e["name"]: tuple(e["shape"]) for e in entries}
    expected_own = dict(tensor_shapes(config))
    if declared != expected_own:
        odd = sorted(set(declared.items()) ^ set(expected_own.items()))
        raise CheckpointError(f"{path}: manifest inconsistent with its config: {odd}")
    if expected_config is not None:
        wanted = dict(tensor_shapes(expected_config))
        bad = sorted(
            name
            for name in set(declared) | set(wanted)
            if declared.get(name) != wanted.get(name)
        )
        if bad:
            details = ", ".join(
                f"{n}: file {declared.get(n)} vs config {wanted.get(n)}" for n in bad
            )
            raise CheckpointError(f"{path}: config mismatch: {details}")

    total = body + mlen
    for e in entries:
        if e["dtype"] not in _DTYPES:
            raise CheckpointError(f"{path}: unsupported element type {e['dtype']!r}")
        itemsize = np.dtype(_DTYPES[e["dtype"]]).itemsize
        total += int(np.prod(e["shape"], dtype=np.int64)) * itemsize
    if len(raw) != total:
        raise CheckpointError(
            f"{path}: size {len(raw)} does not match manifest total {total}"
        )

    params = init_params(config, seed=0)
    offset = body + mlen
    for e in entries:
        dt = np.dtype(_DTYPES[e["dtype"]])
        count = int(np.prod(e["shape"], dtype=np.int64))
        arr = np.frombuffer(raw, dtype=dt, count=count, offset=offset).reshape(
            e["shape"]
        )
        offset += count * dt.itemsize
        params.set_tensor(e["name"], arr.astype(np.float64))
    return params
