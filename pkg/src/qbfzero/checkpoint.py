"""Versioned binary checkpoints for network weights and optimizer state.

Layout (all integers little-endian)::

    offset  size  field
    0       8     magic  b"QBFZCKPT"
    8       4     format version, uint32 (currently 1)
    12      4     header length L in bytes, uint32
    16      L     header, UTF-8 JSON:
                    {"config": {GgnnConfig fields},
                     "optimizer_step": int,
                     "arrays": [{"name": str, "shape": [int, ...]}, ...]}
    16+L    ...   array payloads in header order, float64 little-endian, C order

Array names are ``param/<name>`` for weights and ``adam_m/<name>`` /
``adam_v/<name>`` for the moment estimates (absent before the first Adam step).
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .ggnn import GgnnConfig, GgnnParams, OptimizerState

MAGIC = b"QBFZCKPT"
VERSION = 1
_DTYPE = np.dtype("<f8")


class CheckpointError(ValueError):
    pass


def save_checkpoint(params: GgnnParams, path, opt_state: OptimizerState | None = None) -> None:
    opt_state = opt_state or OptimizerState()
    arrays = [(f"param/{k}", v) for k, v in params.tensors.items()]
    arrays += [(f"adam_m/{k}", v) for k, v in opt_state.m.items()]
    arrays += [(f"adam_v/{k}", v) for k, v in opt_state.v.items()]
    header = {
        "config": asdict(params.config),
        "optimizer_step": opt_state.step,
        "arrays": [{"name": n, "shape": list(np.shape(a))} for n, a in arrays],
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(blob)))
        fh.write(blob)
        for _, a in arrays:
            fh.write(np.ascontiguousarray(a, dtype=_DTYPE).tobytes())


def load_checkpoint(path) -> tuple[GgnnParams, OptimizerState]:
    data = Path(path).read_bytes()
    if data[:8] != MAGIC:
        raise CheckpointError(f"{path}: not a checkpoint (bad magic)")
    if len(data) < 16:
        raise CheckpointError(f"{path}: truncated")
    version, hlen = struct.unpack("<II", data[8:16])
    if version != VERSION:
        raise CheckpointError(f"{path}: unsupported version {version}, expected {VERSION}")
    try:
        header = json.loads(data[16:16 + hlen].decode("utf-8"))
        cfg = GgnnConfig(**header["config"])
    except (ValueError, TypeError, KeyError) as exc:
        raise CheckpointError(f"{path}: bad header: {exc}") from None

    expected = cfg.shapes()
    offset = 16 + hlen
    params, m, v = {}, {}, {}
    for entry in header["arrays"]:
        kind, _, name = entry["name"].partition("/")
        shape = tuple(entry["shape"])
        if kind not in ("param", "adam_m", "adam_v") or expected.get(name) != shape:
            raise CheckpointError(f"{path}: unexpected array {entry['name']} with shape {shape}")
        nbytes = int(np.prod(shape, dtype=int)) * _DTYPE.itemsize
        if offset + nbytes > len(data):
            raise CheckpointError(f"{path}: truncated payload")
        arr = np.frombuffer(data, dtype=_DTYPE, count=nbytes // 8, offset=offset).reshape(shape).copy()
        offset += nbytes
        {"param": params, "adam_m": m, "adam_v": v}[kind][name] = arr
    if params.keys() != expected.keys():
        raise CheckpointError(f"{path}: missing weights {sorted(expected.keys() - params.keys())}")
    if offset != len(data):
        raise CheckpointError(f"{path}: {len(data) - offset} trailing bytes")
    return GgnnParams(cfg, params), OptimizerState(header["optimizer_step"], m, v)
