"""Binary checkpoints for network parameters and optimizer state.

Layout: the 8-byte magic ``XOOSNET1``, a little-endian uint32 header length,
a UTF-8 JSON header, then every array as little-endian float32 in the order
listed in the header.  Float32 parameters round-trip bit-exactly.
"""

from __future__ import annotations

import json
import os
import struct
from pathlib import Path

import numpy as np

from .net import AdamState, NetConfig, NetworkParams

MAGIC = b"XOOSNET1"
FORMAT = 1


class CheckpointError(ValueError):
    pass


def save(path, params: NetworkParams, game_id: str, adam: AdamState | None = None,
         extra: dict | None = None) -> Path:
    path = Path(path)
    arrays = params.arrays()
    header = {
        "format": FORMAT,
        "game": game_id,
        "input_dim": params.config.input_dim,
        "hidden": list(params.config.hidden),
        "output_dim": params.config.output_dim,
        "version": int(params.version),
        "shapes": [list(a.shape) for a in arrays],
        "optimizer": None,
    }
    if adam is not None:
        header["optimizer"] = {"step": adam.step, "lr": adam.lr, "beta1": adam.beta1,
                               "beta2": adam.beta2, "eps": adam.eps}
        arrays = arrays + list(adam.m) + list(adam.v)
    if extra:
        header["extra"] = extra
    blob = json.dumps(header, sort_keys=True).encode()
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for a in arrays:
            fh.write(np.ascontiguousarray(a, dtype="<f4").tobytes())
    os.replace(tmp, path)
    return path


def read_header(path) -> dict:
    with open(path, "rb") as fh:
        return _header(fh, path)


def _header(fh, path) -> dict:
    if fh.read(len(MAGIC)) != MAGIC:
        raise CheckpointError(f"{path} is not a network checkpoint")
    raw = fh.read(4)
    if len(raw) != 4:
        raise CheckpointError(f"{path} is truncated")
    (n,) = struct.unpack("<I", raw)
    try:
        header = json.loads(fh.read(n).decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path} has a corrupt header") from exc
    if header.get("format") != FORMAT:
        raise CheckpointError(f"{path} uses unsupported format {header.get('format')}")
    return header


def load(path, expect_game: str | None = None):
    """Returns ``(params, adam_or_None, header)``."""
    with open(path, "rb") as fh:
        header = _header(fh, path)
        if expect_game is not None and header["game"] != expect_game:
            raise CheckpointError(f"checkpoint is for {header['game']}, not {expect_game}")
        shapes = [tuple(s) for s in header["shapes"]]
        count = len(shapes) * (3 if header["optimizer"] else 1)
        arrays = []
        for k in range(count):
            shape = shapes[k % len(shapes)]
            size = int(np.prod(shape))
            raw = fh.read(4 * size)
            if len(raw) != 4 * size:
                raise CheckpointError(f"{path} is truncated")
            arrays.append(np.frombuffer(raw, dtype="<f4").astype(np.float32).reshape(shape))
        if fh.read(1):
            raise CheckpointError(f"{path} has trailing bytes")
    config = NetConfig(header["input_dim"], tuple(header["hidden"]), header["output_dim"])
    n = len(shapes)
    params = NetworkParams(config, arrays[0:n:2], arrays[1:n:2], header["version"])
    expected = [tuple(s) for s in zip(config.sizes[:-1], config.sizes[1:])]
    if [w.shape for w in params.weights] != expected:
        raise CheckpointError(f"{path} layer shapes do not match its header")
    adam = None
    opt = header["optimizer"]
    if opt:
        adam = AdamState(arrays[n : 2 * n], arrays[2 * n :], opt["step"], opt["lr"],
                         opt["beta1"], opt["beta2"], opt["eps"])
    return params, adam, header
