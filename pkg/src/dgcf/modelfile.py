"""Versioned binary model container shared by train/evaluate/recommend/diagnose.

Layout (all little-endian):
    magic "DGCF" | version u8 | model_type u8 | activation u8 | embedding_mode u8
    m u64 | n u64 | d u64 | L u64 | alpha f64 | beta f64
    layer_weights (L+1) f64 | W (m+n)*d f64 row-major | L blocks of d*d f64
    crc32 u32 over everything above
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, ModelFileError
from .model import Hyperparams, ModelParams
from .util import write_atomic_bytes

MAGIC = b"DGCF"
VERSION = 1
MODEL_TAGS = {"ours": 0, "lightgcn": 1, "bprmf": 2}
TAG_NAMES = {v: k for k, v in MODEL_TAGS.items()}
ACT_TAGS = {"identity": 0, "relu": 1}
ACT_NAMES = {v: k for k, v in ACT_TAGS.items()}
MODE_TAGS = {"sw": 0, "free": 1}
MODE_NAMES = {v: k for k, v in MODE_TAGS.items()}

_HEAD = struct.Struct("<4sBBBB")
_DIMS = struct.Struct("<QQQQdd")
_CRC = struct.Struct("<I")


@dataclass
class ModelRecord:
    tag: str
    params: ModelParams
    hyper: Hyperparams


def save_model(path: str | Path, tag: str, params: ModelParams, hyper: Hyperparams) -> None:
    if tag not in MODEL_TAGS:
        raise ValueError(f"unknown model tag {tag!r}, expected one of {sorted(MODEL_TAGS)}")
    parts = [
        _HEAD.pack(MAGIC, VERSION, MODEL_TAGS[tag], ACT_TAGS[hyper.activation],
                   MODE_TAGS[hyper.embedding_mode]),
        _DIMS.pack(params.m, params.n, hyper.d, hyper.L, hyper.alpha, hyper.beta),
        np.asarray(hyper.layer_weights, dtype="<f8").tobytes(),
        np.ascontiguousarray(params.W, dtype="<f8").tobytes(),
    ]
    parts.extend(np.ascontiguousarray(Wl, dtype="<f8").tobytes() for Wl in params.W_layers)
    body = b"".join(parts)
    write_atomic_bytes(path, body + _CRC.pack(zlib.crc32(body)))


def load_model(path: str | Path) -> ModelRecord:
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise ModelFileError(f"cannot read model file {path}: {exc}") from exc
    if len(blob) < _HEAD.size + _DIMS.size + _CRC.size:
        raise ModelFileError(f"{path}: truncated model file")
    body, crc_bytes = blob[:-_CRC.size], blob[-_CRC.size:]
    if zlib.crc32(body) != _CRC.unpack(crc_bytes)[0]:
        raise ModelFileError(f"{path}: checksum mismatch, file is corrupt")
    magic, version, type_b, act_b, mode_b = _HEAD.unpack_from(body, 0)
    if magic != MAGIC:
        raise ModelFileError(f"{path}: not a model file (bad magic)")
    if version != VERSION:
        raise ModelFileError(f"{path}: unsupported version {version}")
    if type_b not in TAG_NAMES or act_b not in ACT_NAMES or mode_b not in MODE_NAMES:
        raise ModelFileError(f"{path}: unknown type/activation/mode tag")
    m, n, d, L, alpha, beta = _DIMS.unpack_from(body, _HEAD.size)
    off = _HEAD.size + _DIMS.size
    expected = off + 8 * ((L + 1) + (m + n) * d + L * d * d)
    if len(body) != expected:
        raise ModelFileError(f"{path}: size {len(body)} does not match header (want {expected})")

    def take(count: int, shape) -> np.ndarray:
        nonlocal off
        arr = np.frombuffer(body, dtype="<f8", count=count, offset=off)
        off += 8 * count
        return arr.reshape(shape).astype(np.float64)

    weights = take(L + 1, (L + 1,))
    W = take((m + n) * d, (m + n, d))
    W_layers = [take(d * d, (d, d)) for _ in range(L)]
    if not np.isfinite(W).all() or not all(np.isfinite(Wl).all() for Wl in W_layers):
        raise ModelFileError(f"{path}: non-finite parameter values")
    try:
        hyper = Hyperparams(d=int(d), L=int(L), alpha=alpha, beta=beta, layer_weights=weights,
                            activation=ACT_NAMES[act_b], embedding_mode=MODE_NAMES[mode_b])
    except ConfigError as exc:
        raise ModelFileError(f"{path}: invalid hyperparameters: {exc}") from exc
    params = ModelParams(m=int(m), n=int(n), W=W, W_layers=W_layers)
    return ModelRecord(tag=TAG_NAMES[type_b], params=params, hyper=hyper)
