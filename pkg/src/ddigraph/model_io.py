"""Binary model files.

Layout (all integers little-endian)::

    b"DDIG"                     magic
    u32   format version        (FORMAT_VERSION)
    u32   header length H
    H     header, UTF-8 JSON    {"model": ModelConfig, "train": TrainConfig or null}
    u32   parameter count N
    N x   u16 name length, name (UTF-8), u8 ndim, ndim x u32 dims,
          u64 value count, value count x f64
    32    SHA-256 of every preceding byte

The JSON is written with sorted keys and no whitespace so identical models
produce identical files.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import replace
from pathlib import Path

import numpy as np

from ddigraph.errors import CorruptFile, IncompatibleHyperparameters, VersionMismatch
from ddigraph.model import ModelConfig, ModelParams, init_params

MAGIC = b"DDIG"
FORMAT_VERSION = 1
_DIGEST = 32


def dumps(params: ModelParams, train_config: dict | None = None) -> bytes:
    header = json.dumps(
        {"model": params.config.to_dict(), "train": train_config},
        sort_keys=True,
        separators=(",", ":"),
    ).encode()
    parts = [MAGIC, struct.pack("<II", FORMAT_VERSION, len(header)), header]
    plist = params.parameters()
    parts.append(struct.pack("<I", len(plist)))
    for p in plist:
        name = p.name.encode()
        parts.append(struct.pack("<H", len(name)) + name)
        parts.append(struct.pack("<B", p.value.ndim) + struct.pack(f"<{p.value.ndim}I", *p.value.shape))
        parts.append(struct.pack("<Q", p.value.size))
        parts.append(np.ascontiguousarray(p.value, dtype="<f8").tobytes())
    body = b"".join(parts)
    return body + hashlib.sha256(body).digest()


def save_model(params: ModelParams, path, train_config: dict | None = None) -> None:
    Path(path).write_bytes(dumps(params, train_config))


def loads(blob: bytes, expected: ModelConfig | None = None, max_nodes: int | None = None):
    """Decode a model file; returns ``(params, header)``.

    ``expected`` rejects files whose architecture differs; ``max_nodes``
    overrides the stored padding width (weights do not depend on it).
    """
    if len(blob) < 12 + _DIGEST or blob[:4] != MAGIC:
        raise CorruptFile("not a model file (bad magic or truncated)")
    (version,) = struct.unpack_from("<I", blob, 4)
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"model format version {version}, expected {FORMAT_VERSION}")
    body, digest = blob[:-_DIGEST], blob[-_DIGEST:]
    if hashlib.sha256(body).digest() != digest:
        raise CorruptFile("checksum mismatch (truncated or modified file)")
    try:
        (hlen,) = struct.unpack_from("<I", body, 8)
        pos = 12
        header = json.loads(body[pos : pos + hlen].decode())
        pos += hlen
        config = ModelConfig(**header["model"])
        (count,) = struct.unpack_from("<I", body, pos)
        pos += 4
        arrays = {}
        for _ in range(count):
            (nlen,) = struct.unpack_from("<H", body, pos)
            pos += 2
            name = body[pos : pos + nlen].decode()
            pos += nlen
            (ndim,) = struct.unpack_from("<B", body, pos)
            pos += 1
            shape = struct.unpack_from(f"<{ndim}I", body, pos)
            pos += 4 * ndim
            (size,) = struct.unpack_from("<Q", body, pos)
            pos += 8
            values = np.frombuffer(body, dtype="<f8", count=size, offset=pos)
            pos += 8 * size
            arrays[name] = values.astype(np.float64).reshape(shape)
        if pos != len(body):
            raise CorruptFile("trailing bytes after parameter block")
    except (struct.error, ValueError, KeyError, TypeError, UnicodeDecodeError) as exc:
        raise CorruptFile(f"malformed model file: {exc}") from exc

    if expected is not None and expected.architecture() != config.architecture():
        raise IncompatibleHyperparameters(
            f"file architecture {config.architecture()} != requested {expected.architecture()}"
        )
    if max_nodes is not None:
        config = replace(config, max_nodes=max_nodes)
    params = init_params(config, zeros=True)
    named = params.named()
    if set(named) != set(arrays):
        raise CorruptFile("parameter names do not match the stored architecture")
    for name, p in named.items():
        if arrays[name].shape != p.value.shape:
            raise CorruptFile(f"parameter {name} has shape {arrays[name].shape}, expected {p.value.shape}")
        p.value[...] = arrays[name]
    return params, header


def load_model(path, expected: ModelConfig | None = None, max_nodes: int | None = None) -> ModelParams:
    return loads(Path(path).read_bytes(), expected, max_nodes)[0]


def read_header(path) -> dict:
    return loads(Path(path).read_bytes())[1]
