"""Binary checkpoint format.

Layout (all integers little-endian uint32):

    b"PROMCKPT" | version | config length | config JSON (UTF-8)
    | array count | per array: name length | name (UTF-8) | rank | dims... | float64 LE data

Arrays are written in sorted name order, so equal parameters give equal bytes.
"""

import logging
import struct
from pathlib import Path
from typing import IO

import numpy as np
from pydantic import ValidationError

from prom.models.configs import ModelConfig
from prom.promnet.model import Params, param_shapes

logger = logging.getLogger(__name__)

MAGIC = b"PROMCKPT"
VERSION = 1
_UINT = struct.Struct("<I")
_FLOAT64 = np.dtype("<f8")


class CheckpointError(Exception):
    """Raised when a checkpoint cannot be parsed."""


def _pack(value: int) -> bytes:
    return _UINT.pack(value)


def dumps_checkpoint(config: ModelConfig, params: Params) -> bytes:
    """Serialize a configuration and its parameters."""
    config_bytes = config.model_dump_json(by_alias=True).encode("utf-8")
    chunks = [MAGIC, _pack(VERSION), _pack(len(config_bytes)), config_bytes, _pack(len(params))]
    for name in sorted(params):
        array = np.ascontiguousarray(params[name], dtype=_FLOAT64)
        encoded = name.encode("utf-8")
        chunks += [_pack(len(encoded)), encoded, _pack(array.ndim)]
        chunks += [_pack(dim) for dim in array.shape]
        chunks.append(array.tobytes())
    return b"".join(chunks)


class _Reader:
    def __init__(self, payload: bytes) -> None:
        self.payload = payload
        self.offset = 0

    def take(self, size: int) -> bytes:
        end = self.offset + size
        if end > len(self.payload):
            msg = f"truncated checkpoint: needed {size} bytes at offset {self.offset}"
            raise CheckpointError(msg)
        chunk = self.payload[self.offset : end]
        self.offset = end
        return chunk

    def uint(self) -> int:
        return _UINT.unpack(self.take(_UINT.size))[0]


def loads_checkpoint(payload: bytes) -> tuple[ModelConfig, Params]:
    """Parse a serialized checkpoint.

    Raises:
        CheckpointError: On a bad magic, unsupported version, truncated data,
            invalid config, trailing bytes, or arrays that do not match the config
    """
    reader = _Reader(payload)
    if reader.take(len(MAGIC)) != MAGIC:
        msg = "not a checkpoint (bad magic bytes)"
        raise CheckpointError(msg)
    version = reader.uint()
    if version != VERSION:
        msg = f"unsupported checkpoint version {version}"
        raise CheckpointError(msg)
    try:
        config = ModelConfig.model_validate_json(reader.take(reader.uint()))
    except ValidationError as e:
        msg = f"invalid model config in checkpoint: {e}"
        raise CheckpointError(msg) from e

    params: Params = {}
    for _ in range(reader.uint()):
        try:
            name = reader.take(reader.uint()).decode("utf-8")
        except UnicodeDecodeError as e:
            msg = f"invalid array name in checkpoint: {e}"
            raise CheckpointError(msg) from e
        shape = tuple(reader.uint() for _ in range(reader.uint()))
        count = int(np.prod(shape, dtype=np.int64))
        data = reader.take(count * _FLOAT64.itemsize)
        params[name] = np.frombuffer(data, dtype=_FLOAT64).astype(np.float64).reshape(shape)
    if reader.offset != len(payload):
        msg = f"{len(payload) - reader.offset} trailing bytes after the last array"
        raise CheckpointError(msg)
    _check_arrays(config, params)
    return config, params


def _check_arrays(config: ModelConfig, params: Params) -> None:
    expected = param_shapes(config)
    missing = sorted(expected.keys() - params.keys())
    unexpected = sorted(params.keys() - expected.keys())
    if missing or unexpected:
        msg = f"checkpoint arrays do not match the model config (missing: {missing}, unexpected: {unexpected})"
        raise CheckpointError(msg)
    for name, shape in expected.items():
        if params[name].shape != shape:
            msg = f"array {name} has shape {params[name].shape}, the model config needs {shape}"
            raise CheckpointError(msg)


def save_checkpoint(target: Path | IO[bytes], config: ModelConfig, params: Params) -> int:
    """Write a checkpoint to a path or binary stream.

    Returns:
        Number of bytes written
    """
    payload = dumps_checkpoint(config, params)
    if isinstance(target, Path):
        target.write_bytes(payload)
        logger.info("Saved checkpoint %(path)s (%(size)d bytes)", {"path": target, "size": len(payload)})
    else:
        target.write(payload)
    return len(payload)


def load_checkpoint(source: Path | IO[bytes]) -> tuple[ModelConfig, Params]:
    """Read a checkpoint from a path or binary stream.

    Raises:
        CheckpointError: If the file cannot be read or parsed
    """
    try:
        payload = source.read_bytes() if isinstance(source, Path) else source.read()
    except OSError as e:
        msg = f"cannot read checkpoint: {e}"
        raise CheckpointError(msg) from e
    return loads_checkpoint(payload)
