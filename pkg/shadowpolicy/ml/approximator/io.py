"""Binary checkpoint codec.

Layout (little-endian): b"MLAB", version u8, layer count u8, then per layer
(in-dim u32, out-dim u32, activation code u8), then per layer the row-major
weight matrix followed by the bias vector as float64, then the CRC32 of all
preceding bytes as u32.
"""
import pathlib
import struct
import zlib
from typing import Union

import numpy as np

from shadowpolicy.exceptions import (
    BadMagicError,
    ChecksumError,
    CheckpointError,
    UnsupportedVersionError,
)
from shadowpolicy.utils import get_logger

from .dataclass import ACTIVATION_CODES, Activation, NetworkSpec
from .network import Network

logger = get_logger(__name__)

MAGIC = b"MLAB"
FORMAT_VERSION = 1
_PREFIX = struct.Struct("<4sBB")
_LAYER = struct.Struct("<IIB")
_CRC = struct.Struct("<I")
_FLOAT = np.dtype("<f8")


def encode_network(net: Network) -> bytes:
    layer_count = len(net.weights)
    parts = [_PREFIX.pack(MAGIC, FORMAT_VERSION, layer_count)]

    for i, w in enumerate(net.weights):
        activation = (
            "identity" if i == layer_count - 1 else net.spec.activation.value
        )
        out_dim, in_dim = w.shape
        parts.append(_LAYER.pack(in_dim, out_dim, ACTIVATION_CODES[activation]))

    for w, b in zip(net.weights, net.biases):
        parts.append(np.ascontiguousarray(w, dtype=_FLOAT).tobytes(order="C"))
        parts.append(np.ascontiguousarray(b, dtype=_FLOAT).tobytes(order="C"))

    payload = b"".join(parts)
    return payload + _CRC.pack(zlib.crc32(payload) & 0xFFFFFFFF)


def decode_network(data: bytes, seed: int = 0) -> Network:
    if len(data) < _PREFIX.size + _CRC.size:
        raise ChecksumError("checkpoint truncated ({} bytes)".format(len(data)))

    magic, version, layer_count = _PREFIX.unpack_from(data, 0)

    if magic != MAGIC:
        raise BadMagicError("bad checkpoint magic: {!r}".format(magic))

    if version != FORMAT_VERSION:
        raise UnsupportedVersionError(
            "unsupported checkpoint version: {}".format(version)
        )

    payload, (crc,) = data[: -_CRC.size], _CRC.unpack(data[-_CRC.size :])

    if zlib.crc32(payload) & 0xFFFFFFFF != crc:
        raise ChecksumError("checkpoint CRC32 mismatch")

    if layer_count < 1:
        raise CheckpointError("checkpoint has no layers")

    offset = _PREFIX.size
    dims = []
    for _ in range(layer_count):
        in_dim, out_dim, _code = _LAYER.unpack_from(payload, offset)
        dims.append((in_dim, out_dim))
        offset += _LAYER.size

    for (_, out_prev), (in_next, _) in zip(dims[:-1], dims[1:]):
        if out_prev != in_next:
            raise CheckpointError("inconsistent layer dimensions")

    weights = []
    biases = []
    for in_dim, out_dim in dims:
        w = np.frombuffer(payload, dtype=_FLOAT, count=in_dim * out_dim, offset=offset)
        offset += w.nbytes
        b = np.frombuffer(payload, dtype=_FLOAT, count=out_dim, offset=offset)
        offset += b.nbytes
        weights.append(w.reshape(out_dim, in_dim).astype(np.float64))
        biases.append(b.astype(np.float64))

    if offset != len(payload):
        raise CheckpointError("trailing bytes in checkpoint")

    layer_sizes = [dims[0][0]] + [out_dim for _, out_dim in dims]
    spec = NetworkSpec(layer_sizes=layer_sizes, activation=Activation.relu, seed=seed)
    return Network(spec=spec, weights=weights, biases=biases)


def save_checkpoint(path: Union[str, pathlib.Path], net: Network) -> None:
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_network(net))
    logger.debug("Checkpoint saved to {}".format(path))


def load_checkpoint(path: Union[str, pathlib.Path]) -> Network:
    """Load a checkpoint; the NetworkSpec seed is not stored and reads back as 0."""
    data = pathlib.Path(path).read_bytes()
    try:
        return decode_network(data)
    except (struct.error, ValueError) as e:
        raise ChecksumError("checkpoint truncated: {}".format(e)) from e
