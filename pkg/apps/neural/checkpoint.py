"""
Self-describing binary checkpoints.

Layout (all integers little-endian)::

    magic            8 bytes  b'OGMLSTM\\x00'
    header length    uint32
    header           UTF-8 JSON, sorted keys: format_version, delta_seconds, geometry,
                     head_kind, layer_dims, normalization, init_recipe,
                     window
    tensor count     uint32
    per tensor       uint16 name length, name, uint8 ndim, ndim x uint32 dims,
                     float64 data
    checksum         32 bytes, SHA-256 of every byte before it

Tensors are stored in ``NetworkParams.named_tensors()`` order, so equal
parameters always serialize to identical bytes.
"""
import hashlib
import json
import logging
import struct
from typing import Union

import numpy as np

from apps.common.exceptions import (
    CheckpointChecksumError,
    CheckpointFormatError,
    CheckpointShapeError,
    CheckpointTruncatedError,
    CheckpointVersionError,
    PredictorError,
)
from apps.grid.geometry import GridGeometry
from .params import FeatureNormalization, NetworkParams

logger = logging.getLogger(__name__)

MAGIC = b'OGMLSTM\x00'
FORMAT_VERSION = 1
_DIGEST_SIZE = 32


def save_checkpoint(params: NetworkParams) -> bytes:
    header = {
        'format_version': FORMAT_VERSION,
        'delta_seconds': params.delta,
        'geometry': params.geometry.to_dict(),
        'head_kind': params.head_kind,
        'layer_dims': params.layer_dims(),
        'normalization': params.normalization.to_dict(),
        'init_recipe': params.init_recipe,
        'window': params.window,
    }
    header_bytes = json.dumps(header, sort_keys=True).encode('utf-8')
    tensors = params.named_tensors()
    parts = [MAGIC, struct.pack('<I', len(header_bytes)), header_bytes, struct.pack('<I', len(tensors))]
    for name, tensor in tensors.items():
        encoded = name.encode('utf-8')
        parts.append(struct.pack('<H', len(encoded)))
        parts.append(encoded)
        parts.append(struct.pack('<B', tensor.ndim))
        parts.append(struct.pack(f'<{tensor.ndim}I', *tensor.shape))
        parts.append(np.ascontiguousarray(tensor, dtype='<f8').tobytes())
    body = b''.join(parts)
    return body + hashlib.sha256(body).digest()


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.offset = 0

    def take(self, n: int) -> bytes:
        if self.offset + n > len(self.data):
            raise CheckpointTruncatedError(
                f'checkpoint ends at byte {len(self.data)}, needed {self.offset + n}'
            )
        chunk = self.data[self.offset:self.offset + n]
        self.offset += n
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))


def _check_payload_budget(layer_dims, available: int) -> None:
    """Refuse layer sizes whose tensors could not fit in the bytes that follow the header."""
    shapes = [spec[:2] for spec in layer_dims['input_fc']]
    shapes += [spec[:2] for spec in layer_dims['output_fc']]
    shapes.append(layer_dims['head'][:2])
    for n_in, hidden in layer_dims['lstm']:
        shapes += [(n_in, hidden), (hidden, hidden)]
    for rows, cols in shapes:
        rows, cols = int(rows), int(cols)
        if rows < 0 or cols < 0:
            raise ValueError(f'negative layer size {rows}x{cols}')
        if max(rows, cols, rows * cols) * 8 > available:
            raise CheckpointTruncatedError(
                f'a {rows}x{cols} layer needs more than the {available} bytes left in the checkpoint'
            )


def load_checkpoint(data: bytes) -> NetworkParams:
    if len(data) < len(MAGIC) or data[:len(MAGIC)] != MAGIC:
        if len(data) < len(MAGIC) and MAGIC.startswith(data):
            raise CheckpointTruncatedError('checkpoint ends inside the magic bytes')
        raise CheckpointFormatError('not a checkpoint file (bad magic bytes)')
    reader = _Reader(data)
    reader.take(len(MAGIC))
    (header_length,) = reader.unpack('<I')
    try:
        header = json.loads(reader.take(header_length).decode('utf-8'))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointFormatError(f'unreadable checkpoint header: {exc}') from exc
    if not isinstance(header, dict) or 'format_version' not in header:
        raise CheckpointFormatError('checkpoint header lacks a format version')
    if header['format_version'] != FORMAT_VERSION:
        raise CheckpointVersionError(
            f'checkpoint format version {header["format_version"]} is not supported '
            f'(expected {FORMAT_VERSION})'
        )
    try:
        _check_payload_budget(header['layer_dims'], len(data) - reader.offset)
        window = header.get('window')
        if window is not None and (isinstance(window, bool) or not isinstance(window, int) or window < 1):
            raise ValueError(f'window must be a positive integer, got {window!r}')
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise CheckpointFormatError(f'malformed checkpoint header: {exc}') from exc
    try:
        params = NetworkParams.from_layer_dims(
            header['layer_dims'],
            header['head_kind'],
            FeatureNormalization.from_dict(header['normalization']),
            GridGeometry.from_dict(header['geometry']),
            header['delta_seconds'],
            header.get('init_recipe', ''),
            window,
        )
    except PredictorError as exc:
        raise CheckpointShapeError(f'checkpoint architecture is inconsistent: {exc}') from exc
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise CheckpointFormatError(f'malformed checkpoint header: {exc}') from exc

    expected = params.named_tensors()
    (count,) = reader.unpack('<I')
    if count != len(expected):
        raise CheckpointShapeError(f'checkpoint holds {count} tensors, architecture needs {len(expected)}')
    for name, target in expected.items():
        (name_length,) = reader.unpack('<H')
        stored_name = reader.take(name_length).decode('utf-8', errors='replace')
        (ndim,) = reader.unpack('<B')
        shape = reader.unpack(f'<{ndim}I')
        if stored_name != name:
            raise CheckpointShapeError(f'expected tensor {name!r}, found {stored_name!r}')
        if tuple(shape) != target.shape:
            raise CheckpointShapeError(f'tensor {name!r} has shape {tuple(shape)}, expected {target.shape}')
        raw = reader.take(target.size * 8)
        target[...] = np.frombuffer(raw, dtype='<f8').reshape(target.shape)

    digest = reader.take(_DIGEST_SIZE)
    if reader.offset != len(data):
        raise CheckpointFormatError(f'{len(data) - reader.offset} unexpected trailing bytes')
    if hashlib.sha256(data[:-_DIGEST_SIZE]).digest() != digest:
        raise CheckpointChecksumError('checkpoint checksum mismatch')
    return params


def write_checkpoint(params: NetworkParams, path: str) -> str:
    with open(path, 'wb') as fh:
        fh.write(save_checkpoint(params))
    logger.info('Wrote %s checkpoint for delta=%.2fs to %s', params.head_kind, params.delta, path)
    return path


def read_checkpoint(path: Union[str, bytes]) -> NetworkParams:
    with open(path, 'rb') as fh:
        return load_checkpoint(fh.read())
