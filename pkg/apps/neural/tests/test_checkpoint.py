import json
import os
import struct
import tempfile

import numpy as np
from django.test import SimpleTestCase

from apps.common.exceptions import (
    CheckpointChecksumError,
    CheckpointError,
    CheckpointFormatError,
    CheckpointShapeError,
    CheckpointTruncatedError,
    CheckpointVersionError,
)
from apps.neural.checkpoint import MAGIC, load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint
from apps.neural.params import FeatureNormalization

from .factories import TINY_GEOMETRY, tiny_network


def rewrite_header(blob, edit):
    """Re-emit a checkpoint with an edited header (checksum left stale)."""
    offset = len(MAGIC)
    (length,) = struct.unpack('<I', blob[offset:offset + 4])
    header = json.loads(blob[offset + 4:offset + 4 + length])
    edit(header)
    encoded = json.dumps(header, sort_keys=True).encode('utf-8')
    return MAGIC + struct.pack('<I', len(encoded)) + encoded + blob[offset + 4 + length:]


class CheckpointTests(SimpleTestCase):
    def setUp(self):
        self.params = tiny_network(seed=12)
        self.params.normalization = FeatureNormalization(
            offset=np.arange(6) * 0.1, scale=np.arange(1, 7) * 0.7,
            target_offset=np.array([30.0, 0.2]), target_scale=np.array([12.0, 1.1]),
        )
        self.blob = save_checkpoint(self.params)

    def test_round_trip_is_bit_exact(self):
        loaded = load_checkpoint(self.blob)
        for (name, a), (_, b) in zip(self.params.named_tensors().items(), loaded.named_tensors().items()):
            self.assertEqual(a.tobytes(), b.tobytes(), msg=name)
        self.assertEqual(loaded.geometry, TINY_GEOMETRY)
        self.assertEqual(loaded.head_kind, 'grid')
        self.assertEqual(loaded.delta, 0.5)
        self.assertEqual(loaded.normalization.to_dict(), self.params.normalization.to_dict())
        self.assertEqual(loaded.init_recipe, self.params.init_recipe)
        self.assertEqual(save_checkpoint(loaded), self.blob)

    def test_delta_metadata(self):
        params = tiny_network(seed=1, head_kind='regress', delta=2.0)
        self.assertEqual(load_checkpoint(save_checkpoint(params)).delta, 2.0)

    def test_file_round_trip(self):
        with tempfile.TemporaryDirectory() as tmpdir:
            path = write_checkpoint(self.params, os.path.join(tmpdir, 'grid_0.5.ckpt'))
            self.assertEqual(save_checkpoint(read_checkpoint(path)), self.blob)

    def test_truncation_anywhere(self):
        cuts = list(range(0, 200)) + list(range(200, len(self.blob), 97)) + [len(self.blob) - 1]
        for cut in cuts:
            with self.assertRaises(CheckpointTruncatedError, msg=f'cut at {cut}'):
                load_checkpoint(self.blob[:cut])

    def test_corrupted_length_field(self):
        broken = bytearray(self.blob)
        broken[len(MAGIC):len(MAGIC) + 4] = struct.pack('<I', 7)
        with self.assertRaises(CheckpointError):
            load_checkpoint(bytes(broken))
        broken[len(MAGIC):len(MAGIC) + 4] = struct.pack('<I', 2 ** 31)
        with self.assertRaises(CheckpointError):
            load_checkpoint(bytes(broken))

    def test_bad_magic(self):
        with self.assertRaises(CheckpointFormatError):
            load_checkpoint(b'PK\x03\x04' + self.blob[4:])

    def test_version_mismatch(self):
        blob = rewrite_header(self.blob, lambda h: h.update(format_version=99))
        with self.assertRaises(CheckpointVersionError):
            load_checkpoint(blob)

    def test_shape_mismatch(self):
        def widen(header):
            header['layer_dims']['lstm'][1] = [8, 9]
            header['layer_dims']['output_fc'][0][0] = 9
        with self.assertRaises(CheckpointShapeError):
            load_checkpoint(rewrite_header(self.blob, widen))

    def test_flipped_payload_byte(self):
        broken = bytearray(self.blob)
        broken[-40] ^= 0x01
        with self.assertRaises(CheckpointChecksumError):
            load_checkpoint(bytes(broken))

    def test_trailing_bytes(self):
        with self.assertRaises(CheckpointFormatError):
            load_checkpoint(self.blob + b'\x00')

    def test_window_metadata(self):
        self.assertIsNone(load_checkpoint(self.blob).window)
        self.params.window = 12
        self.assertEqual(load_checkpoint(save_checkpoint(self.params)).window, 12)
        blob = rewrite_header(self.blob, lambda h: h.update(window='twenty'))
        with self.assertRaises(CheckpointFormatError):
            load_checkpoint(blob)

    def test_huge_layer_refused_before_allocation(self):
        def inflate(header):
            header['layer_dims']['head'] = [8, 10 ** 12]
        with self.assertRaises(CheckpointTruncatedError):
            load_checkpoint(rewrite_header(self.blob, inflate))

        def negative(header):
            header['layer_dims']['lstm'][0] = [6, -8]
        with self.assertRaises(CheckpointFormatError):
            load_checkpoint(rewrite_header(self.blob, negative))
