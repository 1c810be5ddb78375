"""
Line-delimited JSON trajectory files and their manifest sidecar.

Each line is one sample::

    {"t": 0.05, "track_id": "00003-cruise", "x": 41.2, "y": -3.4,
     "vx": -1.1, "vy": 0.02, "ego_yaw_rate": 0.001, "ego_speed": 27.3}
"""
import json
import logging
import math
import os
from collections import OrderedDict
from typing import Any, Dict, Iterable, List, Sequence

from apps.common.exceptions import DataError, SchemaError
from .records import JSONL_FIELDS, RawSample

logger = logging.getLogger(__name__)


def _record(sample: RawSample) -> Dict[str, Any]:
    return {key: getattr(sample, attr) for key, attr in JSONL_FIELDS}


def write_jsonl(path: str, tracks: Iterable[Sequence[RawSample]]) -> int:
    """Write every sample of every track, track by track; returns the line count."""
    count = 0
    with open(path, 'w', encoding='utf-8') as fh:
        for track in tracks:
            for sample in track:
                try:
                    fh.write(json.dumps(_record(sample), allow_nan=False))
                except ValueError as exc:
                    raise DataError(f'track {sample.track_id} at t={sample.t}: {exc}') from exc
                fh.write('\n')
                count += 1
    logger.info('Wrote %d samples to %s', count, path)
    return count


def _parse_line(text: str, line: int) -> RawSample:
    try:
        record = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f'invalid JSON ({exc.msg})', line) from exc
    if not isinstance(record, dict):
        raise SchemaError('record must be a JSON object', line)
    values = {}
    for key, attr in JSONL_FIELDS:
        if key not in record:
            raise SchemaError('missing required field', line, key)
        value = record[key]
        if key == 'track_id':
            if not isinstance(value, str) or not value:
                raise SchemaError('track_id must be a non-empty string', line, key)
        else:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise SchemaError(f'expected a number, got {value!r}', line, key)
            value = float(value)
            if not math.isfinite(value):
                raise SchemaError('value must be finite', line, key)
        values[attr] = value
    return RawSample(**values)


def read_jsonl(path: str) -> List[List[RawSample]]:
    """Tracks in order of first appearance; blank lines are ignored."""
    tracks: 'OrderedDict[str, List[RawSample]]' = OrderedDict()
    with open(path, 'rb') as fh:
        for line, raw in enumerate(fh, start=1):
            try:
                text = raw.decode('utf-8', errors='strict')
            except UnicodeDecodeError as exc:
                raise SchemaError(f'not valid UTF-8 ({exc.reason} at byte {exc.start})', line) from exc
            if not text.strip():
                continue
            sample = _parse_line(text, line)
            tracks.setdefault(sample.track_id, []).append(sample)
    return list(tracks.values())


def write_manifest(path: str, payload: Dict[str, Any]) -> str:
    with open(path, 'w', encoding='utf-8') as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write('\n')
    return path


def read_manifest(directory: str, name: str = 'manifest.json') -> Dict[str, Any]:
    path = os.path.join(directory, name)
    if not os.path.exists(path):
        return {}
    with open(path, 'r', encoding='utf-8') as fh:
        return json.load(fh)
