"""
Averaging resampler: raw 10 ms samples to 100 ms bins.
"""
from typing import List, Sequence

import numpy as np

from apps.common.exceptions import ArgumentError
from .records import NUMERIC_ATTRS, RawSample

SAMPLE_PERIOD = 0.1


def bin_indices(times: np.ndarray, period: float = SAMPLE_PERIOD) -> np.ndarray:
    """Bin k covers [k * period, (k + 1) * period); the division is rounded to 1e-9 first."""
    return np.floor(np.round(np.asarray(times, dtype=float) / period, 9)).astype(np.int64)


def resample_100ms(samples: Sequence[RawSample], period: float = SAMPLE_PERIOD) -> List[RawSample]:
    """Average every field over each populated bin; the output is stamped at the bin center.

    Empty bins produce nothing, so gaps in the input survive as gaps.
    """
    if not samples:
        return []
    track_ids = {s.track_id for s in samples}
    if len(track_ids) != 1:
        raise ArgumentError(f'resample one track at a time, got {len(track_ids)} track ids')
    times = np.array([s.t for s in samples], dtype=float)
    if np.any(np.diff(times) <= 0):
        raise ArgumentError('samples must be sorted by strictly increasing time')
    values = np.array([s.values() for s in samples], dtype=float)
    bins = bin_indices(times, period)
    starts = np.flatnonzero(np.r_[True, np.diff(bins) != 0])
    stops = np.r_[starts[1:], len(samples)]
    track_id = samples[0].track_id
    out = []
    for start, stop in zip(starts, stops):
        mean = values[start:stop].mean(axis=0)
        out.append(RawSample((bins[start] + 0.5) * period, track_id,
                             **{name: float(v) for name, v in zip(NUMERIC_ATTRS, mean)}))
    return out
