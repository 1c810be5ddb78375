"""
Sliding-window examples with labels taken ``delta`` seconds after the window.
"""
import logging
from typing import Dict, Iterable, List, Sequence

import numpy as np

from apps.common.exceptions import ArgumentError
from apps.grid.geometry import GridGeometry, coord_to_label, coords_to_classes
from apps.neural.training import ExampleSet
from .records import RawSample, TrackWindow
from .resample import SAMPLE_PERIOD

logger = logging.getLogger(__name__)


def horizon_steps(delta: float, period: float = SAMPLE_PERIOD) -> int:
    steps = int(round(delta / period))
    if steps < 1 or abs(steps * period - delta) > 1e-9:
        raise ArgumentError(f'delta {delta} is not a positive multiple of the {period} s sample period')
    return steps


def _segments(track: Sequence[RawSample], period: float) -> List[Sequence[RawSample]]:
    """Split a resampled track wherever consecutive samples are not one period apart."""
    steps = np.round(np.diff([s.t for s in track]) / period, 6)
    breaks = np.flatnonzero(steps != 1.0) + 1
    edges = [0, *breaks.tolist(), len(track)]
    return [track[a:b] for a, b in zip(edges[:-1], edges[1:])]


def build_windows(
    track: Sequence[RawSample],
    delta: float,
    window: int,
    geometry: GridGeometry,
    period: float = SAMPLE_PERIOD,
) -> List[TrackWindow]:
    """All stride-1 windows of one resampled track that have a sample exactly ``delta`` later.

    Windows never span a gap. Windows whose features leave the grid's range
    are skipped; a label outside the grid becomes the out-of-boundary class.
    """
    steps = horizon_steps(delta, period)
    if window < 1:
        raise ArgumentError(f'window must be at least one step, got {window}')
    if not track:
        return []
    if len({s.track_id for s in track}) != 1:
        raise ArgumentError('build_windows expects samples of a single track')
    times = np.array([s.t for s in track])
    if np.any(np.diff(times) <= 0):
        raise ArgumentError('samples must be sorted by strictly increasing time')

    windows = []
    for segment in _segments(track, period):
        features = np.array([s.feature_vector() for s in segment], dtype=float)
        inside = np.array([geometry.contains(s.x, s.y) for s in segment])
        for start in range(len(segment) - window - steps + 1):
            stop = start + window
            if not inside[start:stop].all():
                continue
            end, label = segment[stop - 1], segment[stop - 1 + steps]
            windows.append(TrackWindow(
                features=features[start:stop],
                label_grid=coord_to_label(geometry, label.x, label.y),
                label_point=(label.x, label.y),
                delta=delta,
                track_id=end.track_id,
                t_end=end.t,
                label_time=label.t,
                feature_times=np.array([s.t for s in segment[start:stop]]),
            ))
    return windows


def build_dataset_windows(
    tracks: Iterable[Sequence[RawSample]],
    delta: float,
    window: int,
    geometry: GridGeometry,
) -> List[TrackWindow]:
    """Windows of every track, ordered by track id."""
    by_id: Dict[str, Sequence[RawSample]] = {t[0].track_id: t for t in tracks if t}
    windows = []
    for track_id in sorted(by_id):
        windows.extend(build_windows(by_id[track_id], delta, window, geometry))
    logger.info('Built %d windows (delta=%.1fs, window=%d) from %d tracks',
                len(windows), delta, window, len(by_id))
    return windows


def stack_windows(windows: Sequence[TrackWindow], geometry: GridGeometry) -> ExampleSet:
    if not windows:
        raise ArgumentError('no windows to stack')
    features = np.stack([w.features for w in windows])
    points = np.array([w.label_point for w in windows], dtype=float)
    classes = coords_to_classes(geometry, points[:, 0], points[:, 1])
    return ExampleSet(features, classes, points)
