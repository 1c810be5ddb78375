"""
Loading a generated dataset directory into windowed, split examples.
"""
import logging
import os
from typing import List, Optional

from apps.common.exceptions import DataError
from apps.grid.geometry import GridGeometry
from apps.trajectories.jsonl import read_jsonl
from apps.trajectories.records import DatasetSplit, RawSample, TrackWindow
from apps.trajectories.split import split_by_track
from apps.trajectories.windows import build_dataset_windows, horizon_steps
from . import RESAMPLED_TRACKS

logger = logging.getLogger(__name__)


def load_tracks(data_dir: str) -> List[List[RawSample]]:
    path = os.path.join(data_dir, RESAMPLED_TRACKS)
    if not os.path.exists(path):
        raise DataError(f'no resampled tracks at {path}; run generate first')
    return read_jsonl(path)


def load_windows(data_dir: str, delta: float, window: int, geometry: GridGeometry) -> List[TrackWindow]:
    tracks = load_tracks(data_dir)
    windows = build_dataset_windows(tracks, delta, window, geometry)
    if not windows:
        needed = window + horizon_steps(delta)
        raise DataError(
            f'dataset too small: no track has {needed} consecutive in-range samples '
            f'(window of {window} plus {delta}s horizon)'
        )
    return windows


def load_split(data_dir: str, delta: float, window: int, geometry: GridGeometry,
               ratio: float, seed: int, scenario: Optional[str] = None) -> DatasetSplit:
    """Per-track split of the dataset's windows; ``scenario`` keeps one scenario kind only."""
    windows = load_windows(data_dir, delta, window, geometry)
    split = split_by_track(windows, ratio, seed)
    if scenario:
        split = DatasetSplit(
            train=[w for w in split.train if w.scenario == scenario],
            validation=[w for w in split.validation if w.scenario == scenario],
        )
    logger.info('Split %d windows into %d train / %d validation (seed %d)',
                len(windows), len(split.train), len(split.validation), seed)
    return split
