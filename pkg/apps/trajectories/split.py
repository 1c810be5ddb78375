from typing import Sequence

import numpy as np

from apps.common.exceptions import ArgumentError
from .records import DatasetSplit, TrackWindow


def split_by_track(windows: Sequence[TrackWindow], ratio: float = 0.85, seed: int = 0) -> DatasetSplit:
    """Seeded per-track split; every window of a vehicle lands on the same side."""
    if not 0 < ratio < 1:
        raise ArgumentError(f'split ratio must lie in (0, 1), got {ratio}')
    track_ids = sorted({w.track_id for w in windows})
    if len(track_ids) < 2:
        raise ArgumentError(f'need at least 2 tracks to split, got {len(track_ids)}')
    order = np.random.default_rng(seed).permutation(len(track_ids))
    n_train = min(max(int(round(ratio * len(track_ids))), 1), len(track_ids) - 1)
    train_ids = {track_ids[i] for i in order[:n_train]}
    return DatasetSplit(
        train=[w for w in windows if w.track_id in train_ids],
        validation=[w for w in windows if w.track_id not in train_ids],
    )
