"""
Scene-level prediction: one occupancy map per tracked vehicle, fused into one.
"""
import logging
from typing import List, Optional, Sequence

import numpy as np

from apps.common.exceptions import ArgumentError
from apps.grid.maps import OccupancyMap, fuse_maps
from .network import forward
from .params import HEAD_GRID, NetworkParams

logger = logging.getLogger(__name__)


def predict_tracks(params: NetworkParams, tracks: Sequence[np.ndarray]) -> List[OccupancyMap]:
    if params.head_kind != HEAD_GRID:
        raise ArgumentError('fleet prediction needs a grid-head network')
    return [forward(params, track)[0] for track in tracks]


def predict_fleet(params: NetworkParams, tracks: Sequence[np.ndarray],
                  max_tracks: Optional[int] = None) -> OccupancyMap:
    """Fused occupancy of every vehicle in ``tracks`` (each a (T, 6) feature sequence)."""
    if not tracks:
        raise ArgumentError('fleet prediction needs at least one track')
    if max_tracks is not None and len(tracks) > max_tracks:
        raise ArgumentError(f'{len(tracks)} tracks exceed the limit of {max_tracks}')
    maps = predict_tracks(params, tracks)
    logger.debug('Fusing %d per-vehicle maps', len(maps))
    return fuse_maps(maps)
