"""
Trajectory records shared by the data pipeline.
"""
from dataclasses import dataclass, field
from typing import List, Optional, Set, Tuple

import numpy as np

from apps.grid.geometry import CellLabel
from apps.neural.params import FeatureVector

# JSONL field name -> RawSample attribute
JSONL_FIELDS = (
    ('t', 't'),
    ('track_id', 'track_id'),
    ('x', 'x'),
    ('y', 'y'),
    ('vx', 'x_dot'),
    ('vy', 'y_dot'),
    ('ego_yaw_rate', 'ego_yaw_rate'),
    ('ego_speed', 'ego_speed'),
)

NUMERIC_ATTRS = ('x', 'y', 'x_dot', 'y_dot', 'ego_yaw_rate', 'ego_speed')


@dataclass(frozen=True)
class RawSample:
    """One observation of a target vehicle in the ego frame."""

    t: float
    track_id: str
    x: float
    y: float
    x_dot: float
    y_dot: float
    ego_yaw_rate: float
    ego_speed: float

    def feature_vector(self) -> FeatureVector:
        return FeatureVector(self.x, self.y, self.x_dot, self.y_dot, self.ego_yaw_rate, self.ego_speed)

    def values(self) -> Tuple[float, ...]:
        return tuple(getattr(self, name) for name in NUMERIC_ATTRS)


@dataclass
class TrackWindow:
    """A fixed-length feature window and the label ``delta`` seconds after its last step."""

    features: np.ndarray  # (window, 6)
    label_grid: CellLabel
    label_point: Tuple[float, float]
    delta: float
    track_id: str
    t_end: float
    label_time: float
    feature_times: Optional[np.ndarray] = None

    @property
    def scenario(self) -> str:
        """Scenario kind encoded in generated track ids ('00042-lane_change')."""
        return self.track_id.split('-', 1)[1] if '-' in self.track_id else ''


@dataclass
class DatasetSplit:
    train: List[TrackWindow] = field(default_factory=list)
    validation: List[TrackWindow] = field(default_factory=list)

    @property
    def train_tracks(self) -> Set[str]:
        return {w.track_id for w in self.train}

    @property
    def validation_tracks(self) -> Set[str]:
        return {w.track_id for w in self.validation}
