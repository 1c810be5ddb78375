"""
Constant-velocity Kalman filter baseline.

State is (x, y, x_dot, y_dot) in the ego frame. Process noise is white
acceleration with separate longitudinal and lateral intensities; only the
position is measured. Predict/update come from ``filterpy``; the predictive
density is gridded with per-axis Gaussian CDF differences.
"""
import logging
from dataclasses import dataclass, replace
from typing import Sequence, Tuple

import numpy as np
from filterpy.common import Q_discrete_white_noise
from filterpy.kalman import predict, update
from scipy.stats import norm

from apps.common.exceptions import ArgumentError, FilterDivergenceError
from apps.grid.geometry import GridGeometry
from apps.grid.maps import OccupancyMap

logger = logging.getLogger(__name__)

MEASUREMENT_MATRIX = np.array([[1.0, 0.0, 0.0, 0.0],
                               [0.0, 1.0, 0.0, 0.0]])

SYMMETRY_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class KfTrack:
    mean: np.ndarray
    covariance: np.ndarray
    q_accel: Tuple[float, float] = (0.5, 0.3)
    r_pos: float = 0.3

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float).reshape(4)
        covariance = np.array(self.covariance, dtype=float).reshape(4, 4)
        object.__setattr__(self, 'mean', mean)
        object.__setattr__(self, 'covariance', covariance)
        object.__setattr__(self, 'q_accel', tuple(float(q) for q in self.q_accel))
        if len(self.q_accel) != 2 or min(self.q_accel) < 0 or self.r_pos <= 0:
            raise ArgumentError('q_accel needs two non-negative entries and r_pos must be positive')

    @classmethod
    def initiate(
        cls,
        position: Sequence[float],
        velocity: Sequence[float] = (0.0, 0.0),
        q_accel: Tuple[float, float] = (0.5, 0.3),
        r_pos: float = 0.3,
        velocity_std: float = 1.0,
    ) -> 'KfTrack':
        """Track seeded from a first position fix and a velocity guess."""
        mean = np.r_[np.asarray(position, dtype=float), np.asarray(velocity, dtype=float)]
        covariance = np.diag([r_pos ** 2, r_pos ** 2, velocity_std ** 2, velocity_std ** 2])
        return cls(mean, covariance, q_accel, r_pos)

    @property
    def position(self) -> Tuple[float, float]:
        return float(self.mean[0]), float(self.mean[1])

    @property
    def velocity(self) -> Tuple[float, float]:
        return float(self.mean[2]), float(self.mean[3])


def transition_matrix(dt: float) -> np.ndarray:
    F = np.eye(4)
    F[0, 2] = F[1, 3] = dt
    return F


def process_noise(dt: float, q_accel: Tuple[float, float]) -> np.ndarray:
    """Discrete white-acceleration noise, one (position, velocity) block per axis."""
    Q = np.zeros((4, 4))
    for axis, q in enumerate(q_accel):
        idx = [axis, axis + 2]
        Q[np.ix_(idx, idx)] = Q_discrete_white_noise(dim=2, dt=dt, var=q ** 2)
    return Q


def _diverged(reason: str) -> FilterDivergenceError:
    logger.warning('Kalman filter diverged: %s', reason)
    return FilterDivergenceError(reason)


def _checked(covariance: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(covariance)):
        raise _diverged('covariance became non-finite')
    if np.max(np.abs(covariance - covariance.T)) > SYMMETRY_TOL * max(1.0, np.max(np.abs(covariance))):
        raise _diverged('covariance lost symmetry')
    covariance = 0.5 * (covariance + covariance.T)
    try:
        np.linalg.cholesky(covariance)
    except np.linalg.LinAlgError as exc:
        raise _diverged('covariance is not positive definite') from exc
    return covariance


def kf_propagate(track: KfTrack, delta: float) -> Tuple[np.ndarray, np.ndarray]:
    """Mean and covariance ``delta`` seconds ahead under the constant-velocity model."""
    if not delta > 0:
        raise ArgumentError(f'prediction horizon must be positive, got {delta}')
    mean, covariance = predict(track.mean, track.covariance, F=transition_matrix(delta),
                               Q=process_noise(delta, track.q_accel))
    return mean, _checked(covariance)


def kf_update(track: KfTrack, measurement: Sequence[float], dt: float) -> KfTrack:
    """One predict/update cycle: advance ``dt`` seconds, then fuse a position fix."""
    z = np.asarray(measurement, dtype=float)
    if z.shape != (2,) or not np.all(np.isfinite(z)):
        raise ArgumentError(f'measurement must be a finite (x, y) pair, got {measurement!r}')
    mean, covariance = kf_propagate(track, dt)
    R = np.eye(2) * track.r_pos ** 2
    mean, covariance = update(mean, covariance, z, R, MEASUREMENT_MATRIX)
    return replace(track, mean=mean, covariance=_checked(covariance))


def kf_filter(track: KfTrack, measurements: Sequence[Sequence[float]], dt: float) -> KfTrack:
    for z in measurements:
        track = kf_update(track, z, dt)
    return track


def kf_predict_point(track: KfTrack, delta: float) -> Tuple[float, float]:
    if not delta > 0:
        raise ArgumentError(f'prediction horizon must be positive, got {delta}')
    x, y, x_dot, y_dot = track.mean
    return float(x + x_dot * delta), float(y + y_dot * delta)


def kf_predict_grid(track: KfTrack, delta: float, geometry: GridGeometry) -> OccupancyMap:
    """Predictive position density integrated over every cell.

    Cells get the product of the per-axis CDF differences (the x/y
    cross-covariance is ignored); whatever mass falls outside the grid is
    assigned to the out-of-boundary class.
    """
    mean, covariance = kf_propagate(track, delta)
    sigma_x = np.sqrt(covariance[0, 0])
    sigma_y = np.sqrt(covariance[1, 1])
    x_edges = geometry.x_min + np.arange(geometry.m_x + 1) * geometry.cell_length
    y_edges = geometry.y_min + np.arange(geometry.m_y + 1) * geometry.cell_width
    p_x = np.diff(norm.cdf(x_edges, loc=mean[0], scale=sigma_x))
    p_y = np.diff(norm.cdf(y_edges, loc=mean[1], scale=sigma_y))
    p = np.clip(np.outer(p_x, p_y).ravel(), 0.0, 1.0)
    p_oob = min(max(1.0 - float(p.sum()), 0.0), 1.0)
    return OccupancyMap(geometry, p, p_oob)
