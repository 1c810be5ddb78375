"""
Occupancy maps and the complement-product fusion of several maps.
"""
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from apps.common.exceptions import ArgumentError, FusionError, NumericError
from .geometry import CellLabel, GridGeometry, GridIndex, cell_center

# tolerance for entries that leave [0, 1] through rounding only
_RANGE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class OccupancyMap:
    """Per-cell occupancy probabilities plus the out-of-boundary class.

    ``p`` is flat in class-id order (length ``m_x * m_y``). A softmax head yields
    a distribution (``p.sum() + p_oob == 1``); a fused map does not.
    """

    geometry: GridGeometry
    p: np.ndarray
    p_oob: float

    def __post_init__(self):
        p = np.array(self.p, dtype=float).ravel()
        if p.shape[0] != self.geometry.num_cells:
            raise ArgumentError(
                f'map has {p.shape[0]} cells, geometry expects {self.geometry.num_cells}'
            )
        p_oob = float(self.p_oob)
        if not (np.all(np.isfinite(p)) and np.isfinite(p_oob)):
            raise NumericError('non-finite occupancy probability')
        if p.min(initial=0.0) < -_RANGE_TOL or p.max(initial=0.0) > 1 + _RANGE_TOL \
                or not -_RANGE_TOL <= p_oob <= 1 + _RANGE_TOL:
            raise NumericError('occupancy probability outside [0, 1]')
        p = np.clip(p, 0.0, 1.0)
        p.setflags(write=False)
        object.__setattr__(self, 'p', p)
        object.__setattr__(self, 'p_oob', min(max(p_oob, 0.0), 1.0))

    @classmethod
    def from_class_probabilities(cls, geometry: GridGeometry, z: np.ndarray) -> 'OccupancyMap':
        """Split a (m_x*m_y + 1)-vector of class probabilities into cells and p_oob."""
        z = np.asarray(z, dtype=float)
        if z.shape != (geometry.total_classes(),):
            raise ArgumentError(f'expected {geometry.total_classes()} class probabilities, got {z.shape}')
        return cls(geometry, z[:-1], float(z[-1]))

    def class_probabilities(self) -> np.ndarray:
        return np.append(self.p, self.p_oob)

    def grid(self) -> np.ndarray:
        """Probabilities as an (m_x, m_y) array indexed [i_x - 1, i_y - 1]."""
        return self.p.reshape(self.geometry.m_x, self.geometry.m_y)

    def probability(self, idx: GridIndex) -> float:
        return float(self.p[CellLabel(idx).linear_class(self.geometry)])

    @property
    def in_grid_mass(self) -> float:
        return float(self.p.sum())

    def total_mass(self) -> float:
        return self.in_grid_mass + self.p_oob

    def top_k(self, k: int) -> List[Tuple[GridIndex, float, Tuple[float, float]]]:
        """The ``k`` most probable cells with their probability and center (meters)."""
        k = max(0, min(int(k), self.geometry.num_cells))
        # stable sort keeps lower class ids first on ties
        order = np.argsort(-self.p, kind='stable')[:k]
        cells = []
        for class_id in order:
            idx = CellLabel.from_linear(self.geometry, int(class_id)).index
            cells.append((idx, float(self.p[class_id]), cell_center(self.geometry, idx)))
        return cells


def fuse_maps(maps: Sequence[OccupancyMap]) -> OccupancyMap:
    """Combine per-vehicle maps: P = 1 - prod_i (1 - P_i), cell by cell and for p_oob.

    Complements are multiplied in sorted order per cell so the result does not
    depend on the order of ``maps``.
    """
    if not maps:
        raise ArgumentError('fuse_maps needs at least one map')
    geometry = maps[0].geometry
    for m in maps[1:]:
        if m.geometry != geometry:
            raise FusionError('cannot fuse maps defined on different geometries')
    if len(maps) == 1:
        return maps[0]
    complements = np.sort(1.0 - np.stack([m.class_probabilities() for m in maps]), axis=0)
    fused = 1.0 - np.prod(complements, axis=0)
    return OccupancyMap.from_class_probabilities(geometry, fused)
