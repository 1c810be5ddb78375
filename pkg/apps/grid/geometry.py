"""
Occupancy grid geometry, cell addressing and labels.

The grid lives in the ego frame: x is longitudinal (ahead of the ego vehicle),
y is lateral. Cells are half-open rectangles [low, high) on both axes and are
addressed with 1-based (i_x, i_y) indices. Class ids are 0-based and run
i_x-major: ``(i_x - 1) * m_y + (i_y - 1)``; the out-of-boundary class is
``m_x * m_y``.
"""
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np

from apps.common.exceptions import ArgumentError, GridIndexError, InvalidCoordinateError


@dataclass(frozen=True)
class GridGeometry:
    m_x: int = 36
    m_y: int = 21
    cell_length: float = 5.0
    cell_width: float = 0.875
    x_min: float = 0.0
    y_min: Optional[float] = None

    def __post_init__(self):
        if self.m_x < 1 or self.m_y < 1:
            raise ArgumentError(f'grid needs at least one cell per axis, got {self.m_x}x{self.m_y}')
        if not (self.cell_length > 0 and self.cell_width > 0):
            raise ArgumentError('cell sizes must be positive')
        if self.y_min is None:
            # lateral extent is centered on the ego vehicle
            object.__setattr__(self, 'y_min', -(self.m_y * self.cell_width) / 2.0)

    @property
    def num_cells(self) -> int:
        return self.m_x * self.m_y

    def total_classes(self) -> int:
        return self.num_cells + 1

    @property
    def oob_class(self) -> int:
        return self.num_cells

    @property
    def x_max(self) -> float:
        return self.x_min + self.m_x * self.cell_length

    @property
    def y_max(self) -> float:
        return self.y_min + self.m_y * self.cell_width

    def contains(self, x: float, y: float) -> bool:
        return self.x_min <= x < self.x_max and self.y_min <= y < self.y_max

    def to_dict(self) -> Dict[str, Any]:
        return {
            'm_x': self.m_x,
            'm_y': self.m_y,
            'cell_length': self.cell_length,
            'cell_width': self.cell_width,
            'x_min': self.x_min,
            'y_min': self.y_min,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'GridGeometry':
        return cls(
            m_x=int(data['m_x']),
            m_y=int(data['m_y']),
            cell_length=float(data['cell_length']),
            cell_width=float(data['cell_width']),
            x_min=float(data.get('x_min', 0.0)),
            y_min=None if data.get('y_min') is None else float(data['y_min']),
        )


@dataclass(frozen=True, order=True)
class GridIndex:
    i_x: int
    i_y: int

    def validate(self, geometry: GridGeometry) -> 'GridIndex':
        if not (1 <= self.i_x <= geometry.m_x and 1 <= self.i_y <= geometry.m_y):
            raise GridIndexError(
                f'index ({self.i_x}, {self.i_y}) outside {geometry.m_x}x{geometry.m_y} grid'
            )
        return self


@dataclass(frozen=True)
class CellLabel:
    """Either an in-grid cell or the out-of-boundary class (``index is None``)."""

    index: Optional[GridIndex] = field(default=None)

    @classmethod
    def in_grid(cls, i_x: int, i_y: int) -> 'CellLabel':
        return cls(GridIndex(i_x, i_y))

    @classmethod
    def out_of_boundary(cls) -> 'CellLabel':
        return cls(None)

    @property
    def is_oob(self) -> bool:
        return self.index is None

    def linear_class(self, geometry: GridGeometry) -> int:
        if self.index is None:
            return geometry.oob_class
        idx = self.index.validate(geometry)
        return (idx.i_x - 1) * geometry.m_y + (idx.i_y - 1)

    @classmethod
    def from_linear(cls, geometry: GridGeometry, class_id: int) -> 'CellLabel':
        if not 0 <= class_id <= geometry.oob_class:
            raise GridIndexError(f'class id {class_id} outside [0, {geometry.oob_class}]')
        if class_id == geometry.oob_class:
            return cls.out_of_boundary()
        i_x, i_y = divmod(int(class_id), geometry.m_y)
        return cls.in_grid(i_x + 1, i_y + 1)

    def one_hot(self, geometry: GridGeometry) -> np.ndarray:
        vec = np.zeros(geometry.total_classes())
        vec[self.linear_class(geometry)] = 1.0
        return vec

    def __str__(self) -> str:
        if self.index is None:
            return 'OutOfBoundary'
        return f'InGrid({self.index.i_x}, {self.index.i_y})'


def _axis_index(value: float, origin: float, size: float) -> int:
    return math.floor((value - origin) / size) + 1


def coord_to_label(geometry: GridGeometry, x: float, y: float) -> CellLabel:
    """Map an ego-relative point (meters) to the cell that contains it."""
    if not (math.isfinite(x) and math.isfinite(y)):
        raise InvalidCoordinateError(f'non-finite coordinate ({x}, {y})')
    i_x = _axis_index(x, geometry.x_min, geometry.cell_length)
    i_y = _axis_index(y, geometry.y_min, geometry.cell_width)
    if 1 <= i_x <= geometry.m_x and 1 <= i_y <= geometry.m_y:
        return CellLabel.in_grid(i_x, i_y)
    return CellLabel.out_of_boundary()


def coords_to_classes(geometry: GridGeometry, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Vectorised ``coord_to_label(...).linear_class`` over coordinate arrays."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
        raise InvalidCoordinateError('non-finite coordinate in batch')
    f_x = np.floor((xs - geometry.x_min) / geometry.cell_length)
    f_y = np.floor((ys - geometry.y_min) / geometry.cell_width)
    inside = (f_x >= 0) & (f_x < geometry.m_x) & (f_y >= 0) & (f_y < geometry.m_y)
    # far-away points would overflow the integer cast
    f_x = np.where(inside, f_x, 0).astype(np.int64)
    f_y = np.where(inside, f_y, 0).astype(np.int64)
    return np.where(inside, f_x * geometry.m_y + f_y, geometry.oob_class)


def cell_center(geometry: GridGeometry, idx: GridIndex) -> Tuple[float, float]:
    """Midpoint (meters) of the cell rectangle addressed by ``idx``."""
    idx.validate(geometry)
    x = geometry.x_min + (idx.i_x - 0.5) * geometry.cell_length
    y = geometry.y_min + (idx.i_y - 0.5) * geometry.cell_width
    return x, y


def index_grids(geometry: GridGeometry) -> Tuple[np.ndarray, np.ndarray]:
    """1-based (i_x, i_y) of every cell, flattened in class-id order."""
    i_x, i_y = np.meshgrid(
        np.arange(1, geometry.m_x + 1), np.arange(1, geometry.m_y + 1), indexing='ij'
    )
    return i_x.ravel(), i_y.ravel()
