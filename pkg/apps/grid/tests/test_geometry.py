import math

import numpy as np
from django.test import SimpleTestCase

from apps.common.exceptions import ArgumentError, GridIndexError, InvalidCoordinateError
from apps.grid.geometry import (
    CellLabel,
    GridGeometry,
    GridIndex,
    cell_center,
    coord_to_label,
    coords_to_classes,
)


class GridGeometryTests(SimpleTestCase):
    def test_default_geometry(self):
        g = GridGeometry()
        self.assertEqual((g.m_x, g.m_y), (36, 21))
        self.assertAlmostEqual(g.y_min, -9.1875, places=12)
        self.assertAlmostEqual(g.y_max, 9.1875, places=12)
        self.assertEqual(g.x_max, 180.0)
        self.assertEqual(g.total_classes(), 757)

    def test_invalid_geometry(self):
        with self.assertRaises(ArgumentError):
            GridGeometry(m_x=0)
        with self.assertRaises(ArgumentError):
            GridGeometry(cell_width=0.0)

    def test_dict_round_trip(self):
        g = GridGeometry(m_x=4, m_y=3, cell_length=2.0, cell_width=1.5)
        self.assertEqual(GridGeometry.from_dict(g.to_dict()), g)


class CoordToLabelTests(SimpleTestCase):
    def setUp(self):
        self.g = GridGeometry()

    def test_center_lane_first_band(self):
        self.assertEqual(coord_to_label(self.g, 2.5, 0.0), CellLabel.in_grid(1, 11))

    def test_beyond_range_is_oob(self):
        self.assertTrue(coord_to_label(self.g, 185.0, 0.0).is_oob)
        self.assertTrue(coord_to_label(self.g, -0.1, 0.0).is_oob)
        self.assertTrue(coord_to_label(self.g, 10.0, 9.5).is_oob)

    def test_far_corner_matches_brute_force_scan(self):
        x, y = 177.4, -9.0
        hits = []
        for i_x in range(1, self.g.m_x + 1):
            for i_y in range(1, self.g.m_y + 1):
                x_lo = self.g.x_min + (i_x - 1) * self.g.cell_length
                y_lo = self.g.y_min + (i_y - 1) * self.g.cell_width
                if x_lo <= x < x_lo + self.g.cell_length and y_lo <= y < y_lo + self.g.cell_width:
                    hits.append((i_x, i_y))
        self.assertEqual(hits, [(36, 1)])
        self.assertEqual(coord_to_label(self.g, x, y), CellLabel.in_grid(36, 1))

    def test_upper_boundary_belongs_to_higher_cell(self):
        self.assertEqual(coord_to_label(self.g, 5.0, 0.0).index.i_x, 2)
        # outer upper edge of the grid is outside
        self.assertTrue(coord_to_label(self.g, 180.0, 0.0).is_oob)
        self.assertTrue(coord_to_label(self.g, 10.0, self.g.y_max).is_oob)
        self.assertFalse(coord_to_label(self.g, 10.0, self.g.y_min).is_oob)

    def test_non_finite_rejected(self):
        with self.assertRaises(InvalidCoordinateError):
            coord_to_label(self.g, math.nan, 0.0)
        with self.assertRaises(InvalidCoordinateError):
            coord_to_label(self.g, 1.0, math.inf)

    def test_vectorised_matches_scalar(self):
        rng = np.random.default_rng(3)
        xs = rng.uniform(-20, 200, 2000)
        ys = rng.uniform(-12, 12, 2000)
        classes = coords_to_classes(self.g, xs, ys)
        expected = [coord_to_label(self.g, x, y).linear_class(self.g) for x, y in zip(xs, ys)]
        np.testing.assert_array_equal(classes, expected)

    def test_vectorised_far_points_are_oob(self):
        classes = coords_to_classes(self.g, np.array([1e300, -1e300]), np.array([0.0, 0.0]))
        np.testing.assert_array_equal(classes, [756, 756])


class CellCenterTests(SimpleTestCase):
    def setUp(self):
        self.g = GridGeometry()

    def test_known_centers(self):
        self.assertEqual(cell_center(self.g, GridIndex(1, 11)), (2.5, 0.0))
        x, y = cell_center(self.g, GridIndex(36, 21))
        self.assertAlmostEqual(x, 177.5, places=12)
        self.assertAlmostEqual(y, 8.75, places=12)
        x, y = cell_center(self.g, GridIndex(1, 1))
        self.assertAlmostEqual(x, 2.5, places=12)
        self.assertAlmostEqual(y, -8.75, places=12)

    def test_out_of_range_index(self):
        with self.assertRaises(GridIndexError):
            cell_center(self.g, GridIndex(0, 1))
        with self.assertRaises(GridIndexError):
            cell_center(self.g, GridIndex(37, 1))

    def test_round_trip_and_jitter(self):
        jx, jy = self.g.cell_length / 4, self.g.cell_width / 4
        for i_x in range(1, self.g.m_x + 1):
            for i_y in range(1, self.g.m_y + 1):
                idx = GridIndex(i_x, i_y)
                x, y = cell_center(self.g, idx)
                self.assertEqual(coord_to_label(self.g, x, y), CellLabel(idx))
                for dx in (-jx, jx):
                    for dy in (-jy, jy):
                        self.assertEqual(coord_to_label(self.g, x + dx, y + dy), CellLabel(idx))


class CellLabelTests(SimpleTestCase):
    def test_linearisation_is_bijective(self):
        g = GridGeometry(m_x=4, m_y=3)
        seen = set()
        for i_x in range(1, 5):
            for i_y in range(1, 4):
                k = CellLabel.in_grid(i_x, i_y).linear_class(g)
                seen.add(k)
                self.assertEqual(CellLabel.from_linear(g, k), CellLabel.in_grid(i_x, i_y))
        self.assertEqual(seen, set(range(12)))
        self.assertEqual(CellLabel.out_of_boundary().linear_class(g), 12)
        self.assertTrue(CellLabel.from_linear(g, 12).is_oob)

    def test_one_hot(self):
        g = GridGeometry()
        vec = CellLabel.in_grid(2, 5).one_hot(g)
        self.assertEqual(vec.shape, (757,))
        self.assertEqual(vec.sum(), 1.0)
        self.assertEqual(vec[21 + 4], 1.0)
        self.assertEqual(CellLabel.out_of_boundary().one_hot(g)[756], 1.0)
