import numpy as np
from django.test import SimpleTestCase

from apps.common.exceptions import ArgumentError
from apps.grid.geometry import GridGeometry, coord_to_label
from apps.trajectories.records import RawSample
from apps.trajectories.resample import resample_100ms
from apps.trajectories.scenarios import ScenarioSpec, generate_scenarios
from apps.trajectories.split import split_by_track
from apps.trajectories.windows import build_dataset_windows, build_windows, stack_windows


def resampled_track(n, track_id='t1', x0=50.0, vx=-1.0, start_bin=0, y=0.0):
    return [RawSample((start_bin + k + 0.5) * 0.1, track_id, x0 + vx * 0.1 * k, y, vx, 0.0, 0.0, 25.0)
            for k in range(n)]


class BuildWindowsTests(SimpleTestCase):
    def setUp(self):
        self.g = GridGeometry()

    def test_boundary_count(self):
        track = resampled_track(20 + 10)
        self.assertEqual(len(build_windows(track, 1.0, 20, self.g)), 1)
        self.assertEqual(len(build_windows(track[:-1], 1.0, 20, self.g)), 0)
        self.assertEqual(len(build_windows(resampled_track(40), 1.0, 20, self.g)), 11)

    def test_period_aligned_timestamps(self):
        track = [RawSample(k * 0.1, 't1', 50.0 - 0.1 * k, 0.0, -1.0, 0.0, 0.0, 25.0) for k in range(40)]
        self.assertEqual(len(build_windows(track, 1.0, 20, self.g)), 11)
        shifted = [RawSample(1000.0 + k * 0.1, 't1', s.x, 0.0, -1.0, 0.0, 0.0, 25.0)
                   for k, s in enumerate(track)]
        self.assertEqual(len(build_windows(shifted, 0.5, 20, self.g)), 16)

    def test_label_beyond_range_is_oob(self):
        track = resampled_track(25, x0=170.0, vx=60.0)
        # features must stay inside the grid; only the label leaves it
        track = [RawSample(s.t, s.track_id, min(s.x, 179.0), 0.0, 60.0, 0.0, 0.0, 25.0) for s in track[:20]] + \
            [RawSample(s.t, s.track_id, 200.0, 0.0, 60.0, 0.0, 0.0, 25.0) for s in track[20:]]
        windows = build_windows(track, 0.5, 20, self.g)
        self.assertEqual(len(windows), 1)
        self.assertTrue(windows[0].label_grid.is_oob)
        self.assertEqual(windows[0].label_point, (200.0, 0.0))

    def test_labels_match_independent_lookup(self):
        spec = ScenarioSpec(n_tracks=6)
        for raw in generate_scenarios(spec, seed=3):
            track = resample_100ms(raw)
            by_time = {round(s.t, 6): s for s in track}
            for w in build_windows(track, 2.0, 20, self.g):
                label = by_time[round(w.t_end + 2.0, 6)]
                self.assertEqual(w.label_grid, coord_to_label(self.g, label.x, label.y))
                self.assertAlmostEqual(w.label_time - w.t_end, 2.0, delta=1e-9)
                self.assertTrue(np.all(w.feature_times < w.label_time))
                np.testing.assert_allclose(np.diff(w.feature_times), 0.1, atol=1e-6)

    def test_windows_do_not_span_gaps(self):
        track = resampled_track(25) + resampled_track(25, start_bin=40, x0=40.0)
        windows = build_windows(track, 0.5, 20, self.g)
        self.assertEqual(len(windows), 2)
        for w in windows:
            np.testing.assert_allclose(np.diff(w.feature_times), 0.1, atol=1e-6)

    def test_out_of_range_features_dropped(self):
        track = resampled_track(30, x0=-0.05, vx=1.0)
        windows = build_windows(track, 0.5, 20, self.g)
        # only the first sample lies behind the grid
        self.assertEqual(len(windows), 5)

    def test_delta_must_be_multiple_of_period(self):
        with self.assertRaises(ArgumentError):
            build_windows(resampled_track(40), 0.55, 20, self.g)
        with self.assertRaises(ArgumentError):
            build_windows(resampled_track(40), 0.5, 0, self.g)

    def test_stack(self):
        windows = build_windows(resampled_track(40), 0.5, 20, self.g)
        examples = stack_windows(windows, self.g)
        self.assertEqual(examples.features.shape, (len(windows), 20, 6))
        self.assertEqual(list(examples.classes), [w.label_grid.linear_class(self.g) for w in windows])


class SplitByTrackTests(SimpleTestCase):
    def setUp(self):
        g = GridGeometry()
        tracks = [resampled_track(30, track_id=f'{i:03d}') for i in range(100)]
        self.windows = build_dataset_windows(tracks, 0.5, 20, g)

    def test_counts(self):
        split = split_by_track(self.windows, 0.85, seed=4)
        self.assertEqual(len(split.train_tracks), 85)
        self.assertEqual(len(split.validation_tracks), 15)

    def test_deterministic_and_disjoint(self):
        a = split_by_track(self.windows, 0.85, seed=9)
        b = split_by_track(self.windows, 0.85, seed=9)
        self.assertEqual(a.train_tracks, b.train_tracks)
        self.assertFalse(a.train_tracks & a.validation_tracks)
        self.assertEqual(len(a.train) + len(a.validation), len(self.windows))

    def test_errors(self):
        with self.assertRaises(ArgumentError):
            split_by_track(self.windows, 1.0)
        single = [w for w in self.windows if w.track_id == '000']
        with self.assertRaises(ArgumentError):
            split_by_track(single, 0.85)
