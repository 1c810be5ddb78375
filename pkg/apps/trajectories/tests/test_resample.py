from collections import defaultdict

import numpy as np
from django.test import SimpleTestCase

from apps.common.exceptions import ArgumentError
from apps.trajectories.records import NUMERIC_ATTRS, RawSample
from apps.trajectories.resample import bin_indices, resample_100ms


def sample(t, track_id='a', **values):
    fields = dict(x=1.0, y=2.0, x_dot=3.0, y_dot=4.0, ego_yaw_rate=0.01, ego_speed=25.0)
    fields.update(values)
    return RawSample(t, track_id, **fields)


class ResampleTests(SimpleTestCase):
    def test_constant_bin(self):
        out = resample_100ms([sample(k * 0.01) for k in range(10)])
        self.assertEqual(len(out), 1)
        self.assertAlmostEqual(out[0].t, 0.05, places=12)
        for got, expected in zip(out[0].values(), sample(0.0).values()):
            self.assertAlmostEqual(got, expected, delta=1e-12)

    def test_arithmetic_mean(self):
        out = resample_100ms([sample(k * 0.01, x=float(k)) for k in range(10)])
        self.assertEqual(out[0].x, 4.5)

    def test_matches_group_by_oracle(self):
        rng = np.random.default_rng(0)
        times = np.sort(rng.choice(np.arange(400), size=250, replace=False)) * 0.01
        samples = [sample(float(t), **{n: float(rng.normal()) for n in NUMERIC_ATTRS}) for t in times]
        groups = defaultdict(list)
        for s in samples:
            groups[int(np.floor(round(s.t / 0.1, 9)))].append(s)
        out = resample_100ms(samples)
        self.assertEqual(len(out), len(groups))
        for got, k in zip(out, sorted(groups)):
            members = groups[k]
            self.assertAlmostEqual(got.t, (k + 0.5) * 0.1, places=12)
            for name in NUMERIC_ATTRS:
                expected = sum(getattr(m, name) for m in members) / len(members)
                self.assertAlmostEqual(getattr(got, name), expected, delta=1e-12)

    def test_gaps_are_preserved(self):
        samples = [sample(k * 0.01) for k in list(range(0, 20)) + list(range(50, 60))]
        out = resample_100ms(samples)
        self.assertEqual([round(s.t, 2) for s in out], [0.05, 0.15, 0.55])

    def test_mean_is_conserved_for_full_bins(self):
        rng = np.random.default_rng(1)
        samples = [sample(k * 0.01, x=float(rng.normal() * 10)) for k in range(300)]
        out = resample_100ms(samples)
        self.assertAlmostEqual(np.mean([s.x for s in out]), np.mean([s.x for s in samples]), delta=1e-9)

    def test_bin_boundaries(self):
        np.testing.assert_array_equal(bin_indices([0.0, 0.09, 0.1, 0.3, 0.7]), [0, 0, 1, 3, 7])

    def test_errors(self):
        with self.assertRaises(ArgumentError):
            resample_100ms([sample(0.02), sample(0.01)])
        with self.assertRaises(ArgumentError):
            resample_100ms([sample(0.01, 'a'), sample(0.02, 'b')])
        self.assertEqual(resample_100ms([]), [])
