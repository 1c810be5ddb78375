import json
import os
import shutil
import tempfile
from io import StringIO
from unittest import mock

import numpy as np
import pandas as pd
from django.conf import settings
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, override_settings

from apps.grid.geometry import index_grids
from apps.neural.checkpoint import read_checkpoint
from apps.neural.network import forward
from apps.pipeline.runners import RESAMPLED_TRACKS, checkpoint_name, training_log_name
from apps.pipeline.runners.dataset import load_split
from apps.trajectories.jsonl import read_jsonl, write_jsonl

TINY_PREDICTOR = {
    **settings.PREDICTOR,
    'INPUT_FC': [6],
    'LSTM_HIDDEN': [8],
    'OUTPUT_FC': [8],
    'MAX_EPOCHS': 2,
    'LEARNING_RATE': 0.01,
}


def run(*args):
    out = StringIO()
    call_command(*args, stdout=out)
    return out.getvalue()


@override_settings(PREDICTOR=TINY_PREDICTOR)
class PipelineCommandTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.tmp = tempfile.mkdtemp()
        cls.data = os.path.join(cls.tmp, 'data')
        run('generate', '--tracks', '16', '--seed', '7', '--out', cls.data)
        run('train', '--data', cls.data, '--delta', '1.0', '--head', 'grid', '--seed', '1')
        run('train', '--data', cls.data, '--delta', '1.0', '--head', 'regress', '--seed', '1')
        cls.grid_ckpt = os.path.join(cls.data, checkpoint_name('grid', 1.0))
        cls.regress_ckpt = os.path.join(cls.data, checkpoint_name('regress', 1.0))

    @classmethod
    def tearDownClass(cls):
        shutil.rmtree(cls.tmp, ignore_errors=True)
        super().tearDownClass()

    def read_bytes(self, path):
        with open(path, 'rb') as fh:
            return fh.read()

    # generate

    def test_generate_writes_dataset(self):
        for name in ('raw_tracks.jsonl', RESAMPLED_TRACKS, 'manifest.json'):
            self.assertTrue(os.path.exists(os.path.join(self.data, name)), name)
        with open(os.path.join(self.data, 'manifest.json')) as fh:
            manifest = json.load(fh)
        self.assertEqual(manifest['seed'], 7)
        self.assertEqual(manifest['scenario_counts'],
                         {'cruise': 8, 'lane_change': 5, 'cut_in': 2, 'decelerating_lead': 1})

    def test_generate_is_byte_identical(self):
        again = os.path.join(self.tmp, 'again')
        run('generate', '--tracks', '16', '--seed', '7', '--out', again)
        for name in ('raw_tracks.jsonl', RESAMPLED_TRACKS, 'manifest.json'):
            self.assertEqual(self.read_bytes(os.path.join(self.data, name)),
                             self.read_bytes(os.path.join(again, name)))

    def test_generate_default_mix_counts(self):
        out = os.path.join(self.tmp, 'mix')
        run('generate', '--tracks', '20', '--out', out)
        with open(os.path.join(out, 'manifest.json')) as fh:
            counts = json.load(fh)['scenario_counts']
        self.assertEqual(counts, {'cruise': 10, 'lane_change': 6, 'cut_in': 3, 'decelerating_lead': 1})

    def test_generate_zero_tracks_is_usage_error(self):
        with self.assertRaises(CommandError) as ctx:
            run('generate', '--tracks', '0', '--out', os.path.join(self.tmp, 'none'))
        self.assertEqual(ctx.exception.returncode, 2)

    def test_generate_unwritable_path(self):
        blocker = os.path.join(self.tmp, 'blocker')
        with open(blocker, 'w') as fh:
            fh.write('not a directory')
        with self.assertRaises(CommandError) as ctx:
            run('generate', '--tracks', '2', '--out', os.path.join(blocker, 'data'))
        self.assertEqual(ctx.exception.returncode, 1)

    # train

    def test_checkpoint_carries_horizon(self):
        params = read_checkpoint(self.grid_ckpt)
        self.assertEqual(params.delta, 1.0)
        self.assertEqual(params.head_kind, 'grid')
        self.assertEqual(read_checkpoint(self.regress_ckpt).head_kind, 'regress')

    def test_training_is_deterministic(self):
        out = os.path.join(self.tmp, 'retrain')
        run('train', '--data', self.data, '--out', out, '--delta', '1.0', '--head', 'grid', '--seed', '1')
        self.assertEqual(self.read_bytes(self.grid_ckpt),
                         self.read_bytes(os.path.join(out, checkpoint_name('grid', 1.0))))

    def test_training_log(self):
        log = pd.read_csv(os.path.join(self.data, training_log_name('grid', 1.0)))
        self.assertEqual(list(log.columns[:4]), ['epoch', 'train_loss', 'val_loss', 'lr'])
        self.assertEqual(list(log['epoch']), [0, 1, 2])
        self.assertTrue(np.all(np.isfinite(log['val_loss'])))

    def test_invalid_delta_is_usage_error(self):
        with self.assertRaises(CommandError) as ctx:
            run('train', '--data', self.data, '--out', os.path.join(self.tmp, 'bad'), '--delta', '0.55')
        self.assertEqual(ctx.exception.returncode, 2)

    def test_bad_head_flag(self):
        with self.assertRaises(CommandError):
            run('train', '--data', self.data, '--delta', '1.0', '--head', 'both')

    def test_dataset_too_small(self):
        short = os.path.join(self.tmp, 'short')
        os.makedirs(short, exist_ok=True)
        tracks = read_jsonl(os.path.join(self.data, RESAMPLED_TRACKS))
        write_jsonl(os.path.join(short, RESAMPLED_TRACKS), [t[:25] for t in tracks])
        with self.assertRaises(CommandError) as ctx:
            run('train', '--data', short, '--delta', '1.0')
        self.assertEqual(ctx.exception.returncode, 1)
        self.assertIn('dataset too small', str(ctx.exception))

    def test_background_queues_a_task_per_horizon(self):
        with mock.patch('apps.pipeline.management.commands.train.train_horizon') as task:
            delay = task.delay
            delay.return_value.id = 'task-1'
            output = run('train', '--data', self.data, '--delta', '0.5', '--delta', '2.0', '--background')
        self.assertEqual(delay.call_count, 2)
        self.assertEqual([c.args[1]['delta'] for c in delay.call_args_list], [0.5, 2.0])
        self.assertIn('queued as task task-1', output)

    # eval

    def eval_report(self, name, *flags):
        out = os.path.join(self.tmp, 'reports')
        run('eval', '--data', self.data, '--out', out, *flags)
        return pd.read_csv(os.path.join(out, name))

    def test_eval_has_two_rows_per_horizon(self):
        report = self.eval_report('metrics_validation_all.csv', '--checkpoint', self.grid_ckpt)
        self.assertEqual(list(report.columns[:5]), ['method', 'delta', 'mae_x', 'mae_y', 'mae'])
        self.assertEqual(list(report['method']), ['lstm', 'kalman_cv'])
        self.assertEqual(list(report['delta']), [1.0, 1.0])
        self.assertTrue(np.all(report['mae'] >= 0))
        self.assertIn('top5_accuracy', report.columns)
        self.assertIn('n_oob_excluded', report.columns)

    def test_eval_matches_independent_recomputation(self):
        report = self.eval_report('metrics_validation_all.csv', '--checkpoint', self.grid_ckpt, '--seed', '0')
        params = read_checkpoint(self.grid_ckpt)
        split = load_split(self.data, 1.0, 20, params.geometry, 0.85, 0)
        i_x, i_y = index_grids(params.geometry)
        totals = []
        for w in split.validation:
            if w.label_grid.is_oob:
                continue
            occupancy, _ = forward(params, w.features)
            weights = occupancy.p / occupancy.p.sum()
            dx = np.abs(i_x - w.label_grid.index.i_x)
            dy = np.abs(i_y - w.label_grid.index.i_y)
            totals.append((np.sum(weights * dx), np.sum(weights * dy), np.sum(weights * np.sqrt(dx ** 2 + dy ** 2))))
        mae_x, mae_y, mae = np.mean(totals, axis=0)
        lstm = report[report['method'] == 'lstm'].iloc[0]
        self.assertAlmostEqual(lstm['mae_x'], mae_x, delta=1e-9)
        self.assertAlmostEqual(lstm['mae_y'], mae_y, delta=1e-9)
        self.assertAlmostEqual(lstm['mae'], mae, delta=1e-9)

    def test_eval_regression_head(self):
        report = self.eval_report('metrics_validation_all.csv', '--checkpoint', self.regress_ckpt, '--head', 'regress')
        self.assertEqual(list(report['method']), ['lstm', 'kalman_cv'])
        self.assertTrue(np.all(report['mae'] >= report[['mae_x', 'mae_y']].max(axis=1) - 1e-12))

    def test_eval_head_mismatch_is_usage_error(self):
        with self.assertRaises(CommandError) as ctx:
            run('eval', '--data', self.data, '--checkpoint', self.grid_ckpt, '--head', 'regress')
        self.assertEqual(ctx.exception.returncode, 2)

    def test_eval_scenario_and_split_filters(self):
        report = self.eval_report('metrics_train_cruise.csv', '--checkpoint', self.grid_ckpt, '--split', 'train', '--scenario', 'cruise')
        self.assertEqual(set(report['split']), {'train'})
        self.assertEqual(set(report['scenario']), {'cruise'})

    def test_eval_uses_checkpoint_window(self):
        out = os.path.join(self.tmp, 'short_window')
        run('train', '--data', self.data, '--out', out, '--delta', '1.0', '--window', '12', '--seed', '1')
        ckpt = os.path.join(out, checkpoint_name('grid', 1.0))
        self.assertEqual(read_checkpoint(ckpt).window, 12)
        stored = self.eval_report('metrics_validation_all.csv', '--checkpoint', ckpt)
        explicit = self.eval_report('metrics_validation_all.csv', '--checkpoint', ckpt, '--window', '12')
        pd.testing.assert_frame_equal(stored, explicit)
        expected = len(load_split(self.data, 1.0, 12, read_checkpoint(ckpt).geometry, 0.85, 0).validation)
        self.assertEqual(list(stored['n_examples']), [expected, expected])
        self.assertEqual(read_checkpoint(self.grid_ckpt).window, 20)

    def test_eval_missing_checkpoint(self):
        with self.assertRaises(CommandError) as ctx:
            run('eval', '--data', self.data, '--checkpoint', os.path.join(self.tmp, 'missing.ckpt'))
        self.assertEqual(ctx.exception.returncode, 1)

    # predict

    def write_scene(self, n_tracks):
        tracks = read_jsonl(os.path.join(self.data, RESAMPLED_TRACKS))[:n_tracks]
        path = os.path.join(self.tmp, f'scene_{n_tracks}.jsonl')
        write_jsonl(path, tracks)
        return path

    def test_predict_single_track(self):
        out = os.path.join(self.tmp, 'predict')
        run('predict', '--checkpoint', self.grid_ckpt, '--scene', self.write_scene(1), '--out', out)
        with open(os.path.join(out, 'occupancy.pgm')) as fh:
            tokens = fh.read().split()
        self.assertEqual(tokens[:4], ['P2', '36', '21', '255'])
        self.assertEqual(len(tokens[4:]), 36 * 21)
        grid = pd.read_csv(os.path.join(out, 'occupancy.csv'))
        self.assertEqual(len(grid), 36 * 21)
        self.assertTrue(grid['p'].between(0.0, 1.0).all())
        self.assertTrue(os.path.getsize(os.path.join(out, 'occupancy.png')) > 0)
        with open(os.path.join(out, 'top_cells.tsv')) as fh:
            self.assertEqual(len(fh.read().splitlines()), 1 + 5 + 1)

    def test_predict_fuses_several_tracks(self):
        out = os.path.join(self.tmp, 'predict_many')
        run('predict', '--checkpoint', self.grid_ckpt, '--scene', self.write_scene(4), '--out', out, '--top-k', '3')
        grid = pd.read_csv(os.path.join(out, 'occupancy.csv'))
        self.assertTrue(grid['p'].between(0.0, 1.0).all())

    def test_predict_empty_scene(self):
        empty = os.path.join(self.tmp, 'empty.jsonl')
        open(empty, 'w').close()
        with self.assertRaises(CommandError) as ctx:
            run('predict', '--checkpoint', self.grid_ckpt, '--scene', empty, '--out', os.path.join(self.tmp, 'p'))
        self.assertEqual(ctx.exception.returncode, 2)

    def test_predict_scene_with_invalid_utf8(self):
        scene = self.write_scene(1)
        with open(scene, 'ab') as fh:
            fh.write(b'{"t": 9.95, "track_id": "\xff"}\n')
        with self.assertRaises(CommandError) as ctx:
            run('predict', '--checkpoint', self.grid_ckpt, '--scene', scene, '--out', os.path.join(self.tmp, 'p3'))
        self.assertEqual(ctx.exception.returncode, 1)
        self.assertIn('not valid UTF-8', str(ctx.exception))

    def test_predict_needs_grid_head(self):
        with self.assertRaises(CommandError) as ctx:
            run('predict', '--checkpoint', self.regress_ckpt, '--scene', self.write_scene(1),
                '--out', os.path.join(self.tmp, 'p2'))
        self.assertEqual(ctx.exception.returncode, 2)
