"""
Evaluation of trained checkpoints against the constant-velocity Kalman baseline.

For every checkpoint the chosen split of the dataset is rebuilt with the
checkpoint's own horizon and geometry, then both predictors are scored on the
same windows: weighted MAE in grid units for the grid head, MAE in meters for
the regression head.
"""
import logging
import os
from typing import Any, Dict, List, Sequence

import numpy as np
import pandas as pd

from apps.baseline.kalman import KfTrack, kf_filter, kf_predict_grid, kf_predict_point
from apps.common.exceptions import CheckpointError, PredictorError
from apps.grid.maps import OccupancyMap
from apps.grid.metrics import grid_report, regression_mae
from apps.neural.checkpoint import read_checkpoint
from apps.neural.network import predict_batch
from apps.neural.params import HEAD_GRID, NetworkParams
from apps.trajectories.records import TrackWindow
from apps.trajectories.scenarios import SCENARIO_KINDS
from . import USAGE, artifact, ensure_dir, failure, predictor_settings, window_for
from .dataset import load_split

logger = logging.getLogger(__name__)

METHOD_LSTM = 'lstm'
METHOD_KALMAN = 'kalman_cv'
REPORT_COLUMNS = ['method', 'delta', 'mae_x', 'mae_y', 'mae']
SPLITS = ('validation', 'train')


def kalman_tracks(windows: Sequence[TrackWindow], config: Dict[str, Any]) -> List[KfTrack]:
    """Filter each window: seeded from its first sample, updated with the rest at the 100 ms period."""
    dt = float(config['SAMPLE_PERIOD'])
    tracks = []
    for w in windows:
        track = KfTrack.initiate(
            w.features[0, :2],
            w.features[0, 2:4],
            q_accel=tuple(config['KF_Q_ACCEL']),
            r_pos=float(config['KF_R_POS']),
            velocity_std=float(config['KF_INITIAL_VELOCITY_STD']),
        )
        tracks.append(kf_filter(track, w.features[1:, :2], dt))
    return tracks


def lstm_maps(params: NetworkParams, windows: Sequence[TrackWindow]) -> List[OccupancyMap]:
    probs = predict_batch(params, np.stack([w.features for w in windows]))
    return [OccupancyMap.from_class_probabilities(params.geometry, z) for z in probs]


def lstm_points(params: NetworkParams, windows: Sequence[TrackWindow]) -> np.ndarray:
    return predict_batch(params, np.stack([w.features for w in windows]))


def evaluate_checkpoint(params: NetworkParams, windows: Sequence[TrackWindow],
                        config: Dict[str, Any]) -> List[Dict[str, Any]]:
    """Two report rows for one horizon: the LSTM and the Kalman baseline."""
    delta = params.delta
    tracks = kalman_tracks(windows, config)
    if params.head_kind == HEAD_GRID:
        top_k = int(config['TOP_K'])
        labels = [w.label_grid for w in windows]
        lstm = grid_report(lstm_maps(params, windows), labels, top_k)
        kalman = grid_report([kf_predict_grid(t, delta, params.geometry) for t in tracks], labels, top_k)
    else:
        actual = [w.label_point for w in windows]
        lstm = {'n_examples': len(windows), **regression_mae(lstm_points(params, windows), actual)._asdict()}
        kalman = {'n_examples': len(windows),
                  **regression_mae([kf_predict_point(t, delta) for t in tracks], actual)._asdict()}
    rows = []
    for method, report in ((METHOD_LSTM, lstm), (METHOD_KALMAN, kalman)):
        rows.append({'method': method, 'delta': delta, **report, 'head': params.head_kind})
    return rows


def run_eval(inputs: Dict[str, Any], params: Dict[str, Any]) -> Dict[str, Any]:
    """Eval Runner: method x horizon table of MAE X, MAE Y and MAE for LSTM and Kalman.

    Args:
        inputs: {'data_dir': generated dataset, 'checkpoints': [paths], 'out_dir': report directory}
        params: {'head': expected head or None, 'seed': split seed, 'split': 'validation'|'train',
                 'scenario': scenario kind or None, 'window': int, 'top_k': int}
    """
    params = dict(params or {})
    data_dir = inputs.get('data_dir')
    checkpoints = list(inputs.get('checkpoints') or [])
    out_dir = inputs.get('out_dir') or data_dir
    if not data_dir or not checkpoints:
        return failure('eval requires a dataset and at least one checkpoint', USAGE)
    expected_head = params.pop('head', None)
    seed = int(params.pop('seed', None) or 0)
    split_name = params.pop('split', None) or 'validation'
    scenario = params.pop('scenario', None)
    if split_name not in SPLITS:
        return failure(f'split must be one of {SPLITS}, got {split_name!r}', USAGE)
    if scenario and scenario not in SCENARIO_KINDS:
        return failure(f'scenario must be one of {SCENARIO_KINDS}, got {scenario!r}', USAGE)
    config = predictor_settings(params)

    networks = []
    for path in checkpoints:
        try:
            network = read_checkpoint(path)
        except (CheckpointError, OSError) as e:
            return failure(f'Failed to load checkpoint {path}: {e}')
        if expected_head and network.head_kind != expected_head:
            return failure(
                f'checkpoint {path} has a {network.head_kind} head but {expected_head} metrics were requested',
                USAGE,
            )
        networks.append((path, network))
    if len({n.head_kind for _, n in networks}) > 1:
        return failure('cannot report grid and regression checkpoints in one table', USAGE)

    rows = []
    for path, network in sorted(networks, key=lambda item: item[1].delta):
        try:
            split = load_split(data_dir, network.delta, window_for(network, params), network.geometry,
                               float(config['SPLIT_RATIO']), seed, scenario)
            windows = split.validation if split_name == 'validation' else split.train
            if not windows:
                return failure(f'no {split_name} windows for delta={network.delta}s'
                               + (f' and scenario {scenario}' if scenario else ''))
            rows.extend(evaluate_checkpoint(network, windows, config))
        except (PredictorError, OSError) as e:
            return failure(f'Evaluation of {path} failed: {e}')
        logger.info('Evaluated %s on %d %s windows', path, len(windows), split_name)

    frame = pd.DataFrame(rows)
    frame['split'] = split_name
    frame['scenario'] = scenario or 'all'
    columns = REPORT_COLUMNS + [c for c in frame.columns if c not in REPORT_COLUMNS]
    frame = frame[columns]
    try:
        ensure_dir(out_dir)
        report_path = os.path.join(out_dir, f'metrics_{split_name}_{scenario or "all"}.csv')
        frame.to_csv(report_path, index=False, float_format='%.17g')
    except OSError as e:
        return failure(f'Failed to write metrics report: {e}')
    logger.info('Metrics report written to %s', report_path)

    return {
        'artifacts': [artifact(report_path, 'csv')],
        'metrics': {'rows': frame.to_dict(orient='records')},
        'evidence': {'table': frame[REPORT_COLUMNS].to_string(index=False)},
    }
