import logging
import os
from typing import Any, Dict

import pandas as pd

from apps.common.exceptions import ArgumentError, PredictorError
from apps.neural.checkpoint import write_checkpoint
from apps.neural.params import HEAD_GRID, HEAD_KINDS, NetworkConfig
from apps.neural.training import TrainConfig, train
from apps.trajectories.windows import horizon_steps, stack_windows
from . import (
    USAGE, artifact, checkpoint_name, ensure_dir, failure, geometry_from, predictor_settings,
    training_log_name,
)
from .dataset import load_split

logger = logging.getLogger(__name__)

LOG_COLUMNS = ['epoch', 'train_loss', 'val_loss', 'lr', 'lr_decayed']


def train_config_from(config: Dict[str, Any], seed: int) -> TrainConfig:
    return TrainConfig(
        learning_rate_init=float(config['LEARNING_RATE']),
        batch_size=int(config['BATCH_SIZE']),
        lam=float(config['LAMBDA']),
        lr_decay_factor=float(config['LR_DECAY']),
        patience_epochs=int(config['PATIENCE']),
        max_epochs=int(config['MAX_EPOCHS']),
        rng_seed=seed,
        sequence_length=int(config['WINDOW']),
        min_learning_rate=float(config['MIN_LEARNING_RATE']),
        momentum=float(config['MOMENTUM']),
        clip_norm=None if config['CLIP_NORM'] is None else float(config['CLIP_NORM']),
        loss_form=config['LOSS_FORM'],
    )


def network_config_from(config: Dict[str, Any], head_kind: str) -> NetworkConfig:
    return NetworkConfig(
        input_fc=tuple(int(n) for n in config['INPUT_FC']),
        lstm_hidden=tuple(int(n) for n in config['LSTM_HIDDEN']),
        output_fc=tuple(int(n) for n in config['OUTPUT_FC']),
        head_kind=head_kind,
        forget_bias=float(config['FORGET_BIAS']),
    )


def write_training_log(log, path: str) -> str:
    frame = pd.DataFrame(log.rows()).rename(columns={'learning_rate': 'lr'})
    frame[LOG_COLUMNS].to_csv(path, index=False, float_format='%.17g')
    return path


def run_train(inputs: Dict[str, Any], params: Dict[str, Any]) -> Dict[str, Any]:
    """Train Runner: one LSTM per horizon on the 85/15 per-track split of a generated dataset.

    Args:
        inputs: {'data_dir': generated dataset, 'out_dir': where checkpoint and log go}
        params: {'delta': float, 'head': 'grid'|'regress', 'seed': int, 'max_epochs': int,
                 'window': int, geometry overrides, ...}

    Returns:
        dict with artifacts (checkpoint, training log), metrics and evidence
    """
    params = dict(params or {})
    data_dir = inputs.get('data_dir')
    out_dir = inputs.get('out_dir') or data_dir
    if not data_dir:
        return failure('train requires a dataset: inputs["data_dir"] missing', USAGE)
    head_kind = params.pop('head', None) or HEAD_GRID
    if head_kind not in HEAD_KINDS:
        return failure(f'head must be one of {HEAD_KINDS}, got {head_kind!r}', USAGE)
    if params.get('delta') is None:
        return failure('train requires a prediction horizon: params["delta"] missing', USAGE)
    delta = float(params.pop('delta'))
    seed = int(params.pop('seed', None) or 0)
    config = predictor_settings(params)

    try:
        geometry = geometry_from(config)
        train_config = train_config_from(config, seed).validate()
        network_config = network_config_from(config, head_kind).validate()
        horizon_steps(delta, float(config['SAMPLE_PERIOD']))
    except ArgumentError as e:
        return failure(f'Invalid training configuration: {e}', USAGE)

    try:
        split = load_split(data_dir, delta, int(config['WINDOW']), geometry,
                           float(config['SPLIT_RATIO']), seed)
        train_set = stack_windows(split.train, geometry)
        val_set = stack_windows(split.validation, geometry)
    except (PredictorError, OSError) as e:
        return failure(f'Failed to prepare training data: {e}')

    try:
        best, log = train(train_set, val_set, train_config, network_config, geometry, delta)
    except PredictorError as e:
        return failure(f'Training failed: {e}')

    try:
        ensure_dir(out_dir)
        ckpt_path = write_checkpoint(best, os.path.join(out_dir, checkpoint_name(head_kind, delta)))
        log_path = write_training_log(log, os.path.join(out_dir, training_log_name(head_kind, delta)))
    except OSError as e:
        return failure(f'Failed to write training artifacts: {e}')
    logger.info('Training log written to %s', log_path)

    first_val = log.epochs[0].val_loss if log.epochs else log.initial_val_loss
    metrics = {
        'delta': delta,
        'head': head_kind,
        'n_train_windows': len(train_set),
        'n_validation_windows': len(val_set),
        'n_train_tracks': len(split.train_tracks),
        'n_validation_tracks': len(split.validation_tracks),
        'epochs_run': len(log.epochs),
        'best_epoch': log.best_epoch,
        'best_val_loss': log.best_val_loss,
        'first_epoch_val_loss': first_val,
        'initial_val_loss': log.initial_val_loss,
    }
    evidence = {
        'summary': f'{head_kind} head for delta={delta}s: best validation loss '
                   f'{log.best_val_loss:.5f} at epoch {log.best_epoch} of {len(log.epochs)}',
    }
    return {
        'artifacts': [artifact(ckpt_path, 'checkpoint'), artifact(log_path, 'csv')],
        'metrics': metrics,
        'evidence': evidence,
    }
