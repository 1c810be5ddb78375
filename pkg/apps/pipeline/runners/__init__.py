"""
Runners behind the management commands and the Celery task.

Every runner takes ``(inputs, params)`` and returns a result dictionary
``{'artifacts': [...], 'metrics': {...}, 'evidence': {...}}``. Runners do not
raise: a failure is reported through ``metrics['error']``, and
``metrics['error_kind'] == 'usage'`` marks a problem with the caller's flags.
"""
import logging
import os
from typing import Any, Dict, Optional

from django.conf import settings

from apps.grid.geometry import GridGeometry
from apps.neural.params import NetworkParams

logger = logging.getLogger(__name__)

RAW_TRACKS = 'raw_tracks.jsonl'
RESAMPLED_TRACKS = 'tracks_100ms.jsonl'
MANIFEST = 'manifest.json'

USAGE = 'usage'
RUNTIME = 'runtime'


def failure(message: str, kind: str = RUNTIME, **evidence) -> Dict[str, Any]:
    logger.error('%s', message)
    return {'artifacts': [], 'metrics': {'error': message, 'error_kind': kind}, 'evidence': evidence}


def predictor_settings(params: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """``settings.PREDICTOR`` with every non-None entry of ``params`` laid over it."""
    merged = dict(settings.PREDICTOR)
    for key, value in (params or {}).items():
        if value is not None:
            merged[key.upper()] = value
    return merged


def geometry_from(config: Dict[str, Any]) -> GridGeometry:
    geometry = dict(config['GEOMETRY'])
    for key in ('m_x', 'm_y', 'cell_length', 'cell_width', 'x_min', 'y_min'):
        if config.get(key.upper()) is not None:
            geometry[key] = config[key.upper()]
    return GridGeometry.from_dict(geometry)


def checkpoint_name(head_kind: str, delta: float) -> str:
    """One file per head and horizon, e.g. ``lstm_grid_delta1.0s.ckpt``."""
    return f'lstm_{head_kind}_delta{delta:.1f}s.ckpt'


def training_log_name(head_kind: str, delta: float) -> str:
    return f'training_log_{head_kind}_delta{delta:.1f}s.csv'


def artifact(path: str, kind: str) -> Dict[str, str]:
    return {'name': os.path.basename(path), 'type': kind, 'path': path}


def ensure_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path


def window_for(network: NetworkParams, params: Dict[str, Any]) -> int:
    """An explicit ``window`` wins, then the length the checkpoint was trained with."""
    if params.get('window') is not None:
        window = int(params['window'])
        if network.window and window != network.window:
            logger.warning('window %d overrides the %d samples the checkpoint was trained with',
                           window, network.window)
        return window
    return int(network.window or settings.PREDICTOR['WINDOW'])
