import logging
import os
from typing import Any, Dict, List

import numpy as np

from apps.common.exceptions import CheckpointError, PredictorError
from apps.grid.maps import OccupancyMap
from apps.grid.render import save_heatmap, to_csv, to_pgm
from apps.neural.checkpoint import read_checkpoint
from apps.neural.fleet import predict_fleet
from apps.neural.params import HEAD_GRID
from apps.trajectories.jsonl import read_jsonl
from . import USAGE, artifact, ensure_dir, failure, predictor_settings, window_for

logger = logging.getLogger(__name__)


def top_cells_summary(occupancy: OccupancyMap, k: int) -> List[str]:
    lines = ['rank\ti_x\ti_y\tp\tx_m\ty_m']
    for rank, (idx, p, (x, y)) in enumerate(occupancy.top_k(k), start=1):
        lines.append(f'{rank}\t{idx.i_x}\t{idx.i_y}\t{p:.6f}\t{x:.3f}\t{y:.3f}')
    lines.append(f'p_oob\t\t\t{occupancy.p_oob:.6f}')
    return lines


def run_predict(inputs: Dict[str, Any], params: Dict[str, Any]) -> Dict[str, Any]:
    """Predict Runner: fused occupancy of every vehicle in a scene file.

    Each track of the scene (100 ms JSONL) contributes its last ``window``
    samples. Writes the fused map as PGM, CSV and PNG plus a top-k summary.
    """
    params = dict(params or {})
    checkpoint = inputs.get('checkpoint')
    scene = inputs.get('scene')
    out_dir = inputs.get('out_dir')
    if not checkpoint or not scene or not out_dir:
        return failure('predict requires a checkpoint, a scene file and an output directory', USAGE)
    config = predictor_settings(params)
    top_k = int(config['TOP_K'])

    try:
        network = read_checkpoint(checkpoint)
    except (CheckpointError, OSError) as e:
        return failure(f'Failed to load checkpoint {checkpoint}: {e}')
    if network.head_kind != HEAD_GRID:
        return failure(f'predict needs a grid-head checkpoint, {checkpoint} has a {network.head_kind} head', USAGE)
    window = window_for(network, params)

    try:
        tracks = read_jsonl(scene)
    except (PredictorError, OSError) as e:
        return failure(f'Failed to read scene {scene}: {e}')
    if not tracks:
        return failure(f'scene {scene} contains no tracks', USAGE)

    sequences = [np.array([s.feature_vector() for s in track[-window:]], dtype=float) for track in tracks]
    try:
        fused = predict_fleet(network, sequences)
    except PredictorError as e:
        return failure(f'Prediction failed: {e}')

    summary = top_cells_summary(fused, top_k)
    try:
        ensure_dir(out_dir)
        pgm_path = os.path.join(out_dir, 'occupancy.pgm')
        csv_path = os.path.join(out_dir, 'occupancy.csv')
        png_path = os.path.join(out_dir, 'occupancy.png')
        top_path = os.path.join(out_dir, 'top_cells.tsv')
        with open(pgm_path, 'w', encoding='ascii') as fh:
            fh.write(to_pgm(fused))
        with open(csv_path, 'w', encoding='utf-8') as fh:
            fh.write(to_csv(fused))
        save_heatmap(fused, png_path, title=f'{len(tracks)} vehicles, delta={network.delta}s')
        with open(top_path, 'w', encoding='utf-8') as fh:
            fh.write('\n'.join(summary) + '\n')
    except OSError as e:
        return failure(f'Failed to write prediction artifacts: {e}')
    logger.info('Fused map of %d tracks written to %s', len(tracks), out_dir)

    return {
        'artifacts': [
            artifact(pgm_path, 'pgm'),
            artifact(csv_path, 'csv'),
            artifact(png_path, 'png'),
            artifact(top_path, 'tsv'),
        ],
        'metrics': {
            'n_tracks': len(tracks),
            'delta': network.delta,
            'p_oob': fused.p_oob,
            'top_cells': [{'i_x': idx.i_x, 'i_y': idx.i_y, 'p': p, 'x': x, 'y': y}
                          for idx, p, (x, y) in fused.top_k(top_k)],
        },
        'evidence': {'summary': '\n'.join(summary)},
    }
