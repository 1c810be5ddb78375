"""
Evaluation metrics: weighted MAE over the occupancy grid (grid units) and
point-prediction MAE (meters), each with longitudinal / lateral components.
"""
from typing import Dict, NamedTuple, Sequence, Tuple

import numpy as np

from apps.common.exceptions import ArgumentError, DegenerateMapError
from .geometry import CellLabel, index_grids
from .maps import OccupancyMap


class MaeResult(NamedTuple):
    mae: float
    mae_x: float
    mae_y: float


def weighted_mae(predictions: Sequence[OccupancyMap], labels: Sequence[CellLabel]) -> MaeResult:
    """Expected index distance between each predicted map and its labelled cell.

    Each map's in-grid mass is renormalised to 1 before weighting; labels must
    all be in-grid (OOB-labelled examples are filtered by the caller).
    """
    if len(predictions) != len(labels):
        raise ArgumentError(f'{len(predictions)} predictions vs {len(labels)} labels')
    if not predictions:
        raise ArgumentError('weighted_mae needs at least one example')
    geometry = predictions[0].geometry
    i_x, i_y = index_grids(geometry)
    total = np.zeros(3)
    for n, (pred, label) in enumerate(zip(predictions, labels)):
        if label.is_oob:
            raise ArgumentError(f'example {n} is labelled out-of-boundary')
        mass = pred.in_grid_mass
        if mass <= 0.0:
            raise DegenerateMapError(f'example {n} has no in-grid probability mass')
        w = pred.p / mass
        d_x = np.abs(i_x - label.index.i_x)
        d_y = np.abs(i_y - label.index.i_y)
        total += (
            float(np.dot(w, np.hypot(d_x, d_y))),
            float(np.dot(w, d_x)),
            float(np.dot(w, d_y)),
        )
    total /= len(predictions)
    return MaeResult(*map(float, total))


def regression_mae(
    predicted: Sequence[Tuple[float, float]], actual: Sequence[Tuple[float, float]]
) -> MaeResult:
    """Mean Euclidean / |dx| / |dy| error between predicted and actual points (meters)."""
    pred = np.asarray(predicted, dtype=float).reshape(-1, 2)
    true = np.asarray(actual, dtype=float).reshape(-1, 2)
    if pred.shape[0] == 0:
        raise ArgumentError('regression_mae needs at least one pair')
    if pred.shape != true.shape:
        raise ArgumentError(f'{pred.shape[0]} predictions vs {true.shape[0]} targets')
    diff = pred - true
    return MaeResult(
        float(np.mean(np.hypot(diff[:, 0], diff[:, 1]))),
        float(np.mean(np.abs(diff[:, 0]))),
        float(np.mean(np.abs(diff[:, 1]))),
    )


def top_k_accuracy(predictions: Sequence[OccupancyMap], labels: Sequence[CellLabel], k: int) -> float:
    """Fraction of examples whose labelled class is among the k most probable classes (OOB included)."""
    if len(predictions) != len(labels):
        raise ArgumentError(f'{len(predictions)} predictions vs {len(labels)} labels')
    if not predictions:
        raise ArgumentError('top_k_accuracy needs at least one example')
    hits = 0
    for pred, label in zip(predictions, labels):
        z = pred.class_probabilities()
        top = np.argsort(-z, kind='stable')[:k]
        hits += int(label.linear_class(pred.geometry) in top)
    return hits / len(predictions)


def grid_report(predictions: Sequence[OccupancyMap], labels: Sequence[CellLabel], top_k: int = 5) -> Dict[str, float]:
    """Weighted MAE over in-grid labels plus the OOB and top-k diagnostics."""
    if len(predictions) != len(labels):
        raise ArgumentError(f'{len(predictions)} predictions vs {len(labels)} labels')
    kept = [(p, l) for p, l in zip(predictions, labels) if not l.is_oob]
    report = {
        'n_examples': len(predictions),
        'n_oob_excluded': len(predictions) - len(kept),
        'mean_p_oob': float(np.mean([p.p_oob for p in predictions])) if predictions else 0.0,
        f'top{top_k}_accuracy': top_k_accuracy(predictions, labels, top_k) if predictions else 0.0,
    }
    if kept:
        result = weighted_mae([p for p, _ in kept], [l for _, l in kept])
        report.update(result._asdict())
    else:
        report.update({'mae': float('nan'), 'mae_x': float('nan'), 'mae_y': float('nan')})
    return report
