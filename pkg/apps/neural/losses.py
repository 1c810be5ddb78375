"""
Training objectives.

Grid head: cross-entropy summed over every output class (the label class and
each non-label class contribute), or plain categorical cross-entropy.
Regression head: half squared error, in meters for a single point and in
standardized coordinates inside the training batch loss.
Both add ``lam * 0.5 * sum ||W||^2`` over dense and head weights.
"""
from typing import Optional, Sequence, Tuple

import numpy as np

from apps.common.exceptions import ArgumentError, NumericError
from apps.grid.geometry import CellLabel
from apps.grid.maps import OccupancyMap
from .params import NetworkParams

LOSS_BCE = 'bce'
LOSS_CATEGORICAL = 'categorical'
LOSS_FORMS = (LOSS_BCE, LOSS_CATEGORICAL)

# log() floor for probabilities
PROB_FLOOR = 1e-12


def check_loss_form(loss_form: str) -> str:
    if loss_form not in LOSS_FORMS:
        raise ArgumentError(f'loss form must be one of {LOSS_FORMS}, got {loss_form!r}')
    return loss_form


def regularization_penalty(params: Optional[NetworkParams]) -> float:
    if params is None:
        return 0.0
    tensors = params.named_tensors()
    return 0.5 * float(sum(np.sum(tensors[name] ** 2) for name in params.regularized_names()))


def classification_terms(probs: np.ndarray, classes: np.ndarray, loss_form: str = LOSS_BCE) -> np.ndarray:
    """Per-example data loss for a (B, K) probability batch and (B,) class ids."""
    probs = np.asarray(probs, dtype=float)
    classes = np.asarray(classes, dtype=int)
    if not np.all(np.isfinite(probs)) or probs.min() < 0.0 or probs.max() > 1.0:
        raise NumericError('class probabilities must be finite and inside [0, 1]')
    rows = np.arange(probs.shape[0])
    target = probs[rows, classes]
    loss = -np.log(np.maximum(target, PROB_FLOOR))
    if check_loss_form(loss_form) == LOSS_BCE:
        complement = np.log(np.maximum(1.0 - probs, PROB_FLOOR))
        complement[rows, classes] = 0.0
        loss = loss - complement.sum(axis=1)
    return loss


def regression_terms(predicted: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Per-example 0.5 * ||predicted - target||^2."""
    diff = np.asarray(predicted, dtype=float) - np.asarray(target, dtype=float)
    return 0.5 * np.sum(diff * diff, axis=-1)


def classification_loss(
    output: OccupancyMap,
    label: CellLabel,
    params: Optional[NetworkParams] = None,
    lam: float = 0.0,
    loss_form: str = LOSS_BCE,
) -> float:
    z = output.class_probabilities()
    k = label.linear_class(output.geometry)
    data = classification_terms(z[None, :], np.array([k]), loss_form)[0]
    return float(data) + lam * regularization_penalty(params)


def regression_loss(
    predicted: Sequence[float],
    target: Sequence[float],
    params: Optional[NetworkParams] = None,
    lam: float = 0.0,
) -> float:
    """Loss for one regression output, in meters.

    ``params`` only contributes the weight penalty; training minimizes the
    standardized form inside ``batch_loss``.
    """
    predicted = np.asarray(predicted, dtype=float)
    target = np.asarray(target, dtype=float)
    if predicted.shape != (2,) or target.shape != (2,):
        raise ArgumentError('regression loss expects two coordinates per point')
    if not (np.all(np.isfinite(predicted)) and np.all(np.isfinite(target))):
        raise NumericError('regression loss needs finite coordinates')
    return float(regression_terms(predicted, target)) + lam * regularization_penalty(params)


def batch_loss(
    outputs: np.ndarray,
    targets: np.ndarray,
    params: NetworkParams,
    lam: float = 0.0,
    loss_form: str = LOSS_BCE,
) -> Tuple[float, float]:
    """Mean data loss over a batch and the total objective (data + lam * penalty).

    ``outputs`` are the raw network outputs as recorded on the tape: class
    probabilities for the grid head, standardized coordinates for regression.
    ``targets`` are class ids or points in meters.
    """
    if params.head_kind == 'grid':
        data = classification_terms(outputs, targets, loss_form)
    else:
        data = regression_terms(outputs, params.normalization.normalize_targets(np.asarray(targets, dtype=float)))
    mean = float(np.mean(data))
    return mean, mean + lam * regularization_penalty(params)
