"""
Central-difference verification of the analytic gradients.
"""
from typing import Dict

import numpy as np

from .losses import LOSS_BCE, batch_loss
from .network import backward, forward_batch
from .params import NetworkParams

# |a - n| / max(|a|, |n|, RELATIVE_FLOOR)
RELATIVE_FLOOR = 1e-5


def objective(params: NetworkParams, features: np.ndarray, targets, lam: float = 0.0,
              loss_form: str = LOSS_BCE) -> float:
    outputs, tape = forward_batch(params, features)
    return batch_loss(tape.raw_output, targets, params, lam, loss_form)[1]


def numerical_gradients(params: NetworkParams, features: np.ndarray, targets, lam: float = 0.0,
                        loss_form: str = LOSS_BCE, eps: float = 1e-5) -> NetworkParams:
    grads = params.zeros_like()
    grad_tensors = grads.named_tensors()
    for name, tensor in params.named_tensors().items():
        flat = tensor.reshape(-1)
        out = grad_tensors[name].reshape(-1)
        for k in range(flat.size):
            saved = flat[k]
            flat[k] = saved + eps
            plus = objective(params, features, targets, lam, loss_form)
            flat[k] = saved - eps
            minus = objective(params, features, targets, lam, loss_form)
            flat[k] = saved
            out[k] = (plus - minus) / (2.0 * eps)
    return grads


def relative_errors(analytic: NetworkParams, numeric: NetworkParams) -> Dict[str, float]:
    """Largest relative error per tensor name."""
    errors = {}
    numeric_tensors = numeric.named_tensors()
    for name, a in analytic.named_tensors().items():
        n = numeric_tensors[name]
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), RELATIVE_FLOOR)
        errors[name] = float(np.max(np.abs(a - n) / denom)) if a.size else 0.0
    return errors


def check_gradients(params: NetworkParams, features: np.ndarray, targets, lam: float = 0.0,
                    loss_form: str = LOSS_BCE, eps: float = 1e-5) -> Dict[str, float]:
    _, tape = forward_batch(params, features)
    analytic = backward(tape, targets, lam=lam, loss_form=loss_form, params=params)
    if params.head_kind == 'grid':
        targets = np.asarray(targets, dtype=int)
    numeric = numerical_gradients(params, features, targets, lam, loss_form, eps)
    return relative_errors(analytic, numeric)
