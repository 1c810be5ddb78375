"""
Forward pass and backpropagation-through-time for the occupancy network.

``forward_batch`` runs a (B, T, F) batch and records every intermediate on a
``ForwardTape``; ``backward`` consumes the tape and returns gradients shaped
like the parameters.
"""
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from apps.common.exceptions import ArgumentError, NumericError, ShapeError, TapeStateError
from apps.grid.geometry import CellLabel
from apps.grid.maps import OccupancyMap
from .losses import LOSS_BCE, LOSS_CATEGORICAL, PROB_FLOOR, check_loss_form
from .lstm import lstm_step
from .params import HEAD_GRID, DenseLayer, LstmLayerParams, LstmLayerState, NetworkParams

# longest sequence accepted by forward()
MAX_SEQUENCE_LENGTH = 1000


@dataclass
class DenseTrace:
    inputs: np.ndarray
    outputs: np.ndarray


@dataclass
class LstmTrace:
    inputs: np.ndarray  # (B, T, in)
    h: np.ndarray  # (B, T+1, H), index 0 is the initial state
    c: np.ndarray  # (B, T+1, H)
    i: np.ndarray  # (B, T, H)
    f: np.ndarray
    o: np.ndarray
    g: np.ndarray


@dataclass
class ForwardTape:
    params: NetworkParams
    batch: int
    steps: int
    input_fc: List[DenseTrace]
    lstm: List[LstmTrace]
    output_fc: List[DenseTrace]
    head_input: np.ndarray
    raw_output: np.ndarray  # class probabilities, or standardized coordinates


def _check_finite(values: np.ndarray, layer: str) -> np.ndarray:
    if not np.all(np.isfinite(values)):
        raise NumericError('non-finite activation', layer=layer)
    return values


def _dense(layer: DenseLayer, inputs: np.ndarray) -> np.ndarray:
    z = inputs @ layer.weight.T + layer.bias
    return np.tanh(z) if layer.activation == 'tanh' else z


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _run_lstm(layer: LstmLayerParams, inputs: np.ndarray) -> LstmTrace:
    batch, steps, _ = inputs.shape
    state = LstmLayerState.zeros(layer.hidden_size, batch)
    hs, cs = [state.h], [state.c]
    gates = {'i': [], 'f': [], 'o': [], 'g': []}
    for t in range(steps):
        state = lstm_step(layer, state, inputs[:, t])
        hs.append(state.h)
        cs.append(state.c)
        for name in gates:
            gates[name].append(getattr(state, name))
    return LstmTrace(
        inputs=inputs,
        h=np.stack(hs, axis=1),
        c=np.stack(cs, axis=1),
        **{name: np.stack(values, axis=1) for name, values in gates.items()},
    )


def forward_batch(
    params: NetworkParams,
    features: np.ndarray,
    max_length: Optional[int] = None,
) -> Tuple[np.ndarray, ForwardTape]:
    """Run a batch of raw (un-normalized) feature sequences.

    Returns class probabilities (B, M+1) for the grid head or points in meters
    (B, 2) for the regression head, together with the tape for ``backward``.
    """
    features = np.asarray(features, dtype=float)
    if features.ndim != 3:
        raise ShapeError(f'expected a (batch, steps, features) array, got shape {features.shape}')
    batch, steps, n_features = features.shape
    if batch == 0 or steps == 0:
        raise ArgumentError('forward needs at least one sequence with at least one step')
    if max_length is not None and steps > max_length:
        raise ArgumentError(f'sequence of {steps} steps exceeds the maximum of {max_length}')
    if n_features != params.n_features:
        raise ShapeError(f'sequence has {n_features} features, network expects {params.n_features}')
    _check_finite(features, 'input')

    x = params.normalization.apply(features).reshape(batch * steps, n_features)
    input_traces = []
    for n, layer in enumerate(params.input_fc):
        out = _check_finite(_dense(layer, x), f'input_fc.{n}')
        input_traces.append(DenseTrace(x, out))
        x = out

    seq = x.reshape(batch, steps, -1)
    lstm_traces = []
    for n, layer in enumerate(params.lstm):
        trace = _run_lstm(layer, seq)
        _check_finite(trace.h, f'lstm.{n}')
        lstm_traces.append(trace)
        seq = trace.h[:, 1:]

    a = seq[:, -1]
    output_traces = []
    for n, layer in enumerate(params.output_fc):
        out = _check_finite(_dense(layer, a), f'output_fc.{n}')
        output_traces.append(DenseTrace(a, out))
        a = out

    logits = _check_finite(_dense(params.head, a), 'head')
    if params.head_kind == HEAD_GRID:
        raw = _check_finite(softmax(logits), 'softmax')
        outputs = raw
    else:
        raw = logits
        outputs = params.normalization.denormalize_targets(raw)

    tape = ForwardTape(
        params=params,
        batch=batch,
        steps=steps,
        input_fc=input_traces,
        lstm=lstm_traces,
        output_fc=output_traces,
        head_input=a,
        raw_output=raw,
    )
    return outputs, tape


def forward(
    params: NetworkParams,
    sequence: Sequence[Sequence[float]],
) -> Tuple[Union[OccupancyMap, Tuple[float, float]], ForwardTape]:
    """Run one sequence of feature vectors.

    The grid head yields an ``OccupancyMap``; the regression head an (x, y)
    point in meters.
    """
    seq = np.asarray(sequence, dtype=float)
    if seq.ndim != 2 or seq.shape[0] == 0:
        raise ArgumentError('forward needs a non-empty (steps, features) sequence')
    outputs, tape = forward_batch(params, seq[None], max_length=MAX_SEQUENCE_LENGTH)
    if params.head_kind == HEAD_GRID:
        return OccupancyMap.from_class_probabilities(params.geometry, outputs[0]), tape
    return (float(outputs[0, 0]), float(outputs[0, 1])), tape


def predict_batch(params: NetworkParams, features: np.ndarray, batch_size: int = 256) -> np.ndarray:
    """Outputs for many sequences without keeping tapes around."""
    features = np.asarray(features, dtype=float)
    chunks = [forward_batch(params, features[start:start + batch_size])[0]
              for start in range(0, features.shape[0], batch_size)]
    return np.concatenate(chunks, axis=0)


def _target_array(params: NetworkParams, targets, batch: int) -> np.ndarray:
    if params.head_kind == HEAD_GRID:
        if isinstance(targets, CellLabel):
            targets = [targets]
        if isinstance(targets, (int, np.integer)):
            targets = [int(targets)]
        classes = []
        for t in targets:
            if isinstance(t, CellLabel):
                classes.append(t.linear_class(params.geometry))
            elif isinstance(t, (int, np.integer)):
                classes.append(int(t))
            else:
                raise TapeStateError(f'grid head needs cell labels or class ids as targets, got {t!r}')
        classes = np.array(classes, dtype=int)
        if classes.shape != (batch,):
            raise TapeStateError(f'{classes.shape[0]} targets for a tape of batch {batch}')
        if classes.min() < 0 or classes.max() >= params.output_size:
            raise ArgumentError('target class id out of range')
        return classes
    if any(isinstance(t, CellLabel) for t in np.atleast_1d(np.asarray(targets, dtype=object)).ravel()):
        raise TapeStateError('regression head needs (x, y) targets, got a cell label')
    points = np.asarray(targets, dtype=float).reshape(-1, 2) if np.size(targets) else np.zeros((0, 2))
    if points.shape[0] != batch:
        raise TapeStateError(f'{points.shape[0]} targets for a tape of batch {batch}')
    return params.normalization.normalize_targets(points)


def _output_gradient(tape: ForwardTape, targets: np.ndarray, loss_form: str) -> np.ndarray:
    """d(mean data loss) / d(head pre-activation)."""
    z = tape.raw_output
    batch = tape.batch
    if tape.params.head_kind != HEAD_GRID:
        return (z - targets) / batch
    rows = np.arange(batch)
    onehot = np.zeros_like(z)
    onehot[rows, targets] = 1.0
    if loss_form == LOSS_CATEGORICAL:
        return (z - onehot) / batch
    # d/dz of -[o ln z + (1-o) ln(1-z)], zero where the log floor is active
    dz = np.where(onehot == 1.0,
                  np.where(z > PROB_FLOOR, -1.0 / np.maximum(z, PROB_FLOOR), 0.0),
                  np.where(1.0 - z > PROB_FLOOR, 1.0 / np.maximum(1.0 - z, PROB_FLOOR), 0.0))
    # softmax Jacobian-vector product
    da = z * (dz - np.sum(dz * z, axis=1, keepdims=True))
    return da / batch


def _dense_backward(layer: DenseLayer, grad_layer: DenseLayer, trace_in: np.ndarray,
                    trace_out: np.ndarray, d_out: np.ndarray) -> np.ndarray:
    d_z = d_out * (1.0 - trace_out ** 2) if layer.activation == 'tanh' else d_out
    grad_layer.weight += d_z.T @ trace_in
    grad_layer.bias += d_z.sum(axis=0)
    return d_z @ layer.weight


def _lstm_backward(layer: LstmLayerParams, grads: LstmLayerParams, trace: LstmTrace,
                   d_h_out: np.ndarray) -> np.ndarray:
    batch, steps, _ = trace.inputs.shape
    d_inputs = np.zeros_like(trace.inputs)
    dh_next = np.zeros((batch, layer.hidden_size))
    dc_next = np.zeros((batch, layer.hidden_size))
    for t in reversed(range(steps)):
        i, f, o, g = trace.i[:, t], trace.f[:, t], trace.o[:, t], trace.g[:, t]
        tanh_c = np.tanh(trace.c[:, t + 1])
        dh = d_h_out[:, t] + dh_next
        dc = dc_next + dh * o * (1.0 - tanh_c ** 2)
        pre = {
            'i': dc * g * i * (1.0 - i),
            'f': dc * trace.c[:, t] * f * (1.0 - f),
            'o': dh * tanh_c * o * (1.0 - o),
            'c': dc * i * (1.0 - g ** 2),
        }
        x_t, h_prev = trace.inputs[:, t], trace.h[:, t]
        dx = np.zeros_like(x_t)
        dh_next = np.zeros_like(h_prev)
        for gate, da in pre.items():
            getattr(grads, f'W_x{gate}')[...] += da.T @ x_t
            getattr(grads, f'W_h{gate}')[...] += da.T @ h_prev
            getattr(grads, f'b_{gate}')[...] += da.sum(axis=0)
            dx += da @ getattr(layer, f'W_x{gate}')
            dh_next += da @ getattr(layer, f'W_h{gate}')
        dc_next = dc * f
        d_inputs[:, t] = dx
    return d_inputs


def backward(
    tape: ForwardTape,
    targets,
    lam: float = 0.0,
    loss_form: str = LOSS_BCE,
    params: Optional[NetworkParams] = None,
) -> NetworkParams:
    """Gradient of ``mean data loss + lam * 0.5 * sum ||W||^2`` w.r.t. every parameter.

    ``targets`` are cell labels / class ids for the grid head and points in
    meters for the regression head. Passing ``params`` asserts the tape was
    produced by exactly those parameters.
    """
    if params is not None and params is not tape.params:
        raise TapeStateError('tape was recorded with different parameters')
    net = tape.params
    check_loss_form(loss_form)
    target_values = _target_array(net, targets, tape.batch)
    grads = net.zeros_like()

    d = _output_gradient(tape, target_values, loss_form)
    d = _dense_backward(net.head, grads.head, tape.head_input, tape.raw_output, d)
    for n in reversed(range(len(net.output_fc))):
        trace = tape.output_fc[n]
        d = _dense_backward(net.output_fc[n], grads.output_fc[n], trace.inputs, trace.outputs, d)

    d_seq = np.zeros((tape.batch, tape.steps, net.lstm[-1].hidden_size))
    d_seq[:, -1] = d
    for n in reversed(range(len(net.lstm))):
        d_seq = _lstm_backward(net.lstm[n], grads.lstm[n], tape.lstm[n], d_seq)

    d = d_seq.reshape(tape.batch * tape.steps, -1)
    for n in reversed(range(len(net.input_fc))):
        trace = tape.input_fc[n]
        d = _dense_backward(net.input_fc[n], grads.input_fc[n], trace.inputs, trace.outputs, d)

    if lam:
        weights = net.named_tensors()
        grad_tensors = grads.named_tensors()
        for name in net.regularized_names():
            grad_tensors[name] += lam * weights[name]
    return grads
