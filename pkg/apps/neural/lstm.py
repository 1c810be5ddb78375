"""
A single LSTM step (peephole-free variant with a forget gate).

    i = sigmoid(W_xi x + W_hi h + b_i)
    f = sigmoid(W_xf x + W_hf h + b_f)
    o = sigmoid(W_xo x + W_ho h + b_o)
    g = tanh(W_xc x + W_hc h + b_c)
    c' = f * c + i * g
    h' = o * tanh(c')

Works on a single vector or on a batch whose last axis is the feature axis.
"""
import numpy as np
from scipy.special import expit

from apps.common.exceptions import ShapeError
from .params import LstmLayerParams, LstmLayerState


def lstm_step(params: LstmLayerParams, state: LstmLayerState, x: np.ndarray) -> LstmLayerState:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != params.input_size:
        raise ShapeError(f'LSTM input has {x.shape[-1]} features, layer expects {params.input_size}')
    h, c = state.h, state.c
    if h.shape[-1] != params.hidden_size or c.shape != h.shape:
        raise ShapeError(
            f'LSTM state shapes h={h.shape}, c={c.shape} do not match hidden size {params.hidden_size}'
        )
    if h.shape[:-1] != x.shape[:-1]:
        raise ShapeError(f'batch shape of input {x.shape[:-1]} differs from state {h.shape[:-1]}')

    i = expit(x @ params.W_xi.T + h @ params.W_hi.T + params.b_i)
    f = expit(x @ params.W_xf.T + h @ params.W_hf.T + params.b_f)
    o = expit(x @ params.W_xo.T + h @ params.W_ho.T + params.b_o)
    g = np.tanh(x @ params.W_xc.T + h @ params.W_hc.T + params.b_c)
    c_next = f * c + i * g
    h_next = o * np.tanh(c_next)
    return LstmLayerState(c=c_next, h=h_next, i=i, f=f, o=o, g=g)
