"""
Parameter containers for the LSTM occupancy predictor.

A network is: input dense stack (per time step) -> stacked LSTM layers ->
output dense stack (on the final hidden state) -> linear head. The grid head
feeds a softmax over ``m_x * m_y + 1`` classes; the regression head emits two
standardized coordinates that are mapped back to meters with the frozen target
normalization.
"""
import copy
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from apps.common.exceptions import ArgumentError, ShapeError
from apps.grid.geometry import GridGeometry

HEAD_GRID = 'grid'
HEAD_REGRESSION = 'regress'
HEAD_KINDS = (HEAD_GRID, HEAD_REGRESSION)

ACTIVATIONS = ('tanh', 'identity')

INIT_RECIPE = 'uniform(+-1/sqrt(fan_in)); biases 0; forget-gate bias {forget_bias}'

GATES = ('i', 'f', 'o', 'c')


class FeatureVector(NamedTuple):
    """One time step of network input (ego-relative target motion + ego motion)."""

    x: float
    y: float
    x_dot: float
    y_dot: float
    psi: float
    v: float


FEATURE_NAMES = FeatureVector._fields
N_FEATURES = len(FEATURE_NAMES)


@dataclass
class DenseLayer:
    weight: np.ndarray  # (out, in)
    bias: np.ndarray  # (out,)
    activation: str = 'tanh'

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ArgumentError(f'unknown activation {self.activation!r}')
        if self.weight.ndim != 2 or self.bias.shape != (self.weight.shape[0],):
            raise ShapeError(f'dense layer weight {self.weight.shape} / bias {self.bias.shape} mismatch')

    @property
    def in_size(self) -> int:
        return self.weight.shape[1]

    @property
    def out_size(self) -> int:
        return self.weight.shape[0]


@dataclass
class LstmLayerParams:
    W_xi: np.ndarray
    W_hi: np.ndarray
    W_xf: np.ndarray
    W_hf: np.ndarray
    W_xo: np.ndarray
    W_ho: np.ndarray
    W_xc: np.ndarray
    W_hc: np.ndarray
    b_i: np.ndarray
    b_f: np.ndarray
    b_o: np.ndarray
    b_c: np.ndarray

    TENSOR_NAMES = (
        'W_xi', 'W_hi', 'W_xf', 'W_hf', 'W_xo', 'W_ho', 'W_xc', 'W_hc',
        'b_i', 'b_f', 'b_o', 'b_c',
    )

    def __post_init__(self):
        hidden, inp = self.W_xi.shape
        for gate in GATES:
            w_x = getattr(self, f'W_x{gate}')
            w_h = getattr(self, f'W_h{gate}')
            b = getattr(self, f'b_{gate}')
            if w_x.shape != (hidden, inp) or w_h.shape != (hidden, hidden) or b.shape != (hidden,):
                raise ShapeError(
                    f'gate {gate}: W_x {w_x.shape}, W_h {w_h.shape}, b {b.shape} '
                    f'inconsistent with hidden={hidden}, input={inp}'
                )

    @property
    def hidden_size(self) -> int:
        return self.W_xi.shape[0]

    @property
    def input_size(self) -> int:
        return self.W_xi.shape[1]

    @classmethod
    def zeros(cls, input_size: int, hidden_size: int) -> 'LstmLayerParams':
        tensors = {}
        for gate in GATES:
            tensors[f'W_x{gate}'] = np.zeros((hidden_size, input_size))
            tensors[f'W_h{gate}'] = np.zeros((hidden_size, hidden_size))
            tensors[f'b_{gate}'] = np.zeros(hidden_size)
        return cls(**tensors)

    def tensors(self) -> Iterator[Tuple[str, np.ndarray]]:
        for name in self.TENSOR_NAMES:
            yield name, getattr(self, name)


@dataclass
class LstmLayerState:
    """Cell and hidden state after a step, with the gate activations of that step."""

    c: np.ndarray
    h: np.ndarray
    i: Optional[np.ndarray] = None
    f: Optional[np.ndarray] = None
    o: Optional[np.ndarray] = None
    g: Optional[np.ndarray] = None

    @classmethod
    def zeros(cls, hidden_size: int, batch: Optional[int] = None) -> 'LstmLayerState':
        shape = (hidden_size,) if batch is None else (batch, hidden_size)
        return cls(c=np.zeros(shape), h=np.zeros(shape))


@dataclass
class FeatureNormalization:
    """Affine standardization of inputs and of regression targets, fitted on the training split."""

    offset: np.ndarray = field(default_factory=lambda: np.zeros(N_FEATURES))
    scale: np.ndarray = field(default_factory=lambda: np.ones(N_FEATURES))
    target_offset: np.ndarray = field(default_factory=lambda: np.zeros(2))
    target_scale: np.ndarray = field(default_factory=lambda: np.ones(2))

    @classmethod
    def fit(cls, features: np.ndarray, points: np.ndarray) -> 'FeatureNormalization':
        flat = np.asarray(features, dtype=float).reshape(-1, features.shape[-1])
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        return cls(
            offset=flat.mean(axis=0),
            scale=_safe_scale(flat.std(axis=0)),
            target_offset=points.mean(axis=0),
            target_scale=_safe_scale(points.std(axis=0)),
        )

    def apply(self, features: np.ndarray) -> np.ndarray:
        return (features - self.offset) / self.scale

    def normalize_targets(self, points: np.ndarray) -> np.ndarray:
        return (points - self.target_offset) / self.target_scale

    def denormalize_targets(self, values: np.ndarray) -> np.ndarray:
        return values * self.target_scale + self.target_offset

    def to_dict(self) -> Dict[str, List[float]]:
        return {
            'offset': [float(v) for v in self.offset],
            'scale': [float(v) for v in self.scale],
            'target_offset': [float(v) for v in self.target_offset],
            'target_scale': [float(v) for v in self.target_scale],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Sequence[float]]) -> 'FeatureNormalization':
        return cls(**{k: np.asarray(data[k], dtype=float) for k in
                      ('offset', 'scale', 'target_offset', 'target_scale')})


def _safe_scale(std: np.ndarray) -> np.ndarray:
    # constant features keep unit scale
    return np.where(std > 1e-8, std, 1.0)


@dataclass
class NetworkConfig:
    input_fc: Tuple[int, ...] = (64,)
    lstm_hidden: Tuple[int, ...] = (128, 128)
    output_fc: Tuple[int, ...] = (256,)
    head_kind: str = HEAD_GRID
    forget_bias: float = 1.0
    n_features: int = N_FEATURES

    def validate(self) -> 'NetworkConfig':
        if self.head_kind not in HEAD_KINDS:
            raise ArgumentError(f'head kind must be one of {HEAD_KINDS}, got {self.head_kind!r}')
        if not self.lstm_hidden:
            raise ArgumentError('at least one LSTM layer is required')
        sizes = (self.n_features, *self.input_fc, *self.lstm_hidden, *self.output_fc)
        if any(int(s) < 1 for s in sizes):
            raise ArgumentError(f'layer sizes must be positive: {sizes}')
        return self


@dataclass
class NetworkParams:
    input_fc: List[DenseLayer]
    lstm: List[LstmLayerParams]
    output_fc: List[DenseLayer]
    head: DenseLayer
    head_kind: str
    normalization: FeatureNormalization
    geometry: GridGeometry
    delta: float
    init_recipe: str = ''
    window: Optional[int] = None

    def __post_init__(self):
        self.check_dimensions()

    @property
    def n_features(self) -> int:
        first = self.input_fc[0] if self.input_fc else None
        return first.in_size if first else self.lstm[0].input_size

    @property
    def output_size(self) -> int:
        return self.geometry.total_classes() if self.head_kind == HEAD_GRID else 2

    def check_dimensions(self) -> None:
        if self.head_kind not in HEAD_KINDS:
            raise ArgumentError(f'unknown head kind {self.head_kind!r}')
        if not self.lstm:
            raise ShapeError('network has no LSTM layer')
        size = self.n_features
        for n, layer in enumerate(self.input_fc):
            if layer.in_size != size:
                raise ShapeError(f'input_fc.{n} expects {layer.in_size} inputs, chain gives {size}')
            size = layer.out_size
        for n, layer in enumerate(self.lstm):
            if layer.input_size != size:
                raise ShapeError(f'lstm.{n} expects {layer.input_size} inputs, chain gives {size}')
            size = layer.hidden_size
        for n, layer in enumerate(self.output_fc):
            if layer.in_size != size:
                raise ShapeError(f'output_fc.{n} expects {layer.in_size} inputs, chain gives {size}')
            size = layer.out_size
        if self.head.in_size != size or self.head.out_size != self.output_size:
            raise ShapeError(
                f'head is {self.head.in_size}->{self.head.out_size}, '
                f'expected {size}->{self.output_size}'
            )
        if self.head.activation != 'identity':
            raise ShapeError('head must be linear')

    def named_tensors(self) -> 'OrderedDict[str, np.ndarray]':
        """Every trainable tensor by stable name; values are the live arrays."""
        named: 'OrderedDict[str, np.ndarray]' = OrderedDict()
        for n, layer in enumerate(self.input_fc):
            named[f'input_fc.{n}.weight'] = layer.weight
            named[f'input_fc.{n}.bias'] = layer.bias
        for n, layer in enumerate(self.lstm):
            for name, tensor in layer.tensors():
                named[f'lstm.{n}.{name}'] = tensor
        for n, layer in enumerate(self.output_fc):
            named[f'output_fc.{n}.weight'] = layer.weight
            named[f'output_fc.{n}.bias'] = layer.bias
        named['head.weight'] = self.head.weight
        named['head.bias'] = self.head.bias
        return named

    def regularized_names(self) -> List[str]:
        """Weights under the L2 penalty: dense and head weights, never biases or LSTM tensors."""
        return [name for name in self.named_tensors()
                if name.endswith('.weight')]

    def layer_dims(self) -> Dict[str, list]:
        return {
            'input_fc': [[l.in_size, l.out_size, l.activation] for l in self.input_fc],
            'lstm': [[l.input_size, l.hidden_size] for l in self.lstm],
            'output_fc': [[l.in_size, l.out_size, l.activation] for l in self.output_fc],
            'head': [self.head.in_size, self.head.out_size],
        }

    def copy(self) -> 'NetworkParams':
        return copy.deepcopy(self)

    def zeros_like(self) -> 'NetworkParams':
        """Same structure with every tensor zeroed (gradient / momentum buffers)."""
        clone = self.copy()
        for tensor in clone.named_tensors().values():
            tensor[...] = 0.0
        return clone

    @classmethod
    def from_layer_dims(
        cls,
        layer_dims: Dict[str, list],
        head_kind: str,
        normalization: FeatureNormalization,
        geometry: GridGeometry,
        delta: float,
        init_recipe: str = '',
        window: Optional[int] = None,
    ) -> 'NetworkParams':
        """Zero-filled parameters with the given architecture."""
        def dense(spec, activation=None):
            n_in, n_out = int(spec[0]), int(spec[1])
            act = activation or spec[2]
            return DenseLayer(np.zeros((n_out, n_in)), np.zeros(n_out), act)

        return cls(
            input_fc=[dense(s) for s in layer_dims['input_fc']],
            lstm=[LstmLayerParams.zeros(int(s[0]), int(s[1])) for s in layer_dims['lstm']],
            output_fc=[dense(s) for s in layer_dims['output_fc']],
            head=dense(layer_dims['head'], 'identity'),
            head_kind=head_kind,
            normalization=normalization,
            geometry=geometry,
            delta=float(delta),
            init_recipe=init_recipe,
            window=window,
        )


def _uniform(rng: np.random.Generator, n_out: int, n_in: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(n_in)
    return rng.uniform(-bound, bound, size=(n_out, n_in))


def initialize_network(
    config: NetworkConfig,
    geometry: GridGeometry,
    delta: float,
    rng: np.random.Generator,
    normalization: Optional[FeatureNormalization] = None,
    window: Optional[int] = None,
) -> NetworkParams:
    """Fresh parameters: uniform(+-1/sqrt(fan_in)) per matrix, zero biases, forget bias configurable."""
    config.validate()
    size = config.n_features
    input_fc = []
    for width in config.input_fc:
        input_fc.append(DenseLayer(_uniform(rng, width, size), np.zeros(width), 'tanh'))
        size = width
    lstm = []
    for hidden in config.lstm_hidden:
        tensors = {}
        for gate in GATES:
            tensors[f'W_x{gate}'] = _uniform(rng, hidden, size)
            tensors[f'W_h{gate}'] = _uniform(rng, hidden, hidden)
            tensors[f'b_{gate}'] = np.zeros(hidden)
        tensors['b_f'] = np.full(hidden, float(config.forget_bias))
        lstm.append(LstmLayerParams(**tensors))
        size = hidden
    output_fc = []
    for width in config.output_fc:
        output_fc.append(DenseLayer(_uniform(rng, width, size), np.zeros(width), 'tanh'))
        size = width
    n_out = geometry.total_classes() if config.head_kind == HEAD_GRID else 2
    head = DenseLayer(_uniform(rng, n_out, size), np.zeros(n_out), 'identity')
    return NetworkParams(
        input_fc=input_fc,
        lstm=lstm,
        output_fc=output_fc,
        head=head,
        head_kind=config.head_kind,
        normalization=normalization or FeatureNormalization(),
        geometry=geometry,
        delta=float(delta),
        init_recipe=INIT_RECIPE.format(forget_bias=config.forget_bias),
        window=window,
    )
