"""
Mini-batch SGD training with plateau learning-rate decay.

``train`` returns the parameters with the best validation loss seen and a
``TrainingLog`` of per-epoch losses and learning-rate changes.
"""
import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from apps.common.exceptions import ArgumentError, DataError
from apps.grid.geometry import GridGeometry
from .losses import LOSS_BCE, batch_loss, check_loss_form, regularization_penalty
from .network import backward, forward_batch
from .params import HEAD_GRID, FeatureNormalization, NetworkConfig, NetworkParams, initialize_network

logger = logging.getLogger(__name__)


@dataclass
class ExampleSet:
    """Stacked windows: features (N, T, 6), label class ids (N,), label points in meters (N, 2)."""

    features: np.ndarray
    classes: np.ndarray
    points: np.ndarray

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.classes = np.asarray(self.classes, dtype=int)
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 2)
        n = self.features.shape[0]
        if self.classes.shape != (n,) or self.points.shape[0] != n:
            raise ArgumentError('features, classes and points must have the same length')

    def __len__(self) -> int:
        return self.features.shape[0]

    def targets(self, head_kind: str) -> np.ndarray:
        return self.classes if head_kind == HEAD_GRID else self.points

    def subset(self, idx: np.ndarray) -> 'ExampleSet':
        return ExampleSet(self.features[idx], self.classes[idx], self.points[idx])


@dataclass
class TrainConfig:
    learning_rate_init: float = 0.001
    batch_size: int = 40
    lam: float = 0.0005
    lr_decay_factor: float = 0.5
    patience_epochs: int = 3
    max_epochs: int = 30
    rng_seed: int = 0
    sequence_length: int = 20
    min_learning_rate: float = 1e-6
    momentum: float = 0.0
    clip_norm: Optional[float] = None
    loss_form: str = LOSS_BCE

    def validate(self) -> 'TrainConfig':
        if self.learning_rate_init <= 0:
            raise ArgumentError('learning rate must be positive')
        if self.batch_size < 1 or self.max_epochs < 1 or self.patience_epochs < 1:
            raise ArgumentError('batch size, epochs and patience must be at least 1')
        if not 0 < self.lr_decay_factor < 1:
            raise ArgumentError('learning-rate decay factor must lie in (0, 1)')
        if self.lam < 0:
            raise ArgumentError('regularization weight must be non-negative')
        if not 0 <= self.momentum < 1:
            raise ArgumentError('momentum must lie in [0, 1)')
        if self.clip_norm is not None and self.clip_norm <= 0:
            raise ArgumentError('clip norm must be positive')
        check_loss_form(self.loss_form)
        return self


class PlateauScheduler:
    """Multiply the learning rate by ``factor`` after ``patience`` epochs without improvement."""

    def __init__(self, learning_rate: float, factor: float = 0.5, patience: int = 3,
                 min_learning_rate: float = 1e-6):
        self.learning_rate = learning_rate
        self.factor = factor
        self.patience = patience
        self.min_learning_rate = min_learning_rate
        self.best = np.inf
        self.bad_epochs = 0

    def observe(self, val_loss: float) -> bool:
        """Record one epoch's validation loss; True when the rate was just decayed."""
        if val_loss < self.best:
            self.best = val_loss
            self.bad_epochs = 0
            return False
        self.bad_epochs += 1
        if self.bad_epochs >= self.patience:
            self.learning_rate *= self.factor
            self.bad_epochs = 0
            return True
        return False

    @property
    def exhausted(self) -> bool:
        return self.learning_rate < self.min_learning_rate


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float
    learning_rate: float
    lr_decayed: bool = False


@dataclass
class TrainingLog:
    initial_train_loss: float
    initial_val_loss: float
    epochs: List[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0
    best_val_loss: float = float('inf')

    @property
    def final_train_loss(self) -> float:
        return self.epochs[-1].train_loss if self.epochs else self.initial_train_loss

    def rows(self) -> List[dict]:
        rows = [{'epoch': 0, 'train_loss': self.initial_train_loss, 'val_loss': self.initial_val_loss,
                 'learning_rate': None, 'lr_decayed': False}]
        rows.extend(vars(record).copy() for record in self.epochs)
        return rows


def evaluate_loss(params: NetworkParams, examples: ExampleSet, lam: float = 0.0,
                  loss_form: str = LOSS_BCE, batch_size: int = 256) -> float:
    """Mean data loss over ``examples`` plus ``lam`` times the weight penalty."""
    if len(examples) == 0:
        raise DataError('cannot evaluate a loss over zero windows')
    targets = examples.targets(params.head_kind)
    total = 0.0
    for start in range(0, len(examples), batch_size):
        stop = start + batch_size
        _, tape = forward_batch(params, examples.features[start:stop])
        mean, _ = batch_loss(tape.raw_output, targets[start:stop], params, 0.0, loss_form)
        total += mean * tape.batch
    return total / len(examples) + lam * regularization_penalty(params)


def gradient_norm(grads: NetworkParams) -> float:
    return float(np.sqrt(sum(np.sum(g * g) for g in grads.named_tensors().values())))


def sgd_step(params: NetworkParams, grads: NetworkParams, learning_rate: float,
             velocity: Optional[NetworkParams] = None, momentum: float = 0.0,
             clip_norm: Optional[float] = None) -> None:
    """In-place update ``v = momentum * v - lr * g; p += v`` (plain SGD without velocity)."""
    scale = 1.0
    if clip_norm is not None:
        norm = gradient_norm(grads)
        if norm > clip_norm:
            scale = clip_norm / norm
    grad_tensors = grads.named_tensors()
    velocity_tensors = velocity.named_tensors() if velocity is not None else None
    for name, tensor in params.named_tensors().items():
        step = -learning_rate * scale * grad_tensors[name]
        if velocity_tensors is not None:
            v = velocity_tensors[name]
            v *= momentum
            v += step
            step = v
        tensor += step


def train(
    train_set: ExampleSet,
    val_set: ExampleSet,
    config: TrainConfig,
    network: NetworkConfig,
    geometry: GridGeometry,
    delta: float,
) -> Tuple[NetworkParams, TrainingLog]:
    config.validate()
    network.validate()
    if len(train_set) == 0 or len(val_set) == 0:
        raise ArgumentError('training needs at least one training and one validation window')
    rng = np.random.default_rng(config.rng_seed)
    normalization = FeatureNormalization.fit(train_set.features, train_set.points)
    params = initialize_network(network, geometry, delta, rng, normalization, config.sequence_length)
    velocity = params.zeros_like() if config.momentum else None
    targets = train_set.targets(params.head_kind)

    def losses(p):
        return (evaluate_loss(p, train_set, config.lam, config.loss_form),
                evaluate_loss(p, val_set, config.lam, config.loss_form))

    initial_train, initial_val = losses(params)
    log = TrainingLog(initial_train_loss=initial_train, initial_val_loss=initial_val)
    logger.info(
        'Training %s head for delta=%.2fs on %d windows (%d validation); initial loss %.5f / %.5f',
        network.head_kind, delta, len(train_set), len(val_set), initial_train, initial_val,
    )
    scheduler = PlateauScheduler(config.learning_rate_init, config.lr_decay_factor,
                                 config.patience_epochs, config.min_learning_rate)
    best = params.copy()

    for epoch in range(1, config.max_epochs + 1):
        learning_rate = scheduler.learning_rate
        order = rng.permutation(len(train_set))
        for start in range(0, len(order), config.batch_size):
            idx = order[start:start + config.batch_size]
            _, tape = forward_batch(params, train_set.features[idx])
            grads = backward(tape, targets[idx], lam=config.lam, loss_form=config.loss_form)
            sgd_step(params, grads, learning_rate, velocity, config.momentum, config.clip_norm)

        train_loss, val_loss = losses(params)
        if val_loss < log.best_val_loss:
            log.best_val_loss = val_loss
            log.best_epoch = epoch
            best = params.copy()
        decayed = scheduler.observe(val_loss)
        log.epochs.append(EpochRecord(epoch, train_loss, val_loss, learning_rate, decayed))
        logger.info('epoch %d: train %.5f, val %.5f, lr %.2e', epoch, train_loss, val_loss, learning_rate)
        if decayed:
            logger.info('validation loss plateaued; learning rate now %.2e', scheduler.learning_rate)
        if scheduler.exhausted:
            logger.info('learning rate below %.1e, stopping after epoch %d', config.min_learning_rate, epoch)
            break

    logger.info('best validation loss %.5f at epoch %d', log.best_val_loss, log.best_epoch)
    return best, log
