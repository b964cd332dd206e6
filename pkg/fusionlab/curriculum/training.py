import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from fusionlab.diffcore.tape import PRECISIONS, GradTape
from fusionlab.metrics.report import MetricsReport, build_report
from fusionlab.prmf.model import PARAMETER_GROUPS, FusionModel
from fusionlab.utils.errors import ConfigurationError, DivergenceError, InputError
from .loss import total_loss
from .optim import Adam
from .schedule import CurriculumSchedule, lambda_at, stage_for_epoch

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 32
    learning_rate: float = 1e-4
    epochs: int = 150
    seed: int = 42
    precision: str = 'float64'
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    use_curriculum: bool = True
    eval_batch_size: int = 256

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigurationError(f'batch size must be at least 1, got {self.batch_size}')
        if self.learning_rate <= 0:
            raise ConfigurationError(f'learning rate must be positive, got {self.learning_rate}')
        if self.precision not in PRECISIONS:
            raise ConfigurationError(f'unknown precision {self.precision!r}')


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    lam: float
    phase: int
    train_loss: float
    val_acc: float

    def to_line(self) -> str:
        return (
            f'epoch={self.epoch} lambda={self.lam:.6f} phase={self.phase} '
            f'train_loss={self.train_loss:.6f} val_acc={self.val_acc:.6f}'
        )


@dataclass
class TrainingResult:
    model: FusionModel
    log: list[EpochRecord] = field(default_factory=list)

    def log_text(self) -> str:
        return ''.join(record.to_line() + '\n' for record in self.log)


@dataclass(frozen=True)
class Evaluation:
    report: MetricsReport
    predictions: np.ndarray
    probabilities: np.ndarray
    alpha: np.ndarray | None
    alpha_clean: float
    alpha_noisy: float


def _batches(count: int, batch_size: int, order: np.ndarray | None = None):
    order = np.arange(count) if order is None else order
    for batch_index, start in enumerate(range(0, count, batch_size)):
        yield batch_index, order[start:start + batch_size]


def predict(model: FusionModel, data, batch_size: int = 256, precision: str = 'float64'):
    """Fused logits and per-sample α (None for variants without a gate), all parameters frozen."""
    logits, alphas = [], []
    for _, indices in _batches(len(data), batch_size):
        batch = data.subset(indices)
        tape = GradTape(precision, frozen_groups=PARAMETER_GROUPS)
        output = model.forward(tape, batch.images, batch.texts)
        logits.append(output.fused_logits.numpy().astype(np.float64))
        if output.alpha is not None:
            alphas.append(output.alpha.numpy().astype(np.float64))
    return np.concatenate(logits), (np.concatenate(alphas) if alphas else None)


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = np.exp(logits - logits.max(axis=1, keepdims=True))
    return shifted / shifted.sum(axis=1, keepdims=True)


def evaluate_model(model: FusionModel, data, batch_size: int = 256, precision: str = 'float64') -> Evaluation:
    """
    Metrics on the fused prediction, the deployment path, plus mean α over clean and over
    corrupted samples (NaN when a subset is empty or the variant has no gate).
    """
    logits, alpha = predict(model, data, batch_size, precision)
    probabilities = _softmax(logits)
    predictions = logits.argmax(axis=1)
    report = build_report(data.labels, predictions, probabilities, model.config.num_classes)
    alpha_clean = alpha_noisy = math.nan
    if alpha is not None:
        if (~data.noisy).any():
            alpha_clean = float(alpha[~data.noisy].mean())
        if data.noisy.any():
            alpha_noisy = float(alpha[data.noisy].mean())
    return Evaluation(report, predictions, probabilities, alpha, alpha_clean, alpha_noisy)


def accuracy(model: FusionModel, data, batch_size: int = 256, precision: str = 'float64') -> float:
    logits, _ = predict(model, data, batch_size, precision)
    return float((logits.argmax(axis=1) == data.labels).mean())


def train(
        config: TrainConfig,
        schedule: CurriculumSchedule,
        model: FusionModel,
        train_data,
        val_data,
        on_epoch: Callable[[EpochRecord], None] | None = None,
) -> TrainingResult:
    """
    Seeded shuffling each epoch, total loss with λ(e) (λ ≡ 1 without curriculum) and Adam
    steps on the groups that ``stage_for_epoch`` leaves trainable. Frozen groups are bound
    as constants, so their master arrays are never written.
    """
    if len(train_data) == 0:
        raise InputError('training set is empty')
    if schedule.total_epochs != config.epochs:
        raise ConfigurationError(f'schedule has {schedule.total_epochs} epochs, config asks for {config.epochs}')
    rng = np.random.default_rng(config.seed)
    optimizer = Adam(config.learning_rate, config.adam_beta1, config.adam_beta2, config.adam_eps)
    params = model.named_parameters()
    result = TrainingResult(model=model)

    for epoch in range(config.epochs):
        mask = stage_for_epoch(schedule, epoch)
        lam = lambda_at(schedule, epoch) if config.use_curriculum else 1.0
        total, seen = 0.0, 0
        for batch_index, indices in _batches(len(train_data), config.batch_size, rng.permutation(len(train_data))):
            batch = train_data.subset(indices)
            tape = GradTape(config.precision, frozen_groups=mask.frozen_groups())
            output = model.forward(tape, batch.images, batch.texts)
            loss = total_loss(output.fused_logits, output.image_logits, batch.labels, lam)
            value = loss.item()
            if not math.isfinite(value):
                raise DivergenceError(f'non-finite training loss {value}', epoch=epoch, batch=batch_index)
            optimizer.step(params, tape.backward(loss))
            total += value * len(indices)
            seen += len(indices)

        record = EpochRecord(
            epoch=epoch,
            lam=lam,
            phase=mask.phase,
            train_loss=total / seen,
            val_acc=accuracy(model, val_data, config.eval_batch_size, config.precision),
        )
        result.log.append(record)
        logger.info(record.to_line())
        if on_epoch is not None:
            on_epoch(record)
    return result
