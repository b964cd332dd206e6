import logging
from dataclasses import dataclass

import numpy as np

from fusionlab.utils.errors import InputError, LabelIndexError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConfusionMatrix:
    """counts[i, j] = samples of true class i predicted as class j."""
    counts: np.ndarray

    def __post_init__(self):
        counts = np.array(self.counts, dtype=np.int64)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise InputError(f'confusion matrix must be square, got shape {counts.shape}')
        if np.any(counts < 0):
            raise InputError('confusion matrix counts must be nonnegative')
        counts.setflags(write=False)
        object.__setattr__(self, 'counts', counts)

    @property
    def num_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def to_text(self) -> str:
        return '\n'.join(' '.join(str(value) for value in row) for row in self.counts)


def _class_indices(values, num_classes: int, name: str) -> np.ndarray:
    values = np.asarray(values)
    if values.ndim != 1:
        raise InputError(f'{name} must be a sequence of class indices')
    if values.size and not np.issubdtype(values.dtype, np.integer):
        raise LabelIndexError(f'{name} must be integers, got {values.dtype}')
    if values.size and (values.min() < 0 or values.max() >= num_classes):
        raise LabelIndexError(f'{name} contain an index outside [0, {num_classes})')
    return values.astype(np.int64)


def confusion(preds, labels, num_classes: int) -> ConfusionMatrix:
    preds = _class_indices(preds, num_classes, 'predictions')
    labels = _class_indices(labels, num_classes, 'labels')
    if preds.size != labels.size:
        raise InputError(f'{preds.size} predictions for {labels.size} labels')
    if preds.size == 0:
        raise InputError('confusion needs at least one sample')
    counts = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(counts, (labels, preds), 1)
    return ConfusionMatrix(counts)


@dataclass(frozen=True)
class ClassificationMetrics:
    acc: float
    bacc: float
    kappa: float
    f1_weighted: float
    prec_weighted: float
    rec_weighted: float
    precision: tuple[float, ...]
    recall: tuple[float, ...]
    f1: tuple[float, ...]
    zero_division: tuple[str, ...]


def _ratio(numerator: float, denominator: float) -> float | None:
    return numerator / denominator if denominator else None


def compute_metrics(cm: ConfusionMatrix) -> ClassificationMetrics:
    """
    Accuracy, balanced accuracy, Cohen's kappa and support-weighted precision, recall
    and F1 from one-vs-rest counts per class.\n
    A per-class ratio with a zero denominator counts as 0 and is listed in
    ``zero_division``; kappa is 0 when chance agreement is 1.
    """
    counts = cm.counts
    total = cm.total
    if total < 1:
        raise InputError('confusion matrix is empty')
    support = counts.sum(axis=1)
    predicted = counts.sum(axis=0)
    true_positive = np.diag(counts)

    precision, recall, f1, flags = [], [], [], []
    for i in range(cm.num_classes):
        p = _ratio(true_positive[i], predicted[i])
        r = _ratio(true_positive[i], support[i])
        if p is None:
            flags.append(f'precision[{i}]')
        if r is None:
            flags.append(f'recall[{i}]')
        p, r = p or 0.0, r or 0.0
        score = _ratio(2 * p * r, p + r)
        if score is None:
            flags.append(f'f1[{i}]')
        precision.append(float(p))
        recall.append(float(r))
        f1.append(float(score or 0.0))

    weights = support / total
    acc = np.trace(counts) / total
    chance = float((support * predicted).sum()) / total ** 2
    kappa = 0.0 if chance == 1.0 else (acc - chance) / (1.0 - chance)
    if flags:
        logger.warning('zero division in %s, counted as 0', ', '.join(flags))
    return ClassificationMetrics(
        acc=float(acc),
        bacc=float(np.mean(recall)),
        kappa=float(kappa),
        f1_weighted=float(weights @ np.array(f1)),
        prec_weighted=float(weights @ np.array(precision)),
        # support weights cancel the recall denominators
        rec_weighted=float(true_positive.sum() / total),
        precision=tuple(precision),
        recall=tuple(recall),
        f1=tuple(f1),
        zero_division=tuple(flags),
    )
