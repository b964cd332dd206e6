import logging
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from fusionlab.utils.errors import InputError, LabelIndexError, UndefinedAurocError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AurocResult:
    value: float
    per_class: dict[int, float]
    skipped: tuple[int, ...]


def binary_auroc(scores, positives) -> float:
    """
    P(score⁺ > score⁻) + ½·P(score⁺ = score⁻) from midranks (Mann-Whitney U / n⁺n⁻).
    """
    scores = np.asarray(scores, dtype=np.float64)
    positives = np.asarray(positives, dtype=bool)
    n_pos = int(positives.sum())
    n_neg = positives.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedAurocError('AUROC needs at least one positive and one negative sample')
    ranks = rankdata(scores, method='average')
    u_statistic = ranks[positives].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u_statistic / (n_pos * n_neg))


def auroc_by_class(scores, labels) -> AurocResult:
    """
    One-vs-rest AUROC per class, macro-averaged over the classes that have both positives
    and negatives. A 1-D score vector is read as the positive-class score of a binary
    problem with labels in {0, 1}.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.ndim not in (1, 2) or scores.shape[0] != labels.shape[0] or labels.ndim != 1:
        raise InputError(f'scores {scores.shape} do not match labels {labels.shape}')
    if not np.all(np.isfinite(scores)):
        raise InputError('scores must be finite')
    num_classes = 2 if scores.ndim == 1 else scores.shape[1]
    if labels.size and (not np.issubdtype(labels.dtype, np.integer) or labels.min() < 0 or labels.max() >= num_classes):
        raise LabelIndexError(f'labels must be class indices in [0, {num_classes})')

    if scores.ndim == 1:
        value = binary_auroc(scores, labels == 1)
        return AurocResult(value=value, per_class={1: value}, skipped=())

    per_class, skipped = {}, []
    for cls in range(num_classes):
        positives = labels == cls
        if positives.all() or not positives.any():
            skipped.append(cls)
            continue
        per_class[cls] = binary_auroc(scores[:, cls], positives)
    if skipped:
        logger.warning('AUROC skipped classes %s without both positives and negatives', skipped)
    if not per_class:
        raise UndefinedAurocError('no class has both positive and negative samples')
    return AurocResult(value=float(np.mean(list(per_class.values()))), per_class=per_class, skipped=tuple(skipped))


def auroc(scores, labels) -> float:
    return auroc_by_class(scores, labels).value
