import logging

import numpy as np
from sklearn.linear_model import LogisticRegression

from fusionlab.encoders.records import EmbeddingArrays

logger = logging.getLogger(__name__)

MIN_FUSION_GAIN = 0.05


def probe_accuracy(train_features: np.ndarray, train_labels: np.ndarray, val_features: np.ndarray,
                   val_labels: np.ndarray, seed: int = 0) -> float:
    """Validation accuracy of a multinomial logistic regression fitted on the training split."""
    probe = LogisticRegression(max_iter=2000, random_state=seed)
    probe.fit(train_features, train_labels)
    return float(probe.score(val_features, val_labels))


def calibrate(train: EmbeddingArrays, val: EmbeddingArrays, seed: int = 0) -> dict[str, float]:
    """Linear-probe accuracies for image alone, text alone and both concatenated."""
    features = {
        'image': (train.images, val.images),
        'text': (train.texts, val.texts),
        'fused': (np.hstack([train.images, train.texts]), np.hstack([val.images, val.texts])),
    }
    result = {
        f'probe_{name}_acc': probe_accuracy(fit, train.labels, held_out, val.labels, seed)
        for name, (fit, held_out) in features.items()
    }
    result['probe_fusion_gain'] = result['probe_fused_acc'] - result['probe_image_acc']
    result['min_fusion_gain'] = MIN_FUSION_GAIN
    logger.info('probe calibration: %s', ', '.join(f'{key}={value:.4f}' for key, value in result.items()))
    if result['probe_fusion_gain'] < MIN_FUSION_GAIN:
        logger.warning('fused probe gains only %.4f over the image probe', result['probe_fusion_gain'])
    return result
