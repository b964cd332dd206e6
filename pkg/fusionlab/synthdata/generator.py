"""
Two-modality Gaussian class data at the embedding level.

The image modality separates UD from {PD, D} along one direction and places PD and D
almost on top of each other; the text modality separates all three classes. A fraction of
samples per class gets its text vector corrupted toward an isotropic draw.

Defaults: the image alone lands near 2/3 accuracy, clean text separates every class pair
as far as the image separates UD from the rest, and every clean text carries the shared
offset that a corrupted text loses. The offset is the cue a confidence gate keys on.
"""
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from sklearn.model_selection import train_test_split

from fusionlab.encoders.records import CLASS_NAMES, EmbeddingArrays, EmbeddingRecord
from fusionlab.utils.errors import ConfigurationError, DomainError

logger = logging.getLogger(__name__)

NUM_CLASSES = len(CLASS_NAMES)


@dataclass(frozen=True)
class SynthConfig:
    samples_per_class: int = 500
    image_dim: int = 512
    text_dim: int = 768
    image_separation: float = 3.0
    image_ambiguity: float = 0.2
    text_separation: float = 3.0
    text_offset: float = 8.0
    within_class_std: float = 1.0
    text_noise_rate: float = 0.0
    text_noise_level: float = 1.0
    val_fraction: float = 0.2
    seed: int = 42

    def __post_init__(self):
        if self.samples_per_class < 2:
            raise ConfigurationError(f'need at least 2 samples per class, got {self.samples_per_class}')
        if self.image_dim < 2 or self.text_dim < NUM_CLASSES + 1:
            raise ConfigurationError(
                f'image_dim must be >= 2 and text_dim >= {NUM_CLASSES + 1}, got {self.image_dim} and {self.text_dim}'
            )
        if self.within_class_std <= 0:
            raise ConfigurationError(f'within-class std must be positive, got {self.within_class_std}')
        if not 0.0 <= self.text_noise_rate <= 1.0:
            raise ConfigurationError(f'text noise rate must lie in [0, 1], got {self.text_noise_rate}')
        if not 0.0 <= self.text_noise_level <= 1.0:
            raise ConfigurationError(f'text noise level must lie in [0, 1], got {self.text_noise_level}')
        check_split(self.samples_per_class, self.val_fraction)
        if min(self.image_separation, self.image_ambiguity, self.text_separation, self.text_offset) < 0:
            raise ConfigurationError('separations and offsets must be non-negative')

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SynthDataset:
    """Records plus a boolean validation mask, in generation order."""
    config: SynthConfig
    records: list[EmbeddingRecord]
    is_val: np.ndarray = field(repr=False)

    @property
    def labels(self) -> np.ndarray:
        return np.array([record.label for record in self.records], dtype=np.int64)

    @property
    def noisy(self) -> np.ndarray:
        return np.array([record.noisy_flag for record in self.records], dtype=bool)

    def train_records(self) -> list[EmbeddingRecord]:
        return [record for record, val in zip(self.records, self.is_val) if not val]

    def val_records(self) -> list[EmbeddingRecord]:
        return [record for record, val in zip(self.records, self.is_val) if val]

    def train_arrays(self) -> EmbeddingArrays:
        return EmbeddingArrays.from_records(self.train_records())

    def val_arrays(self) -> EmbeddingArrays:
        return EmbeddingArrays.from_records(self.val_records())

    def same_as(self, other: 'SynthDataset') -> bool:
        return (
            len(self.records) == len(other.records)
            and np.array_equal(self.is_val, other.is_val)
            and all(a.same_as(b) for a, b in zip(self.records, other.records))
        )


def orthonormal_directions(rng: np.random.Generator, dim: int, count: int) -> np.ndarray:
    """``count`` orthonormal columns of a random [dim×count] basis."""
    basis, _ = np.linalg.qr(rng.standard_normal((dim, count)))
    return basis


def class_means(config: SynthConfig, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """
    Image means: UD at +Δ_img/2·u, PD and D at -Δ_img/2·u ± ambiguity/2·w.\n
    Text means: offset·o + Δ_txt/√2·e_c, so every pair of classes is Δ_txt apart and all
    three means share one norm.
    """
    u, w = orthonormal_directions(rng, config.image_dim, 2).T
    half = config.image_separation / 2
    image = np.stack([
        half * u,
        -half * u - config.image_ambiguity / 2 * w,
        -half * u + config.image_ambiguity / 2 * w,
    ])
    directions = orthonormal_directions(rng, config.text_dim, NUM_CLASSES + 1).T
    offset, class_axes = directions[0], directions[1:]
    text = config.text_offset * offset + config.text_separation / np.sqrt(2.0) * class_axes
    return image, text


def corrupt_text(text: np.ndarray, noise_level: float, rng: np.random.Generator) -> np.ndarray:
    """(1 - ℓ)·T + ℓ·Z with Z an isotropic Gaussian draw rescaled to ‖T‖."""
    if not np.isfinite(noise_level) or not 0.0 <= noise_level <= 1.0:
        raise DomainError(f'noise level must lie in [0, 1], got {noise_level}')
    text = np.asarray(text)
    if noise_level == 0.0:
        return text.copy()
    draw = rng.standard_normal(text.shape)
    draw *= np.linalg.norm(text) / np.linalg.norm(draw)
    return (1.0 - noise_level) * text + noise_level * draw


def check_split(samples_per_class: int, val_fraction: float):
    """Both sides of the stratified split must receive at least one sample per class."""
    if not 0.0 < val_fraction < 1.0:
        raise ConfigurationError(f'validation fraction must lie in (0, 1), got {val_fraction}')
    total = NUM_CLASSES * samples_per_class
    val_count = math.ceil(val_fraction * total)
    if min(val_count, total - val_count) < NUM_CLASSES:
        raise ConfigurationError(
            f'validation fraction {val_fraction} splits {total} samples into {total - val_count} training and '
            f'{val_count} validation samples, each side needs at least {NUM_CLASSES}'
        )


def stratified_split(labels: np.ndarray, val_fraction: float, seed: int) -> np.ndarray:
    try:
        _, val_indices = train_test_split(
            np.arange(len(labels)), test_size=val_fraction, stratify=labels, random_state=seed,
        )
    except ValueError as e:
        raise ConfigurationError(f'cannot split {len(labels)} samples: {e}') from e
    is_val = np.zeros(len(labels), dtype=bool)
    is_val[val_indices] = True
    return is_val


def generate(config: SynthConfig) -> SynthDataset:
    rng = np.random.default_rng(config.seed)
    image_means, text_means = class_means(config, rng)
    n = config.samples_per_class
    noisy_per_class = int(round(config.text_noise_rate * n))
    records = []
    for label in range(NUM_CLASSES):
        images = image_means[label] + config.within_class_std * rng.standard_normal((n, config.image_dim))
        texts = text_means[label] + config.within_class_std * rng.standard_normal((n, config.text_dim))
        noisy = np.zeros(n, dtype=bool)
        noisy[rng.choice(n, size=noisy_per_class, replace=False)] = True
        for image, text, flag in zip(images, texts, noisy):
            if flag:
                text = corrupt_text(text, config.text_noise_level, rng)
            records.append(EmbeddingRecord(label, image, text, bool(flag)))

    labels = np.repeat(np.arange(NUM_CLASSES), n)
    dataset = SynthDataset(config, records, stratified_split(labels, config.val_fraction, config.seed))
    logger.info(
        'generated %d samples (%d validation, %d noisy) with image_dim=%d text_dim=%d seed=%d',
        len(records), int(dataset.is_val.sum()), NUM_CLASSES * noisy_per_class,
        config.image_dim, config.text_dim, config.seed,
    )
    return dataset


def pre_corrupt_records(records, noise_level: float, seed: int) -> list[EmbeddingRecord]:
    """
    Corrupts every text vector by ``noise_level``, standing in for text embeddings from a
    model that was never adapted to the domain. Noisy flags keep marking the generator's
    own corruption.
    """
    rng = np.random.default_rng(seed)
    return [
        EmbeddingRecord(r.label, r.image_vec, corrupt_text(r.text_vec.astype(np.float64), noise_level, rng),
                        r.noisy_flag)
        for r in records
    ]


def pre_corrupt(dataset: SynthDataset, noise_level: float, seed: int) -> SynthDataset:
    return SynthDataset(dataset.config, pre_corrupt_records(dataset.records, noise_level, seed), dataset.is_val.copy())
