"""
Raw samples for the toy encoders: 16×16 single-channel images and description token streams.

UD images carry a centred square, PD and D images share a stripe pattern; token streams
draw most ids from a class band of the vocabulary. Corrupted samples draw every token
uniformly.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from fusionlab.utils.errors import ConfigurationError
from .generator import NUM_CLASSES, check_split, stratified_split

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RawConfig:
    samples_per_class: int = 40
    image_size: int = 16
    pixel_noise: float = 0.5
    vocab_size: int = 64
    token_length: int = 12
    token_purity: float = 0.6
    text_noise_rate: float = 0.0
    val_fraction: float = 0.2
    seed: int = 42

    def __post_init__(self):
        if self.samples_per_class < 2:
            raise ConfigurationError(f'need at least 2 samples per class, got {self.samples_per_class}')
        if self.image_size < 4:
            raise ConfigurationError(f'image size must be at least 4, got {self.image_size}')
        if self.vocab_size < NUM_CLASSES + 1:
            raise ConfigurationError(f'vocabulary needs at least {NUM_CLASSES + 1} ids, got {self.vocab_size}')
        if self.token_length < 1:
            raise ConfigurationError(f'token length must be positive, got {self.token_length}')
        if not 0.0 <= self.token_purity <= 1.0 or not 0.0 <= self.text_noise_rate <= 1.0:
            raise ConfigurationError('token purity and text noise rate must lie in [0, 1]')
        check_split(self.samples_per_class, self.val_fraction)


@dataclass(frozen=True, eq=False)
class RawSample:
    image: np.ndarray
    tokens: np.ndarray
    label: int
    noisy_flag: bool = False


@dataclass
class RawArrays:
    """Batched raw inputs: images [N×1×S×S] and token rows [N×L]."""
    images: np.ndarray
    texts: np.ndarray
    labels: np.ndarray
    noisy: np.ndarray

    @classmethod
    def from_samples(cls, samples) -> 'RawArrays':
        samples = list(samples)
        return cls(
            images=np.stack([s.image for s in samples]).astype(np.float64),
            texts=np.stack([s.tokens for s in samples]).astype(np.int64),
            labels=np.array([s.label for s in samples], dtype=np.int64),
            noisy=np.array([s.noisy_flag for s in samples], dtype=bool),
        )

    def subset(self, indices) -> 'RawArrays':
        return RawArrays(self.images[indices], self.texts[indices], self.labels[indices], self.noisy[indices])

    def __len__(self):
        return len(self.labels)


@dataclass
class RawDataset:
    config: RawConfig
    samples: list[RawSample]
    is_val: np.ndarray = field(repr=False)

    def train_arrays(self) -> RawArrays:
        return RawArrays.from_samples(s for s, val in zip(self.samples, self.is_val) if not val)

    def val_arrays(self) -> RawArrays:
        return RawArrays.from_samples(s for s, val in zip(self.samples, self.is_val) if val)


def class_patterns(size: int) -> np.ndarray:
    """[3×S×S]: a centred square for UD, the same vertical stripes for PD and D."""
    square = np.zeros((size, size))
    quarter = size // 4
    square[quarter:size - quarter, quarter:size - quarter] = 1.0
    stripes = np.tile((np.arange(size) % 4 < 2).astype(np.float64), (size, 1))
    return np.stack([square, stripes, stripes])


def token_bands(vocab_size: int) -> list[np.ndarray]:
    """Splits ids 1..V-1 into one contiguous band per class."""
    return np.array_split(np.arange(1, vocab_size), NUM_CLASSES)


def standardize(images: np.ndarray) -> np.ndarray:
    """Per-dataset standardization to zero mean and unit variance over every pixel."""
    std = images.std()
    return (images - images.mean()) / (std if std > 0 else 1.0)


def generate_raw(config: RawConfig) -> RawDataset:
    rng = np.random.default_rng(config.seed)
    patterns = class_patterns(config.image_size)
    bands = token_bands(config.vocab_size)
    n = config.samples_per_class
    noisy_per_class = int(round(config.text_noise_rate * n))

    images, tokens, labels, flags = [], [], [], []
    for label in range(NUM_CLASSES):
        noisy = np.zeros(n, dtype=bool)
        noisy[rng.choice(n, size=noisy_per_class, replace=False)] = True
        for flag in noisy:
            images.append(patterns[label] + config.pixel_noise * rng.standard_normal(patterns[label].shape))
            uniform = rng.integers(1, config.vocab_size, size=config.token_length)
            if flag:
                row = uniform
            else:
                in_band = rng.uniform(size=config.token_length) < config.token_purity
                row = np.where(in_band, rng.choice(bands[label], size=config.token_length), uniform)
            tokens.append(row)
            labels.append(label)
            flags.append(bool(flag))

    pixels = standardize(np.stack(images))[:, None]
    samples = [
        RawSample(image=image, tokens=np.asarray(row, dtype=np.int64), label=label, noisy_flag=flag)
        for image, row, label, flag in zip(pixels, tokens, labels, flags)
    ]
    is_val = stratified_split(np.array(labels), config.val_fraction, config.seed)
    logger.info('generated %d raw samples of %dx%d pixels and %d tokens', len(samples), config.image_size,
                config.image_size, config.token_length)
    return RawDataset(config, samples, is_val)
