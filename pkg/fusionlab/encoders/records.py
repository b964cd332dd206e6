from dataclasses import dataclass, field

import numpy as np

from fusionlab.utils.errors import ConfigMismatchError, LabelIndexError

CLASS_NAMES = ('UD', 'PD', 'D')


def _frozen_vector(value, name: str) -> np.ndarray:
    array = np.array(value, dtype=np.float32)
    if array.ndim != 1:
        raise ConfigMismatchError(f'{name} must be a vector, got shape {array.shape}')
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class EmbeddingRecord:
    """One sample: class label, image and text vectors (stored as float32), noisy marker."""
    label: int
    image_vec: np.ndarray
    text_vec: np.ndarray
    noisy_flag: bool = False

    def __post_init__(self):
        if not 0 <= int(self.label) <= 255:
            raise LabelIndexError(f'label {self.label} does not fit the record format')
        object.__setattr__(self, 'label', int(self.label))
        object.__setattr__(self, 'noisy_flag', bool(self.noisy_flag))
        object.__setattr__(self, 'image_vec', _frozen_vector(self.image_vec, 'image_vec'))
        object.__setattr__(self, 'text_vec', _frozen_vector(self.text_vec, 'text_vec'))

    def same_as(self, other: 'EmbeddingRecord') -> bool:
        return (
            self.label == other.label
            and self.noisy_flag == other.noisy_flag
            and self.image_vec.tobytes() == other.image_vec.tobytes()
            and self.text_vec.tobytes() == other.text_vec.tobytes()
        )


def validate_records(records, *, image_dim: int, text_dim: int, num_classes: int):
    for index, record in enumerate(records):
        if record.image_vec.shape != (image_dim,) or record.text_vec.shape != (text_dim,):
            raise ConfigMismatchError(
                f'record {index}: dims ({record.image_vec.size}, {record.text_vec.size}), '
                f'configured ({image_dim}, {text_dim})'
            )
        if record.label >= num_classes:
            raise LabelIndexError(f'record {index}: label {record.label} >= class count {num_classes}')


@dataclass
class EmbeddingArrays:
    """Stacked view of a record list, in float64 for the tape."""
    images: np.ndarray
    texts: np.ndarray
    labels: np.ndarray
    noisy: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.noisy is None:
            self.noisy = np.zeros(len(self.labels), dtype=bool)

    @classmethod
    def from_records(cls, records) -> 'EmbeddingArrays':
        records = list(records)
        if not records:
            raise ConfigMismatchError('cannot stack an empty record list')
        return cls(
            images=np.stack([r.image_vec for r in records]).astype(np.float64),
            texts=np.stack([r.text_vec for r in records]).astype(np.float64),
            labels=np.array([r.label for r in records], dtype=np.int64),
            noisy=np.array([r.noisy_flag for r in records], dtype=bool),
        )

    def to_records(self) -> list[EmbeddingRecord]:
        return [
            EmbeddingRecord(int(label), image, text, bool(flag))
            for label, image, text, flag in zip(self.labels, self.images, self.texts, self.noisy)
        ]

    def subset(self, indices) -> 'EmbeddingArrays':
        return EmbeddingArrays(self.images[indices], self.texts[indices], self.labels[indices], self.noisy[indices])

    def __len__(self):
        return len(self.labels)
