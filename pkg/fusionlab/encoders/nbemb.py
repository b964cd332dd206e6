"""
NBEMB embedding files.

Little-endian, no padding: magic ``NBEM``, then u32 version, record count, image dim and
text dim, then per record a u8 label, a u8 noisy flag, the image vector and the text
vector as float32.
"""
import logging
import struct
from pathlib import Path

import numpy as np

from fusionlab.utils.errors import ConfigMismatchError, FormatError, TruncationError, UnsupportedVersionError
from .records import EmbeddingRecord

logger = logging.getLogger(__name__)

MAGIC = b'NBEM'
VERSION = 1
HEADER = struct.Struct('<4sIIII')


def record_dtype(image_dim: int, text_dim: int) -> np.dtype:
    return np.dtype([
        ('label', 'u1'),
        ('noisy', 'u1'),
        ('image', '<f4', (image_dim,)),
        ('text', '<f4', (text_dim,)),
    ])


def encode_embeddings(records, image_dim: int | None = None, text_dim: int | None = None) -> bytes:
    records = list(records)
    if records:
        image_dim = records[0].image_vec.size if image_dim is None else image_dim
        text_dim = records[0].text_vec.size if text_dim is None else text_dim
    if image_dim is None or text_dim is None:
        raise ConfigMismatchError('dimensions are required to write an empty record list')
    table = np.zeros(len(records), dtype=record_dtype(image_dim, text_dim))
    for row, record in zip(table, records):
        if record.image_vec.size != image_dim or record.text_vec.size != text_dim:
            raise ConfigMismatchError(
                f'record dims ({record.image_vec.size}, {record.text_vec.size}) differ from ({image_dim}, {text_dim})'
            )
        row['label'] = record.label
        row['noisy'] = int(record.noisy_flag)
        row['image'] = record.image_vec
        row['text'] = record.text_vec
    return HEADER.pack(MAGIC, VERSION, len(records), image_dim, text_dim) + table.tobytes()


def decode_embeddings(payload: bytes, image_dim: int | None = None, text_dim: int | None = None) -> list[EmbeddingRecord]:
    if len(payload) < HEADER.size:
        raise TruncationError(f'{len(payload)} bytes is shorter than the {HEADER.size}-byte header')
    magic, version, count, file_image_dim, file_text_dim = HEADER.unpack_from(payload)
    if magic != MAGIC:
        raise FormatError(f'bad magic {magic!r}, expected {MAGIC!r}')
    if version != VERSION:
        raise UnsupportedVersionError(f'unsupported NBEMB version {version}')
    if image_dim is not None and file_image_dim != image_dim:
        raise ConfigMismatchError(f'file image dim {file_image_dim}, configured {image_dim}')
    if text_dim is not None and file_text_dim != text_dim:
        raise ConfigMismatchError(f'file text dim {file_text_dim}, configured {text_dim}')
    dtype = record_dtype(file_image_dim, file_text_dim)
    expected = HEADER.size + count * dtype.itemsize
    if len(payload) < expected:
        raise TruncationError(f'payload holds {len(payload)} bytes, header promises {expected}')
    if len(payload) > expected:
        raise FormatError(f'{len(payload) - expected} trailing bytes after {count} records')
    table = np.frombuffer(payload, dtype=dtype, count=count, offset=HEADER.size)
    return [
        EmbeddingRecord(int(row['label']), row['image'], row['text'], bool(row['noisy']))
        for row in table
    ]


def save_embeddings(path, records, image_dim: int | None = None, text_dim: int | None = None) -> Path:
    records = list(records)
    path = Path(path)
    path.write_bytes(encode_embeddings(records, image_dim, text_dim))
    logger.info('wrote %d records to %s', len(records), path)
    return path


def load_embeddings(path, image_dim: int | None = None, text_dim: int | None = None) -> list[EmbeddingRecord]:
    """Reads an NBEMB file; given dims must match the header."""
    records = decode_embeddings(Path(path).read_bytes(), image_dim, text_dim)
    logger.debug('read %d records from %s', len(records), path)
    return records
