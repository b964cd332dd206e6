"""
NBCK checkpoints: magic, metadata length, JSON metadata, then the tensors as raw
little-endian floats in metadata order.

The metadata lists tensor names and shapes, the precision of the payload, the sha256
digest of the resolved run configuration and the configuration itself, so a checkpoint
rebuilds its model without any other file.
"""
import hashlib
import json
import logging
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from fusionlab.diffcore.tape import PRECISIONS
from fusionlab.prmf.model import FusionModel, build_embedding_model
from fusionlab.utils.errors import ConfigMismatchError, FormatError, TruncationError, UnsupportedVersionError
from .config import RunConfig
from .serializers import load_run_config

logger = logging.getLogger(__name__)

MAGIC = b'NBCK'
VERSION = 1
HEADER = struct.Struct('<4sI')


@dataclass(frozen=True)
class Checkpoint:
    metadata: dict
    state: dict[str, np.ndarray]

    @property
    def precision(self) -> str:
        return self.metadata['precision']

    @property
    def config_values(self) -> dict:
        return self.metadata['config']


def _payload_dtype(precision: str) -> np.dtype:
    if precision not in PRECISIONS:
        raise FormatError(f'unknown checkpoint precision {precision!r}')
    return np.dtype(PRECISIONS[precision]).newbyteorder('<')


def encode_checkpoint(model: FusionModel, config: RunConfig) -> bytes:
    dtype = _payload_dtype(config.precision)
    state = model.state_dict()
    metadata = {
        'version': VERSION,
        'precision': config.precision,
        'config_digest': config.digest(),
        'config': config.values(),
        'tensors': [{'name': name, 'shape': list(value.shape)} for name, value in state.items()],
    }
    meta_bytes = json.dumps(metadata, sort_keys=True).encode('utf-8')
    payload = b''.join(np.ascontiguousarray(value, dtype=dtype).tobytes() for value in state.values())
    return HEADER.pack(MAGIC, len(meta_bytes)) + meta_bytes + payload


METADATA_KEYS = ('version', 'precision', 'config_digest', 'config', 'tensors')


def _check_metadata(metadata: dict) -> dict:
    missing = [key for key in METADATA_KEYS if key not in metadata]
    if missing:
        raise FormatError(f'checkpoint metadata lacks {", ".join(missing)}')
    if not isinstance(metadata['precision'], str):
        raise FormatError(f'checkpoint precision must be a name, got {metadata["precision"]!r}')
    if not isinstance(metadata['config'], dict) or not isinstance(metadata['tensors'], list):
        raise FormatError('checkpoint config must be an object and tensors a list')
    for entry in metadata['tensors']:
        if (
            not isinstance(entry, dict)
            or not isinstance(entry.get('name'), str)
            or not isinstance(entry.get('shape'), list)
            or not all(isinstance(dim, int) and not isinstance(dim, bool) and dim >= 0 for dim in entry['shape'])
        ):
            raise FormatError(f'bad checkpoint tensor entry {entry!r}')
    return metadata


def decode_checkpoint(payload: bytes) -> Checkpoint:
    if len(payload) < HEADER.size:
        raise TruncationError(f'checkpoint header needs {HEADER.size} bytes, got {len(payload)}')
    magic, meta_length = HEADER.unpack_from(payload)
    if magic != MAGIC:
        raise FormatError(f'bad checkpoint magic {magic!r}')
    body_start = HEADER.size + meta_length
    if len(payload) < body_start:
        raise TruncationError('checkpoint metadata is truncated')
    try:
        metadata = json.loads(payload[HEADER.size:body_start].decode('utf-8'))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise FormatError(f'unreadable checkpoint metadata: {e}')
    if not isinstance(metadata, dict):
        raise FormatError(f'checkpoint metadata must be an object, got {type(metadata).__name__}')
    if metadata.get('version') != VERSION:
        raise UnsupportedVersionError(f'checkpoint version {metadata.get("version")!r} is not supported')
    metadata = _check_metadata(metadata)

    dtype = _payload_dtype(metadata['precision'])
    sizes = [int(np.prod(entry['shape'], dtype=np.int64)) for entry in metadata['tensors']]
    expected = body_start + sum(sizes) * dtype.itemsize
    if len(payload) < expected:
        raise TruncationError(f'checkpoint payload needs {expected} bytes, got {len(payload)}')
    if len(payload) > expected:
        raise FormatError(f'{len(payload) - expected} trailing bytes after checkpoint payload')

    state, offset = {}, body_start
    for entry, size in zip(metadata['tensors'], sizes):
        values = np.frombuffer(payload, dtype=dtype, count=size, offset=offset)
        state[entry['name']] = values.astype(np.float64).reshape(entry['shape'])
        offset += size * dtype.itemsize
    return Checkpoint(metadata=metadata, state=state)


def restore_model(checkpoint: Checkpoint) -> tuple[RunConfig, FusionModel]:
    """Rebuilds the model from the stored configuration and loads the tensors."""
    config = load_run_config(checkpoint.config_values)
    if config.digest() != checkpoint.metadata['config_digest']:
        raise ConfigMismatchError('checkpoint configuration does not match its digest')
    model = build_embedding_model(config.model_config())
    model.load_state_dict(checkpoint.state)
    return config, model


def save_checkpoint(path, model: FusionModel, config: RunConfig) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = encode_checkpoint(model, config)
    path.write_bytes(payload)
    logger.info('wrote checkpoint %s (%d bytes, sha256 %s)', path, len(payload),
                hashlib.sha256(payload).hexdigest()[:12])
    return path


def load_checkpoint(path) -> tuple[RunConfig, FusionModel]:
    return restore_model(decode_checkpoint(Path(path).read_bytes()))
