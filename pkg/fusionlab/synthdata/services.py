import logging
from pathlib import Path

from fusionlab.encoders.nbemb import save_embeddings
from fusionlab.utils.config_file import write_config_file
from .calibration import calibrate
from .generator import NUM_CLASSES, SynthDataset

logger = logging.getLogger(__name__)

TRAIN_FILE = 'train.nbemb'
VAL_FILE = 'val.nbemb'
MANIFEST_FILE = 'manifest.txt'


def write_dataset(*, dataset: SynthDataset, out_dir, calibrate_probes: bool = True) -> dict[str, Path]:
    """Writes the two NBEMB splits and a manifest with the full generator config."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    config = dataset.config
    paths = {
        'train': save_embeddings(out_dir / TRAIN_FILE, dataset.train_records(), config.image_dim, config.text_dim),
        'val': save_embeddings(out_dir / VAL_FILE, dataset.val_records(), config.image_dim, config.text_dim),
    }
    manifest = {
        **config.to_dict(),
        'num_classes': NUM_CLASSES,
        'train_samples': int((~dataset.is_val).sum()),
        'val_samples': int(dataset.is_val.sum()),
        'noisy_samples': int(dataset.noisy.sum()),
    }
    if calibrate_probes:
        manifest.update(calibrate(dataset.train_arrays(), dataset.val_arrays(), seed=config.seed))
    paths['manifest'] = write_config_file(out_dir / MANIFEST_FILE, manifest, header='synthetic dataset manifest')
    logger.info('wrote dataset to %s', out_dir)
    return paths
