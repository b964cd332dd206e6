import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from fusionlab.encoders.nbemb import load_embeddings
from fusionlab.synthdata.generator import SynthConfig, generate
from fusionlab.synthdata.raw import RawConfig, generate_raw
from fusionlab.synthdata.services import write_dataset
from fusionlab.utils.config_file import read_config_file
from fusionlab.utils.errors import ConfigurationError


class TestGenerateRaw(SimpleTestCase):
    def setUp(self):
        self.dataset = generate_raw(RawConfig(samples_per_class=10, text_noise_rate=0.2, seed=3))

    def test_shapes_and_vocabulary(self):
        sample = self.dataset.samples[0]
        self.assertEqual(sample.image.shape, (1, 16, 16))
        self.assertEqual(sample.tokens.shape, (12,))
        tokens = np.stack([s.tokens for s in self.dataset.samples])
        self.assertGreaterEqual(tokens.min(), 1)
        self.assertLess(tokens.max(), 64)

    def test_standardized_pixels(self):
        pixels = np.stack([s.image for s in self.dataset.samples])
        self.assertAlmostEqual(pixels.mean(), 0.0, places=10)
        self.assertAlmostEqual(pixels.std(), 1.0, places=10)

    def test_noisy_counts(self):
        flags = np.array([s.noisy_flag for s in self.dataset.samples])
        labels = np.array([s.label for s in self.dataset.samples])
        for label in range(3):
            self.assertEqual(int(flags[labels == label].sum()), 2)

    def test_deterministic(self):
        again = generate_raw(RawConfig(samples_per_class=10, text_noise_rate=0.2, seed=3))
        for a, b in zip(self.dataset.samples, again.samples):
            self.assertEqual(a.image.tobytes(), b.image.tobytes())
            self.assertEqual(a.tokens.tobytes(), b.tokens.tobytes())

    def test_arrays(self):
        train, val = self.dataset.train_arrays(), self.dataset.val_arrays()
        self.assertEqual(len(train) + len(val), 30)
        self.assertEqual(train.images.shape[1:], (1, 16, 16))
        self.assertEqual(train.texts.dtype, np.int64)
        self.assertEqual(len(train.subset(np.array([0, 2]))), 2)

    def test_tiny_split_is_rejected(self):
        with self.assertRaises(ConfigurationError):
            RawConfig(samples_per_class=2, val_fraction=0.2)


class TestWriteDataset(SimpleTestCase):
    def test_writes_splits_and_manifest(self):
        dataset = generate(SynthConfig(samples_per_class=30, image_dim=6, text_dim=8, seed=5))
        with tempfile.TemporaryDirectory() as tmp:
            paths = write_dataset(dataset=dataset, out_dir=Path(tmp) / 'data')
            self.assertEqual(len(load_embeddings(paths['train'], 6, 8)), 72)
            self.assertEqual(len(load_embeddings(paths['val'], 6, 8)), 18)
            manifest = read_config_file(paths['manifest'])
        self.assertEqual(manifest['seed'], '5')
        self.assertEqual(manifest['min_fusion_gain'], '0.05')
        self.assertIn('probe_fused_acc', manifest)
        self.assertEqual(manifest['val_samples'], '18')
