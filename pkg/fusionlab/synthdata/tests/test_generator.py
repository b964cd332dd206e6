import numpy as np
from django.test import SimpleTestCase
from sklearn.linear_model import LogisticRegression
from sklearn.model_selection import cross_val_score

from fusionlab.synthdata.calibration import calibrate
from fusionlab.synthdata.generator import SynthConfig, corrupt_text, generate, pre_corrupt
from fusionlab.utils.errors import ConfigurationError, DomainError


def probe_score(features, labels):
    return cross_val_score(LogisticRegression(max_iter=2000), features, labels, cv=5).mean()


class TestGenerate(SimpleTestCase):
    def setUp(self):
        self.config = SynthConfig(samples_per_class=60, image_dim=16, text_dim=24, text_noise_rate=0.25, seed=7)

    def test_deterministic_under_seed(self):
        self.assertTrue(generate(self.config).same_as(generate(self.config)))
        other = generate(SynthConfig(**{**self.config.to_dict(), 'seed': 8}))
        self.assertFalse(generate(self.config).same_as(other))

    def test_class_counts(self):
        dataset = generate(self.config)
        np.testing.assert_array_equal(np.bincount(dataset.labels), [60, 60, 60])

    def test_stratified_split(self):
        dataset = generate(SynthConfig(samples_per_class=47, image_dim=4, text_dim=8, seed=3))
        for label in range(3):
            val_count = int(dataset.is_val[dataset.labels == label].sum())
            self.assertLessEqual(abs(val_count - 0.2 * 47), 1)
        self.assertEqual(len(dataset.train_records()) + len(dataset.val_records()), 141)

    def test_noisy_samples_per_class(self):
        dataset = generate(self.config)
        for label in range(3):
            self.assertEqual(int(dataset.noisy[dataset.labels == label].sum()), 15)

    def test_clean_dataset_has_no_noisy_flags(self):
        dataset = generate(SynthConfig(samples_per_class=10, image_dim=4, text_dim=8))
        self.assertFalse(dataset.noisy.any())

    def test_record_dimensions(self):
        record = generate(self.config).records[0]
        self.assertEqual(record.image_vec.shape, (16,))
        self.assertEqual(record.text_vec.shape, (24,))
        self.assertEqual(record.image_vec.dtype, np.float32)

    def test_invalid_configs(self):
        with self.assertRaises(ConfigurationError):
            SynthConfig(text_noise_rate=1.5)
        with self.assertRaises(ConfigurationError):
            SynthConfig(within_class_std=0.0)
        with self.assertRaises(ConfigurationError):
            SynthConfig(val_fraction=1.0)

    def test_split_needs_every_class_on_both_sides(self):
        with self.assertRaises(ConfigurationError):
            SynthConfig(samples_per_class=2, image_dim=4, text_dim=8)
        with self.assertRaises(ConfigurationError):
            SynthConfig(samples_per_class=10, image_dim=4, text_dim=8, val_fraction=0.95)
        dataset = generate(SynthConfig(samples_per_class=2, image_dim=4, text_dim=8, val_fraction=0.5))
        self.assertEqual(sorted(np.array(dataset.labels)[dataset.is_val]), [0, 1, 2])

    def test_image_modality_confuses_pd_and_d(self):
        dataset = generate(SynthConfig(samples_per_class=500, image_dim=32, text_dim=8, image_separation=8.0,
                                       within_class_std=1.0, seed=11))
        arrays = dataset.train_arrays()
        images = np.vstack([arrays.images, dataset.val_arrays().images])
        labels = np.concatenate([arrays.labels, dataset.val_arrays().labels])
        self.assertGreater(probe_score(images, labels == 0), 0.99)
        ambiguous = labels > 0
        self.assertLessEqual(probe_score(images[ambiguous], labels[ambiguous]), 0.60)

    def test_fusion_beats_image_probe(self):
        dataset = generate(SynthConfig(samples_per_class=300, image_dim=32, text_dim=48, seed=42))
        result = calibrate(dataset.train_arrays(), dataset.val_arrays())
        self.assertGreaterEqual(result['probe_fused_acc'], result['probe_image_acc'] + result['min_fusion_gain'])


class TestCorruptText(SimpleTestCase):
    def setUp(self):
        self.text = np.random.default_rng(0).normal(size=768)

    def test_zero_level_is_identity(self):
        out = corrupt_text(self.text, 0.0, np.random.default_rng(1))
        self.assertEqual(out.tobytes(), self.text.tobytes())

    def test_domain(self):
        for level in (-0.1, 1.1, float('nan')):
            with self.assertRaises(DomainError):
                corrupt_text(self.text, level, np.random.default_rng(1))

    def test_fixed_seed(self):
        first = corrupt_text(self.text, 0.4, np.random.default_rng(5))
        second = corrupt_text(self.text, 0.4, np.random.default_rng(5))
        self.assertEqual(first.tobytes(), second.tobytes())

    def test_full_noise_keeps_norm(self):
        out = corrupt_text(self.text, 1.0, np.random.default_rng(2))
        self.assertAlmostEqual(np.linalg.norm(out), np.linalg.norm(self.text), places=9)

    def test_full_noise_is_class_independent(self):
        dataset = generate(SynthConfig(samples_per_class=500, image_dim=4, text_dim=768, text_noise_rate=1.0,
                                       text_noise_level=1.0, seed=9))
        texts = np.stack([record.text_vec for record in dataset.records])
        self.assertTrue(dataset.noisy.all())
        self.assertAlmostEqual(probe_score(texts, dataset.labels), 1 / 3, delta=0.05)


class TestPreCorrupt(SimpleTestCase):
    def test_corrupts_every_text(self):
        dataset = generate(SynthConfig(samples_per_class=20, image_dim=4, text_dim=8, text_noise_rate=0.5, seed=1))
        degraded = pre_corrupt(dataset, 0.3, seed=2)
        np.testing.assert_array_equal(degraded.noisy, dataset.noisy)
        np.testing.assert_array_equal(degraded.is_val, dataset.is_val)
        for before, after in zip(dataset.records, degraded.records):
            self.assertEqual(before.image_vec.tobytes(), after.image_vec.tobytes())
            self.assertFalse(np.array_equal(before.text_vec, after.text_vec))
