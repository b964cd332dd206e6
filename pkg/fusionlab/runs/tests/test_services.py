import math
import tempfile
from pathlib import Path
from unittest import skipUnless

import numpy as np
from django.conf import settings
from django.test import SimpleTestCase, tag

from fusionlab.encoders.nbemb import save_embeddings
from fusionlab.encoders.records import EmbeddingRecord
from fusionlab.metrics.report import parse_record
from fusionlab.prmf.model import ModelConfig, build_toy_model
from fusionlab.runs.serializers import load_run_config
from fusionlab.runs.services import (
    ABLATION_VARIANTS,
    evaluate_checkpoint,
    generate_data,
    load_data,
    run_ablation_suite,
    run_dir,
    run_gradcheck,
    run_noise_robustness,
    synthesize_data,
    train_run,
)
from fusionlab.synthdata.services import TRAIN_FILE, VAL_FILE
from fusionlab.utils.config_file import read_config_file
from fusionlab.utils.errors import ConfigurationError, FormatError

TINY = {
    'image_dim': '6', 'text_dim': '8', 'samples_per_class': '12', 'epochs': '3', 'batch_size': '8',
    'learning_rate': '0.01', 'lora_rank': '2', 'seed': '1',
}

DIRECTIONAL = {
    'image_dim': '16', 'text_dim': '24', 'samples_per_class': '150', 'epochs': '30', 'batch_size': '16',
    'learning_rate': '0.01', 'lora_rank': '2', 'seed': '42',
}

slow = skipUnless(settings.FUSIONLAB['SLOW_TESTS'], 'set FUSIONLAB_SLOW_TESTS=True for default-scale experiments')


def gradcheck_model_sizes() -> dict[str, int]:
    model = build_toy_model(ModelConfig(image_dim=6, text_dim=5, lora_rank=2, seed=0), channels=(2, 3),
                            vocab_size=16, d_model=4, max_len=8)
    return {name: value.size for name, value in model.named_parameters().items()}


class TestGradcheck(SimpleTestCase):
    def test_full_model_passes(self):
        report = run_gradcheck(seed=0)
        self.assertTrue(report.passed, report.to_text())
        self.assertTrue(any(name.startswith('visual_encoder.conv') for name in report.errors))
        self.assertIn('text_encoder.attention.q.B', report.errors)
        self.assertIn('confidence.weight', report.errors)
        self.assertEqual(report.checked, gradcheck_model_sizes())

    def test_coordinate_cap(self):
        sizes = gradcheck_model_sizes()
        capped = run_gradcheck(seed=0, max_coords=2).checked
        self.assertTrue(all(count == min(2, sizes[name]) for name, count in capped.items()))


class TestTrainAndEvaluate(SimpleTestCase):
    def test_files_round_trip(self):
        config = load_run_config(TINY)
        with tempfile.TemporaryDirectory() as tmp:
            data_dir, run_path = Path(tmp) / 'data', Path(tmp) / 'run'
            generate_data(config=config, out_dir=data_dir, calibrate_probes=False)
            train_data, val_data = load_data(config=config, data_dir=data_dir)
            outcome = train_run(config=config, train_data=train_data, val_data=val_data, out_dir=run_path)
            for name in ('model.nbck', 'log.txt', 'metrics.txt', 'config.txt'):
                self.assertTrue((run_path / name).exists(), name)
            self.assertEqual(len((run_path / 'log.txt').read_text().splitlines()), 3)
            evaluation = evaluate_checkpoint(checkpoint_path=run_path / 'model.nbck', data_dir=data_dir,
                                             out_path=run_path / 'eval.txt')
            self.assertEqual((run_path / 'eval.txt').read_text(), (run_path / 'metrics.txt').read_text())
            recorded = parse_record((run_path / 'metrics.txt').read_text())
        self.assertAlmostEqual(recorded['acc'], outcome.evaluation.report.acc, places=6)
        self.assertEqual(evaluation.predictions.tolist(), outcome.evaluation.predictions.tolist())

    def test_label_outside_class_range_is_a_format_error(self):
        config = load_run_config(TINY)
        rng = np.random.default_rng(0)
        records = [EmbeddingRecord(label, rng.normal(size=6), rng.normal(size=8)) for label in (0, 1, 2, 5)]
        with tempfile.TemporaryDirectory() as tmp:
            for name in (TRAIN_FILE, VAL_FILE):
                save_embeddings(Path(tmp) / name, records, 6, 8)
            with self.assertRaises(FormatError) as caught:
                load_data(config=config, data_dir=tmp)
        self.assertIn('label 5', str(caught.exception))

    def test_pre_corrupted_text_changes_inputs(self):
        config = load_run_config(TINY)
        clean, _ = synthesize_data(config=config)
        degraded, _ = synthesize_data(config=config.with_overrides(pre_corrupt_text=0.3))
        self.assertEqual(clean.images.tobytes(), degraded.images.tobytes())
        self.assertNotEqual(clean.texts.tobytes(), degraded.texts.tobytes())


class TestAblationSuite(SimpleTestCase):
    def test_table_has_every_variant(self):
        table = run_ablation_suite(config=load_run_config(TINY), seeds=2)
        self.assertEqual([row.name for row in table.rows], [name for name, _ in ABLATION_VARIANTS])
        self.assertTrue(all(len(row.runs) == 2 for row in table.rows))
        text = table.to_text()
        self.assertIn('w/o PRMF Block', text)
        self.assertIn('auroc', text.splitlines()[1])
        self.assertEqual(len(text.splitlines()), 2 + len(ABLATION_VARIANTS))

    def test_same_seed_gives_identical_tables(self):
        config = load_run_config(TINY)
        self.assertEqual(run_ablation_suite(config=config, seeds=1).to_text(),
                         run_ablation_suite(config=config, seeds=1).to_text())

    def test_branch_flags_in_base_config_are_reset(self):
        config = load_run_config({**TINY, 'disable_text_branch': 'true'})
        table = run_ablation_suite(config=config, seeds=1)
        self.assertEqual(len(table.rows), 7)

    def test_every_run_keeps_its_resolved_config(self):
        config = load_run_config(TINY)
        with tempfile.TemporaryDirectory() as tmp:
            table = run_ablation_suite(config=config, seeds=2, out_dir=tmp)
            self.assertEqual((Path(tmp) / 'ablation.txt').read_text(), table.to_text())
            for name, overrides in ABLATION_VARIANTS:
                for seed in (1, 2):
                    path = run_dir(tmp, name, seed) / 'config.txt'
                    expected = config.with_overrides(seed=seed, **overrides)
                    self.assertEqual(load_run_config(read_config_file(path)).digest(), expected.digest(), path)
                    self.assertTrue((path.parent / 'metrics.txt').exists())
            self.assertEqual(run_dir(tmp, 'w/o Noise Robust', 2), Path(tmp) / 'wo-noise-robust' / 'seed-2')

    def test_robustness_report(self):
        with tempfile.TemporaryDirectory() as tmp:
            report = run_noise_robustness(config=load_run_config(TINY), seeds=1, noise_rate=0.5, out_dir=tmp)
            self.assertEqual((Path(tmp) / 'robustness.txt').read_text(), report.to_text())
            self.assertTrue((Path(tmp) / 'prmf-rho-05' / 'seed-1' / 'config.txt').exists())
        self.assertEqual(len(report.rows), 4)
        self.assertTrue(math.isnan(report.rows[('prmf', 0.0)].mean('alpha_noisy')))
        self.assertEqual(report.rows[('fixed_alpha', 0.0)].mean('alpha_clean'), 0.5)
        drop = report.rows[('prmf', 0.0)].mean('acc') - report.rows[('prmf', 0.5)].mean('acc')
        self.assertAlmostEqual(report.drop('prmf'), drop)
        self.assertEqual(report.alpha_gap('fixed_alpha'), 0.0)
        text = report.to_text()
        for key in ('prmf_drop', 'fixed_alpha_drop', 'prmf_alpha_clean', 'prmf_alpha_noisy', 'gate_more_robust',
                    'alpha_noisy_below_clean'):
            self.assertIn(f'{key} = ', text)

    def test_robustness_needs_positive_noise_rate(self):
        with self.assertRaises(ConfigurationError):
            run_noise_robustness(config=load_run_config(TINY), seeds=1, noise_rate=0.0)


class TestDirectionalExperiments(SimpleTestCase):
    def test_fusion_beats_image_only(self):
        config = load_run_config(DIRECTIONAL)
        train_data, val_data = synthesize_data(config=config)
        fused = train_run(config=config, train_data=train_data, val_data=val_data)
        image_only = train_run(config=config.with_overrides(disable_text_branch=True), train_data=train_data,
                               val_data=val_data)
        self.assertGreaterEqual(fused.evaluation.report.acc, image_only.evaluation.report.acc + 0.05)
        self.assertLess(fused.training.log[-1].train_loss, fused.training.log[0].train_loss)

    def test_confidence_drops_on_corrupted_text(self):
        config = load_run_config({**DIRECTIONAL, 'text_noise_rate': '0.5'})
        train_data, val_data = synthesize_data(config=config)
        outcome = train_run(config=config, train_data=train_data, val_data=val_data)
        self.assertLess(outcome.evaluation.alpha_noisy, outcome.evaluation.alpha_clean)

    def test_learned_confidence_loses_less_than_fixed_alpha(self):
        report = run_noise_robustness(config=load_run_config(DIRECTIONAL), seeds=5, noise_rate=0.5)
        self.assertLess(report.drop('prmf'), report.drop('fixed_alpha'), report.to_text())
        self.assertGreater(report.alpha_gap('prmf'), 0.0, report.to_text())

    def test_full_model_is_not_beaten_by_single_branches(self):
        table = run_ablation_suite(config=load_run_config(DIRECTIONAL), seeds=5)
        rows = {row.name: row.mean('acc') for row in table.rows}
        self.assertGreaterEqual(rows['Full model'], rows['w/o Textual Branch'], table.to_text())
        self.assertGreaterEqual(rows['Full model'], rows['w/o Visual Branch'], table.to_text())


@tag('slow')
@slow
class TestDefaultScaleExperiments(SimpleTestCase):
    def test_fusion_gain(self):
        config = load_run_config({})
        train_data, val_data = synthesize_data(config=config)
        fused = train_run(config=config, train_data=train_data, val_data=val_data)
        image_only = train_run(config=config.with_overrides(disable_text_branch=True), train_data=train_data,
                               val_data=val_data)
        self.assertGreaterEqual(fused.evaluation.report.acc, image_only.evaluation.report.acc + 0.05)

    def test_learned_confidence_loses_less_than_fixed_alpha(self):
        report = run_noise_robustness(config=load_run_config({}), seeds=5, noise_rate=0.5)
        self.assertLess(report.drop('prmf'), report.drop('fixed_alpha'), report.to_text())
        self.assertGreater(report.alpha_gap('prmf'), 0.0, report.to_text())

    def test_full_model_is_not_beaten_by_single_branches(self):
        table = run_ablation_suite(config=load_run_config({}), seeds=5)
        rows = {row.name: row.mean('acc') for row in table.rows}
        self.assertGreaterEqual(rows['Full model'], rows['w/o Textual Branch'], table.to_text())
        self.assertGreaterEqual(rows['Full model'], rows['w/o Visual Branch'], table.to_text())
