import numpy as np
from django.test import SimpleTestCase

from fusionlab.diffcore import ops
from fusionlab.diffcore.gradcheck import grad_check
from fusionlab.diffcore.tape import GradTape
from fusionlab.prmf.model import PARAMETER_GROUPS, ModelConfig, build_embedding_model, build_toy_model
from fusionlab.utils.errors import ConfigurationError


class TestModelConfig(SimpleTestCase):
    def test_unknown_fusion(self):
        with self.assertRaises(ConfigurationError):
            ModelConfig(fusion='attention')

    def test_fixed_alpha_range(self):
        with self.assertRaises(ConfigurationError):
            ModelConfig(fixed_alpha=1.5)
        with self.assertRaises(ConfigurationError):
            ModelConfig(fusion='concat', fixed_alpha=0.5)


class TestEmbeddingModel(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(0)
        self.images = self.rng.normal(size=(4, 6))
        self.texts = self.rng.normal(size=(4, 5))

    def build(self, **overrides):
        return build_embedding_model(ModelConfig(image_dim=6, text_dim=5, num_classes=3, lora_rank=2, **overrides))

    def test_parameter_groups(self):
        model = self.build()
        self.assertEqual(set(model.parameter_groups().values()), set(PARAMETER_GROUPS))
        self.assertEqual(model.names_in_groups({'visual_encoder'}), ['visual_encoder.B', 'visual_encoder.A'])

    def test_variant_outputs(self):
        for fusion in ('prmf', 'concat', 'image_only', 'text_only'):
            model = self.build(fusion=fusion)
            out = model.forward(GradTape(), self.images, self.texts)
            self.assertEqual(out.fused_logits.shape, (4, 3), fusion)
            self.assertEqual(out.image_logits.shape, (4, 3), fusion)
            self.assertEqual(out.alpha is None, fusion != 'prmf', fusion)

    def test_concat_layer_is_in_projection_group(self):
        model = self.build(fusion='concat')
        self.assertIn('concat_fusion.weight', model.names_in_groups({'projection'}))
        self.assertEqual(model.named_parameters()['concat_fusion.weight'].shape, (5, 10))

    def test_dropped_branch_gets_no_gradient(self):
        model = self.build(fusion='image_only')
        tape = GradTape()
        out = model.forward(tape, self.images, self.texts)
        grads = tape.backward(ops.softmax_cross_entropy(out.fused_logits, np.array([0, 1, 2, 0])))
        self.assertFalse(any(name.startswith('text_encoder') for name in grads))

    def test_fresh_model_starts_at_half(self):
        out = self.build().forward(GradTape(), self.images, self.texts)
        np.testing.assert_array_equal(out.alpha.data, np.full(4, 0.5))

    def test_gradients(self):
        model = self.build()
        for name in model.names_in_groups({'visual_encoder', 'text_encoder'}):
            if name.endswith('.B'):
                np.copyto(model.named_parameters()[name], self.rng.normal(scale=0.5, size=model.named_parameters()[name].shape))
        np.copyto(model.head.confidence.weight, self.rng.normal(size=model.head.confidence.weight.shape))
        labels = np.array([0, 2, 1, 1])

        def fn(tape):
            out = model.forward(tape, self.images, self.texts)
            return ops.add(ops.scale(ops.softmax_cross_entropy(out.fused_logits, labels), 0.6),
                           ops.scale(ops.softmax_cross_entropy(out.image_logits, labels), 0.4))

        report = grad_check(fn, model.named_parameters())
        self.assertTrue(report.passed, report.to_text())


class TestToyModel(SimpleTestCase):
    def test_raw_forward(self):
        rng = np.random.default_rng(1)
        model = build_toy_model(ModelConfig(image_dim=6, text_dim=5, lora_rank=2), channels=(2, 3), vocab_size=10,
                                d_model=4, max_len=8)
        self.assertTrue(model.config.raw_inputs)
        out = model.forward(GradTape(), rng.normal(size=(2, 1, 8, 8)), rng.integers(1, 10, size=(2, 5)))
        self.assertEqual(out.fused_logits.shape, (2, 3))
        self.assertEqual(out.alpha.shape, (2,))
