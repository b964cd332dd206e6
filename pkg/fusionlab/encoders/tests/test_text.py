import numpy as np
from django.test import SimpleTestCase

from fusionlab.diffcore import ops
from fusionlab.diffcore.gradcheck import grad_check
from fusionlab.diffcore.tape import GradTape
from fusionlab.encoders.text import ToyTextEncoder, text_encode, text_encode_batch
from fusionlab.lora.adapters import merge_adapter
from fusionlab.utils.errors import DimensionError, InputError, VocabularyError


class TestTextEncode(SimpleTestCase):
    def setUp(self):
        self.encoder = ToyTextEncoder(seed=1)
        self.rng = np.random.default_rng(0)
        for adapter in self.encoder.attention.adapters:
            np.copyto(adapter.B, self.rng.normal(scale=0.1, size=adapter.B.shape))

    def test_output_length(self):
        out = text_encode(self.encoder, [5, 9, 12], GradTape())
        self.assertEqual(out.shape, (768,))
        self.assertTrue(np.all(np.isfinite(out.data)))

    def test_unknown_tokens(self):
        for token in (0, 64, -1):
            with self.assertRaises(VocabularyError):
                text_encode(self.encoder, [3, token], GradTape())

    def test_empty_and_too_long(self):
        with self.assertRaises(InputError):
            text_encode(self.encoder, [], GradTape())
        with self.assertRaises(DimensionError):
            text_encode(self.encoder, [1] * 32, GradTape())

    def test_single_token_closed_form(self):
        params = self.encoder.named_parameters()
        hidden = (
            params['text_encoder.token_embedding'][[0, 7]]
            + params['text_encoder.position_embedding'][:2]
            + params['text_encoder.segment_embedding']
        )
        q_adapter, k_adapter, v_adapter = self.encoder.attention.adapters
        query = merge_adapter(q_adapter) @ hidden[0]
        keys = hidden @ merge_adapter(k_adapter).T
        values = hidden @ merge_adapter(v_adapter).T
        scores = keys @ query / np.sqrt(self.encoder.d_model)
        weights = np.exp(scores - scores.max())
        weights /= weights.sum()
        expected = params['text_encoder.output.weight'] @ (weights @ values) + params['text_encoder.output.bias']
        out = text_encode(self.encoder, [7], GradTape()).data
        np.testing.assert_allclose(out, expected, atol=1e-12)

    def test_permutation_invariance_without_positions(self):
        encoder = ToyTextEncoder(use_positions=False, seed=2)
        tokens = np.array([4, 11, 23, 42, 8])
        first = text_encode(encoder, tokens, GradTape()).data
        second = text_encode(encoder, tokens[::-1].copy(), GradTape()).data
        np.testing.assert_allclose(first, second, atol=1e-12)

    def test_positions_break_invariance(self):
        tokens = np.array([4, 11, 23, 42, 8])
        first = text_encode(self.encoder, tokens, GradTape()).data
        second = text_encode(self.encoder, tokens[::-1].copy(), GradTape()).data
        self.assertFalse(np.allclose(first, second))

    def test_batch(self):
        rows = [[1, 2, 3], [4, 5, 6]]
        tape = GradTape()
        batch = text_encode_batch(self.encoder, rows, tape)
        self.assertEqual(batch.shape, (2, 768))
        np.testing.assert_array_equal(batch.data[1], text_encode(self.encoder, rows[1], tape).data)

    def test_gradients(self):
        encoder = ToyTextEncoder(vocab_size=8, d_model=4, max_len=6, output_dim=3, rank=2, heads=2, seed=3)
        for adapter in encoder.attention.adapters:
            np.copyto(adapter.B, self.rng.normal(size=adapter.B.shape))

        def fn(tape):
            return ops.softmax_cross_entropy(text_encode(encoder, [3, 1, 5, 3], tape), 2)

        report = grad_check(fn, encoder.named_parameters())
        self.assertTrue(report.passed, report.to_text())
