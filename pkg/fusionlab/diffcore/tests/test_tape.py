import numpy as np
from django.test import SimpleTestCase

from fusionlab.diffcore import ops
from fusionlab.diffcore.modules import Module
from fusionlab.diffcore.tape import GradTape
from fusionlab.utils.errors import ConfigMismatchError, ConfigurationError, DimensionError


class TestGradTape(SimpleTestCase):
    def test_unknown_precision(self):
        with self.assertRaises(ConfigurationError):
            GradTape('float16')

    def test_precision_is_applied(self):
        tape = GradTape('float32')
        self.assertEqual(tape.constant([1.0, 2.0]).data.dtype, np.float32)
        self.assertEqual(tape.param('w', np.ones(2)).data.dtype, np.float32)

    def test_tensors_are_read_only(self):
        tensor = GradTape().constant([1.0, 2.0])
        with self.assertRaises(ValueError):
            tensor.data[0] = 5.0

    def test_param_is_bound_once(self):
        tape = GradTape()
        first = tape.param('w', np.ones(3))
        second = tape.param('w', np.zeros(3))
        self.assertIs(first, second)

    def test_one_gradient_per_parameter(self):
        tape = GradTape()
        used = tape.param('used', np.array([2.0, 3.0]))
        tape.param('unused', np.ones((2, 2)))
        grads = tape.backward(ops.sum_all(ops.mul(used, used)))
        self.assertEqual(set(grads), {'used', 'unused'})
        np.testing.assert_array_equal(grads['used'], [4.0, 6.0])
        np.testing.assert_array_equal(grads['unused'], np.zeros((2, 2)))

    def test_fan_out_accumulates(self):
        tape = GradTape()
        x = tape.param('x', np.array([1.5]))
        y = ops.add(ops.mul(x, x), ops.scale(x, 3.0))
        grads = tape.backward(ops.sum_all(y))
        np.testing.assert_allclose(grads['x'], [2 * 1.5 + 3.0])

    def test_frozen_group_gets_no_gradient(self):
        tape = GradTape(frozen_groups={'encoder'})
        frozen = tape.param('enc.w', np.ones(2), group='encoder')
        live = tape.param('head.w', np.ones(2), group='head')
        loss = ops.sum_all(ops.mul(frozen, live))
        self.assertFalse(frozen.requires_grad)
        self.assertEqual(set(tape.parameters), {'head.w'})
        self.assertEqual(set(tape.backward(loss)), {'head.w'})

    def test_nothing_recorded_for_constants(self):
        tape = GradTape()
        out = ops.sum_all(ops.add(tape.constant([1.0]), tape.constant([2.0])))
        self.assertFalse(out.requires_grad)
        self.assertEqual(tape._nodes, [])

    def test_backward_needs_scalar(self):
        tape = GradTape()
        with self.assertRaises(DimensionError):
            tape.backward(tape.param('w', np.ones(3)))

    def test_mixing_tapes_is_rejected(self):
        with self.assertRaises(ConfigurationError):
            ops.add(GradTape().constant([1.0]), GradTape().constant([1.0]))


class TestModule(SimpleTestCase):
    def setUp(self):
        self.module = Module('layer', group='head')
        self.module.add_parameter('weight', np.ones((2, 3)))
        self.module.add_buffer('base', np.eye(2))
        child = self.module.add_child(Module('layer.inner', group='body'))
        child.add_parameter('bias', np.zeros(2))

    def test_names_and_groups(self):
        self.assertEqual(list(self.module.named_parameters()), ['layer.weight', 'layer.inner.bias'])
        self.assertEqual(self.module.names_in_groups({'body'}), ['layer.inner.bias'])
        self.assertEqual(self.module.parameter_count(), 8)

    def test_buffers_are_read_only(self):
        with self.assertRaises(ValueError):
            self.module.named_buffers()['layer.base'][0, 0] = 3.0

    def test_buffer_binds_as_constant(self):
        tape = GradTape()
        self.assertFalse(self.module.buffer(tape, 'base').requires_grad)
        self.assertTrue(self.module.param(tape, 'weight').requires_grad)

    def test_state_dict_round_trip(self):
        state = self.module.state_dict()
        state['layer.weight'] = np.full((2, 3), 7.0)
        master = self.module.named_parameters()['layer.weight']
        self.module.load_state_dict(state)
        self.assertIs(self.module.named_parameters()['layer.weight'], master)
        np.testing.assert_array_equal(master, np.full((2, 3), 7.0))

    def test_load_rejects_missing_name(self):
        state = self.module.state_dict()
        del state['layer.inner.bias']
        with self.assertRaises(ConfigMismatchError):
            self.module.load_state_dict(state)

    def test_load_rejects_wrong_shape(self):
        state = self.module.state_dict()
        state['layer.weight'] = np.ones((3, 2))
        with self.assertRaises(ConfigMismatchError):
            self.module.load_state_dict(state)
