#!/usr/bin/env python
################################################################################
#   pqk - pruning, quantization and knowledge distillation for compact networks
#
#   Copyright (C) 2026 pqk developers
#
#   Redistribution and use in source and binary forms, with or without
#   modification, are permitted provided that the following conditions are met:
#
#   * Redistributions of source code must retain the above copyright notice, this
#     list of conditions and the following disclaimer.
#
#   * Redistributions in binary form must reproduce the above copyright notice,
#     this list of conditions and the following disclaimer in the documentation
#     and/or other materials provided with the distribution.
#
#   THIS SOFTWARE IS PROVIDED BY THE COPYRIGHT HOLDERS AND CONTRIBUTORS "AS IS"
#   AND ANY EXPRESS OR IMPLIED WARRANTIES, INCLUDING, BUT NOT LIMITED TO, THE
#   IMPLIED WARRANTIES OF MERCHANTABILITY AND FITNESS FOR A PARTICULAR PURPOSE ARE
#   DISCLAIMED. IN NO EVENT SHALL THE COPYRIGHT HOLDER OR CONTRIBUTORS BE LIABLE
#   FOR ANY DIRECT, INDIRECT, INCIDENTAL, SPECIAL, EXEMPLARY, OR CONSEQUENTIAL
#   DAMAGES (INCLUDING, BUT NOT LIMITED TO, PROCUREMENT OF SUBSTITUTE GOODS OR
#   SERVICES; LOSS OF USE, DATA, OR PROFITS; OR BUSINESS INTERRUPTION) HOWEVER
#   CAUSED AND ON ANY THEORY OF LIABILITY, WHETHER IN CONTRACT, STRICT LIABILITY,
#   OR TORT (INCLUDING NEGLIGENCE OR OTHERWISE) ARISING IN ANY WAY OUT OF THE USE
#   OF THIS SOFTWARE, EVEN IF ADVISED OF THE POSSIBILITY OF SUCH DAMAGE.
################################################################################

import unittest
import numpy
from numpy.testing import assert_array_equal
from pqk.config import OptimConfig
from pqk.errors import ConfigError
from pqk.optim import SGD, ParamGroup
from pqk.tensor import DTYPE, Parameter


def param(values, grad, name='w'):
    p = Parameter(values, name=name)
    p.grad = numpy.asarray(grad, dtype=DTYPE)
    return p


class ScheduleTest(unittest.TestCase):

    def test_epoch_milestones(self):
        """ Decay after each milestone epoch """
        opt = SGD(OptimConfig(lr=0.1, milestones=[2, 4], gamma=0.1))
        self.assertEqual(opt.lr(1, 0), 0.1)
        self.assertEqual(opt.lr(2, 100), 0.1)
        self.assertAlmostEqual(opt.lr(3, 0), 0.01)
        self.assertAlmostEqual(opt.lr(5, 0), 0.001)

    def test_iteration_milestones(self):
        """ Decay at milestone iterations """
        opt = SGD(OptimConfig(lr=0.1, milestones=[2000, 1000], milestone_unit='iter'))
        self.assertEqual(opt.lr(1, 999), 0.1)
        self.assertAlmostEqual(opt.lr(1, 1000), 0.01)
        self.assertAlmostEqual(opt.lr(9, 2000), 0.001)

    def test_invalid(self):
        """ Bad optimizer settings are configuration errors """
        with self.assertRaises(ConfigError):
            OptimConfig(lr=0)
        with self.assertRaises(ConfigError):
            OptimConfig(momentum=1.0)
        with self.assertRaises(ConfigError):
            OptimConfig(milestone_unit='batch')


class StepTest(unittest.TestCase):

    def test_plain(self):
        """ Momentum SGD with weight decay against the update formula """
        opt = SGD(OptimConfig(lr=0.1, momentum=0.9, weight_decay=0.01))
        p = param([1.0, -2.0], [0.5, 0.5])
        expected_buf = numpy.zeros(2, dtype=DTYPE)
        data = p.data.copy()
        for _ in range(3):
            g = p.grad + DTYPE(0.01) * data
            expected_buf = DTYPE(0.9) * expected_buf + g
            data = data - DTYPE(0.1) * expected_buf
            opt.step([ParamGroup([p])], 0.1)
        assert_array_equal(p.data, data)
        assert_array_equal(opt.buffers['w'], expected_buf)
        self.assertEqual(opt.steps, 3)

    def test_update_mask(self):
        """ Positions outside the update mask keep data and momentum bit-identical """
        opt = SGD(OptimConfig(lr=0.1, momentum=0.9, weight_decay=0.01))
        p = param([1.0, 2.0, 3.0, 4.0], [1.0, 1.0, 1.0, 1.0])
        where = numpy.array([True, False, True, False])
        opt.step([ParamGroup([p])], 0.1)
        data, buf = p.data.copy(), opt.buffers['w'].copy()
        opt.step([ParamGroup([p], update={'w': where})], 0.1)
        assert_array_equal(p.data[~where], data[~where])
        assert_array_equal(opt.buffers['w'][~where], buf[~where])
        self.assertTrue((p.data[where] != data[where]).all())

    def test_decay_mask(self):
        """ Weight decay applies only to the decay positions """
        opt = SGD(OptimConfig(lr=1.0, momentum=0.0, weight_decay=0.5))
        p = param([2.0, 2.0], [0.0, 0.0])
        opt.step([ParamGroup([p], decay={'w': numpy.array([True, False])})], 1.0)
        assert_array_equal(p.data, [1.0, 2.0])

    def test_group_settings(self):
        """ Group learning-rate scale and weight-decay override """
        opt = SGD(OptimConfig(lr=1.0, momentum=0.0, weight_decay=0.5))
        p = param([1.0], [1.0], name='s')
        opt.step([ParamGroup([p], lr_scale=0.25, weight_decay=0.0)], 1.0)
        assert_array_equal(p.data, [0.75])

    def test_no_gradient(self):
        """ Parameters without a gradient are skipped """
        opt = SGD(OptimConfig())
        p = Parameter([1.0], name='w')
        opt.step([ParamGroup([p])], 0.1)
        assert_array_equal(p.data, [1.0])
        self.assertNotIn('w', opt.buffers)

    def test_unnamed(self):
        """ Momentum buffers are keyed by parameter name """
        opt = SGD(OptimConfig())
        with self.assertRaises(ConfigError):
            opt.step([ParamGroup([param([1.0], [1.0], name=None)])], 0.1)

    def test_state(self):
        """ State round-trips through state_dict """
        opt = SGD(OptimConfig())
        opt.step([ParamGroup([param([1.0, 2.0], [1.0, -1.0])])], 0.1)
        other = SGD(OptimConfig())
        other.load_state_dict(opt.state_dict())
        self.assertEqual(other.steps, 1)
        assert_array_equal(other.buffers['w'], opt.buffers['w'])


if __name__ == "__main__":
    unittest.main()
