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

import math
import unittest
import numpy
from numpy.testing import assert_allclose, assert_array_equal
from pqk.errors import ShapeError
from pqk.gradcheck import check_gradient, relative_error
from pqk.tensor import (DTYPE, BatchNormParams, Parameter, Tape, Tensor, add, add_bias, avg_pool2d, backward,
                        batchnorm, conv2d, exp, global_avg_pool, log_softmax, matmul, mean, mul, mul_elementwise,
                        pick, relu, row_sum, scalar_mul, sub, sum as tsum)


SEEDS = range(20)


def rand(rng, *shape):
    return rng.standard_normal(shape).astype(DTYPE)


def worst_error(build, make_inputs, **kwargs):
    """ Largest relative gradient error over the seeded random cases """
    return max(check_gradient(build, make_inputs(numpy.random.default_rng(seed)), seed=seed, **kwargs)
               for seed in SEEDS)


def away_from_zero(rng, *shape):
    a = rand(rng, *shape)
    return numpy.where(numpy.abs(a) < 0.1, DTYPE(0.5), a)


class ElementwiseTest(unittest.TestCase):

    def test_add(self):
        """ Add two vectors """
        assert_array_equal(add(Tensor([1, 2]), Tensor([3, 4])).data, [4, 6])

    def test_add_scalar(self):
        """ Scalars broadcast against any shape """
        assert_array_equal(add(Tensor([[1, 2]]), 1.0).data, [[2, 3]])

    def test_shape_mismatch(self):
        """ Different non-scalar shapes raise ShapeError """
        with self.assertRaises(ShapeError):
            add(Tensor([1, 2]), Tensor([1, 2, 3]))
        with self.assertRaises(ShapeError):
            mul(Tensor([[1, 2]]), Tensor([1, 2]))

    def test_mul_ones(self):
        """ Multiplying by ones is the identity """
        x = Tensor(numpy.random.default_rng(0).standard_normal((3, 4)))
        assert_array_equal(mul_elementwise(x, Tensor(numpy.ones(x.shape))).data, x.data)

    def test_add_gradient(self):
        """ Both parents of add receive the upstream gradient unchanged """
        a, b = Parameter([1.0, 2.0], name='a'), Parameter([3.0, 4.0], name='b')
        g = numpy.array([0.5, -2.0], dtype=DTYPE)
        with Tape() as tape:
            loss = tsum(mul(add(a, b), Tensor(g)))
        ga, gb = backward(tape, loss, [a, b])
        assert_array_equal(ga, g)
        assert_array_equal(gb, g)

    def test_relu(self):
        """ relu clips negatives """
        assert_array_equal(relu(Tensor([-1.0, 2.0])).data, [0, 2])

    def test_relu_nan(self):
        """ NaN passes through relu """
        out = relu(Tensor([numpy.nan, -1.0, 1.0])).data
        self.assertTrue(numpy.isnan(out[0]))
        assert_array_equal(out[1:], [0, 1])

    def test_elementwise_gradients(self):
        """ Finite differences of sub, mul, exp, relu """
        pair = lambda rng: [rand(rng, 3, 4), rand(rng, 3, 4)]
        self.assertLess(worst_error(lambda x, y: sub(x, y), pair), 1e-3)
        self.assertLess(worst_error(lambda x, y: mul(x, y), pair), 1e-3)
        self.assertLess(worst_error(lambda x: exp(scalar_mul(x, 0.5)), lambda rng: [rand(rng, 3, 4)]), 1e-3)
        self.assertLess(worst_error(relu, lambda rng: [away_from_zero(rng, 3, 4)]), 1e-3)


class ReductionTest(unittest.TestCase):

    def test_mean_row_sum(self):
        """ mean and row_sum values """
        x = Tensor([[1.0, 2.0], [3.0, 6.0]])
        self.assertEqual(mean(x).item(), 3.0)
        assert_array_equal(row_sum(x).data, [3, 9])

    def test_pick(self):
        """ pick selects one entry per row and scatters its gradient """
        x = Parameter([[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]], name='x')
        with Tape() as tape:
            out = pick(x, [2, 0])
            loss = tsum(out)
        assert_array_equal(out.data, [3, 4])
        backward(tape, loss, [x])
        assert_array_equal(x.grad, [[0, 0, 1], [1, 0, 0]])

    def test_pick_shape(self):
        """ pick needs one index per row """
        with self.assertRaises(ShapeError):
            pick(Tensor(numpy.zeros((2, 3))), [0])

    def test_add_bias_gradient(self):
        """ Finite differences of the per-channel bias """
        self.assertLess(worst_error(add_bias, lambda rng: [rand(rng, 2, 3, 4, 4), rand(rng, 3)]), 1e-3)


class LinearAlgebraTest(unittest.TestCase):

    def test_matmul(self):
        """ Matrix products by hand """
        a = Tensor([[1.0, 2.0], [3.0, 4.0]])
        assert_array_equal(matmul(a, Tensor([[1.0], [1.0]])).data, [[3], [7]])
        assert_array_equal(matmul(a, Tensor(numpy.eye(2))).data, a.data)

    def test_matmul_shape(self):
        """ Inner dimensions must agree """
        with self.assertRaises(ShapeError):
            matmul(Tensor(numpy.zeros((2, 3))), Tensor(numpy.zeros((2, 3))))

    def test_matmul_gradient(self):
        """ Finite differences on a 3x4 by 4x2 product """
        self.assertLess(worst_error(matmul, lambda rng: [rand(rng, 3, 4), rand(rng, 4, 2)]), 1e-4)

    def test_conv_identity(self):
        """ A 1x1 unit kernel returns the input """
        x = numpy.random.default_rng(4).standard_normal((2, 1, 5, 5)).astype(DTYPE)
        out = conv2d(Tensor(x), Tensor(numpy.ones((1, 1, 1, 1))))
        assert_array_equal(out.data, x)

    def test_conv_sum(self):
        """ All-ones 3x3 input and kernel give 9 """
        out = conv2d(Tensor(numpy.ones((1, 1, 3, 3))), Tensor(numpy.ones((1, 1, 3, 3))))
        self.assertEqual(out.shape, (1, 1, 1, 1))
        self.assertEqual(out.item(), 9.0)

    def test_conv_reference(self):
        """ Padded, strided convolution against a direct loop """
        rng = numpy.random.default_rng(5)
        x, w = rand(rng, 2, 3, 6, 6), rand(rng, 4, 3, 3, 3)
        out = conv2d(Tensor(x), Tensor(w), stride=2, padding=1).data
        xp = numpy.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1))).astype(numpy.float64)
        self.assertEqual(out.shape, (2, 4, 3, 3))
        for i in range(3):
            for j in range(3):
                patch = xp[:, :, 2 * i:2 * i + 3, 2 * j:2 * j + 3]
                ref = numpy.einsum('nchw,ochw->no', patch, w.astype(numpy.float64))
                assert_allclose(out[:, :, i, j], ref, rtol=1e-4, atol=1e-5)

    def test_conv_gradient(self):
        """ Finite differences of input and weight gradients """
        inputs = lambda rng: [rand(rng, 2, 3, 5, 5), rand(rng, 2, 3, 3, 3)]
        self.assertLess(worst_error(lambda a, b: conv2d(a, b, padding=1), inputs), 1e-3)
        self.assertLess(worst_error(lambda a, b: conv2d(a, b, stride=2), inputs), 1e-3)

    def test_conv_shape(self):
        """ Channel mismatch raises ShapeError """
        with self.assertRaises(ShapeError):
            conv2d(Tensor(numpy.zeros((1, 2, 4, 4))), Tensor(numpy.zeros((1, 3, 3, 3))))


class PoolingTest(unittest.TestCase):

    def test_global_avg_pool_constant(self):
        """ Global average of a constant map is the constant """
        out = global_avg_pool(Tensor(numpy.full((2, 3, 4, 4), 1.5)))
        assert_array_equal(out.data, numpy.full((2, 3), 1.5))

    def test_avg_pool(self):
        """ 2x2 average pooling by hand """
        x = Tensor(numpy.arange(16).reshape(1, 1, 4, 4))
        assert_array_equal(avg_pool2d(x, 2).data, [[[[2.5, 4.5], [10.5, 12.5]]]])

    def test_pool_gradients(self):
        """ Finite differences of both poolings """
        inputs = lambda rng: [rand(rng, 2, 2, 4, 4)]
        self.assertLess(worst_error(lambda a: avg_pool2d(a, 2), inputs), 1e-3)
        self.assertLess(worst_error(lambda a: avg_pool2d(a, 3, stride=1, padding=1), inputs), 1e-3)
        self.assertLess(worst_error(global_avg_pool, inputs), 1e-3)


class BatchNormTest(unittest.TestCase):

    def test_constant_channel(self):
        """ A constant channel normalizes to the shift parameter """
        params = BatchNormParams(2)
        params.beta.data = numpy.array([0.3, -0.7], dtype=DTYPE)
        out = batchnorm(Tensor(numpy.full((4, 2, 3, 3), 5.0)), params, training=True)
        assert_allclose(out.data[:, 0], 0.3, atol=1e-6)
        assert_allclose(out.data[:, 1], -0.7, atol=1e-6)

    def test_standardized(self):
        """ Already standardized data passes through """
        x = numpy.random.default_rng(8).standard_normal((64, 3))
        x = (x - x.mean(axis=0)) / x.std(axis=0)
        params = BatchNormParams(3, eps=0.0)
        assert_allclose(batchnorm(Tensor(x), params, training=True).data, x, atol=1e-5)

    def test_running_stats(self):
        """ Training updates running statistics unless update_stats is False """
        x = Tensor(numpy.random.default_rng(9).standard_normal((8, 2)) + 3.0)
        params = BatchNormParams(2, momentum=0.1)
        batchnorm(x, params, training=True, update_stats=False)
        assert_array_equal(params.running_mean, [0, 0])
        batchnorm(x, params, training=True)
        assert_allclose(params.running_mean, 0.1 * x.data.mean(axis=0), rtol=1e-5)
        var = x.data.var(axis=0, ddof=1)
        assert_allclose(params.running_var, 0.9 + 0.1 * var, rtol=1e-5)

    def test_eval_uses_running_stats(self):
        """ Eval mode normalizes with running statistics """
        params = BatchNormParams(1, eps=0.0)
        params.running_mean[:] = 2.0
        params.running_var[:] = 4.0
        out = batchnorm(Tensor([[4.0], [0.0]]), params, training=False)
        assert_allclose(out.data, [[1.0], [-1.0]])

    def test_gradient(self):
        """ Finite differences in training and eval mode """
        def build(train):
            def fn(xt, gamma, beta):
                params = BatchNormParams(3)
                params.gamma, params.beta = gamma, beta
                return batchnorm(xt, params, training=train, update_stats=False)
            return fn
        inputs = lambda rng: [rand(rng, 4, 3, 2, 2), 1.0 + 0.1 * rand(rng, 3), rand(rng, 3)]
        self.assertLess(worst_error(build(True), inputs), 1e-3)
        self.assertLess(worst_error(build(False), inputs), 1e-3)


class LogSoftmaxTest(unittest.TestCase):

    def test_values(self):
        """ Symmetric and hand-evaluated rows """
        out = log_softmax(Tensor([[1.0, 1.0], [0.0, math.log(9)]])).data
        assert_allclose(out[0], [-math.log(2)] * 2, rtol=1e-6)
        assert_allclose(out[1], [math.log(0.1), math.log(0.9)], rtol=1e-6)

    def test_shift_invariance(self):
        """ Adding a constant to every logit changes nothing """
        z = numpy.random.default_rng(11).standard_normal((4, 5)).astype(DTYPE)
        assert_allclose(log_softmax(Tensor(z + 100)).data, log_softmax(Tensor(z)).data, atol=1e-5)

    def test_large_logits(self):
        """ Huge logits stay finite """
        out = log_softmax(Tensor([[1e4, 0.0]])).data
        self.assertTrue(numpy.all(numpy.isfinite(out)))

    def test_gradient(self):
        """ Finite differences of log_softmax """
        self.assertLess(worst_error(log_softmax, lambda rng: [rand(rng, 3, 4)]), 1e-3)


class BackwardTest(unittest.TestCase):

    def test_sum(self):
        """ d sum(w) / dw is all ones """
        w = Parameter(numpy.arange(6.0).reshape(2, 3), name='w')
        with Tape() as tape:
            loss = tsum(w)
        backward(tape, loss, [w])
        assert_array_equal(w.grad, numpy.ones((2, 3)))

    def test_quadratic(self):
        """ d 0.5 |w|^2 / dw = w, accumulating over both uses of w """
        w = Parameter([1.0, -2.0, 3.0], name='w')
        with Tape() as tape:
            loss = scalar_mul(tsum(mul(w, w)), 0.5)
        backward(tape, loss, [w])
        assert_array_equal(w.grad, w.data)

    def test_unreached_parameters(self):
        """ Parameters not reached from the loss get zero gradients """
        a, b = Parameter([1.0], name='a'), Parameter([2.0, 3.0], name='b')
        with Tape() as tape:
            loss = tsum(a)
        ga, gb = backward(tape, loss, [a, b])
        assert_array_equal(ga, [1])
        assert_array_equal(gb, [0, 0])

    def test_no_tape(self):
        """ Ops outside a tape are not recorded """
        w = Parameter([1.0], name='w')
        out = add(w, w)
        self.assertFalse(out.requires_grad)
        self.assertEqual(out.parents, ())

    def test_scalar_loss(self):
        """ backward needs a scalar loss """
        w = Parameter([1.0, 2.0], name='w')
        with Tape() as tape:
            out = scalar_mul(w, 2.0)
        with self.assertRaises(ShapeError):
            backward(tape, out, [w])

    def test_res_block_gradient(self):
        """ Finite differences through conv, batch-norm, relu and a skip connection """
        def block(xt, a, b):
            bn = BatchNormParams(2)
            h = batchnorm(conv2d(xt, a, padding=1), bn, training=True, update_stats=False)
            h = conv2d(h, b, padding=1)
            return global_avg_pool(add(h, xt))
        inputs = lambda rng: [rand(rng, 2, 2, 4, 4), 0.5 * rand(rng, 2, 2, 3, 3), 0.5 * rand(rng, 2, 2, 3, 3)]
        self.assertLess(worst_error(block, inputs, wrt=[1, 2]), 1e-3)


class GradcheckTest(unittest.TestCase):

    def test_relative_error(self):
        """ Norm-wise relative error """
        self.assertEqual(relative_error([0, 0], [0, 0]), 0.0)
        self.assertAlmostEqual(relative_error([1, 0], [0, 0]), 1.0)
        self.assertAlmostEqual(relative_error([3, 4], [3, 4.5]), 0.5 / math.sqrt(9 + 20.25))


if __name__ == "__main__":
    unittest.main()
