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

# Uniform symmetric per-layer weight quantization with a learnable step size
#
# quantize:      w_hat = clip(round(w / S_w), -(2^(k-1) - 1), 2^(k-1) - 1)
# dequantize:    w_bar = w_hat * S_w
# fake_quantize: dequantize(quantize(w)) with straight-through gradients

import numpy
from .errors import ConfigError, CorruptCheckpointError, NumericError
from .tensor import DTYPE, Parameter, Tensor, record_op


ROUND_MODE = 'half-to-even'
MIN_STEP_SIZE = 1e-8


class QuantSpec(object):
    """ Bitwidth and step size S_w of one layer """

    def __init__(self, bits=8, step_size=1.0, trainable=True, lr_scale=1e-4, enabled=True, name='step_size'):
        if not 2 <= int(bits) <= 8:
            raise ConfigError('bitwidth must be in [2, 8], got %s' % bits)
        if not step_size > 0:
            raise ConfigError('step size must be positive, got %s' % step_size)
        self.bits = int(bits)
        self.step = Parameter(numpy.asarray(step_size), name=name)
        self.trainable = trainable
        self.lr_scale = lr_scale
        self.enabled = enabled
        self.initialized = False
        # number of fake_quantize calls, lets tests see which paths touch the quantizer
        self.reads = 0

    def __repr__(self):
        return '<QuantSpec k=%s S_w=%.6g%s>' % (self.bits, self.step_size, '' if self.enabled else ' bypass')

    @property
    def qmax(self):
        return 2 ** (self.bits - 1) - 1

    @property
    def qmin(self):
        return -self.qmax

    @property
    def step_size(self):
        return float(self.step.data)

    @step_size.setter
    def step_size(self, value):
        if not numpy.isfinite(value):
            raise NumericError('non-finite step size %s for %s' % (value, self.step.name))
        if not value > 0:
            raise ConfigError('step size must be positive, got %s' % value)
        self.step.data = numpy.asarray(value, dtype=DTYPE)

    def clamp(self):
        """ Keep S_w strictly positive after an optimizer update; a non-finite S_w is an error """
        if not numpy.isfinite(self.step.data):
            raise NumericError('non-finite step size %s for %s' % (self.step.data, self.step.name))
        if not self.step.data > DTYPE(MIN_STEP_SIZE):
            self.step.data = numpy.asarray(MIN_STEP_SIZE, dtype=DTYPE)

    def levels(self):
        return 2 * self.qmax + 1


def _values(w):
    return w.data if isinstance(w, Tensor) else numpy.asarray(w, dtype=DTYPE)


def _codes(values, spec):
    s = spec.step.data
    if not numpy.isfinite(s):
        raise NumericError('non-finite step size %s' % s)
    if not s > 0:
        raise ConfigError('step size must be positive, got %s' % s)
    return numpy.clip(numpy.rint(values / s), spec.qmin, spec.qmax)


def quantize(w, spec):
    """ Integer codes of w as int8 """
    return _codes(_values(w), spec).astype(numpy.int8)


def dequantize(codes, spec):
    """ Real values of integer codes """
    codes = numpy.asarray(codes)
    if codes.size and (codes.min() < spec.qmin or codes.max() > spec.qmax):
        raise CorruptCheckpointError(
            'integer codes outside [%s, %s] for %s-bit quantization' % (spec.qmin, spec.qmax, spec.bits))
    return Tensor(codes.astype(DTYPE) * spec.step.data)


def fake_quantize(w, spec):
    """ Differentiable quantize-dequantize of w

    The weight gradient passes straight through (all elements, clipped ones
    included). The step-size gradient treats the integer code as constant,
    d w_bar / d S_w = w_hat.
    """
    spec.reads += 1
    if not spec.enabled:
        return w
    codes = _codes(w.data, spec).astype(DTYPE)
    out = codes * spec.step.data

    def grad_fn(g):
        gs = numpy.asarray((g * codes).sum(), dtype=DTYPE) if spec.trainable else None
        return g, gs
    return record_op(out, (w, spec.step), grad_fn)


def init_step_size(w, bits):
    """ max|w| / (2^(k-1) - 1), floored at MIN_STEP_SIZE for all-zero w """
    values = _values(w)
    if values.size == 0:
        raise ConfigError('cannot initialize a step size from an empty tensor')
    top = float(numpy.abs(values).max())
    if top == 0:
        return MIN_STEP_SIZE
    return top / (2 ** (bits - 1) - 1)


def distinct_codes(w, spec, mask=None):
    """ Number of distinct integer codes used by the kept weights """
    codes = quantize(w, spec)
    if mask is not None:
        codes = codes[numpy.asarray(mask, dtype=bool)]
    return int(numpy.unique(codes).size)
