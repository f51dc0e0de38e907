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

# Softened distributions, cross-entropy, KL divergence and the mutual
# distillation losses of the student (pruned) and teacher (full) paths

from dataclasses import dataclass, asdict
import numpy
from .errors import ConfigError, DataError
from .tensor import (Tensor, detach, exp, log_softmax, mean, mul, pick,
                     row_sum, scalar_mul, sub, add)


WARMUP_UNITS = ('epoch', 'iter')


@dataclass
class KdConfig:
    """ Temperature, loss weights and warm-up length of phase 2 """
    temperature: float = 2.0
    alpha: float = 0.5
    beta: float = 0.5
    warmup: int = 1
    warmup_unit: str = 'epoch'

    def __post_init__(self):
        if not self.temperature > 0:
            raise ConfigError('temperature must be positive, got %s' % self.temperature)
        for name in ('alpha', 'beta'):
            if not 0 <= getattr(self, name) <= 1:
                raise ConfigError('%s must be in [0, 1]' % name)
        if self.warmup < 0:
            raise ConfigError('warmup must be >= 0')
        if self.warmup_unit not in WARMUP_UNITS:
            raise ConfigError('warmup_unit must be one of %s' % ', '.join(WARMUP_UNITS))

    def to_dict(self):
        return asdict(self)

    def in_warmup(self, epoch, iteration):
        """ epoch counts from 1, iteration from 0 over the whole phase """
        if self.warmup_unit == 'epoch':
            return epoch <= self.warmup
        return iteration < self.warmup

    def weights(self, epoch, iteration):
        """ (alpha, beta) in effect; cross-entropy only during warm-up """
        if self.in_warmup(epoch, iteration):
            return 1.0, 0.0
        return self.alpha, self.beta


def _check_temperature(T):
    if not T > 0:
        raise ConfigError('temperature must be positive, got %s' % T)


def _tempered(z, T):
    return z if T == 1 else scalar_mul(z, 1.0 / T)


def soften(z, T):
    """ Row-wise softmax of z / T """
    _check_temperature(T)
    return exp(log_softmax(_tempered(z, T)))


def cross_entropy(z, y):
    """ Batch mean of -log softmax(z)_y """
    y = numpy.asarray(y, dtype=numpy.int64)
    if y.size and (y.min() < 0 or y.max() >= z.shape[1]):
        raise DataError('labels outside [0, %s)' % z.shape[1])
    return scalar_mul(mean(pick(log_softmax(z), y)), -1.0)


def kl_divergence(z_from, z_to, T):
    """ Batch mean of KL(softmax(z_from / T) || softmax(z_to / T))

    z_from is the target distribution and receives no gradient.
    """
    _check_temperature(T)
    target = log_softmax(_tempered(detach(z_from), T))
    p = Tensor(numpy.exp(target.data))
    log_q = log_softmax(_tempered(z_to, T))
    return mean(row_sum(mul(p, sub(target, log_q))))


def _kd_loss(z_own, z_other, y, cfg, alpha, beta):
    alpha = cfg.alpha if alpha is None else alpha
    beta = cfg.beta if beta is None else beta
    ce = scalar_mul(cross_entropy(z_own, y), alpha)
    if beta == 0:
        return ce
    T = cfg.temperature
    return add(ce, scalar_mul(kl_divergence(z_other, z_own, T), beta * T * T))


def kd_loss_student(z_s, z_t, y, cfg, alpha=None, beta=None):
    """ alpha * CE(z_s, y) + beta * T^2 * KL(z_t || z_s), teacher logits detached """
    return _kd_loss(z_s, z_t, y, cfg, alpha, beta)


def kd_loss_teacher(z_t, z_s, y, cfg, alpha=None, beta=None):
    """ alpha * CE(z_t, y) + beta * T^2 * KL(z_s || z_t), student logits detached """
    return _kd_loss(z_t, z_s, y, cfg, alpha, beta)
