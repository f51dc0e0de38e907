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

# SGD with momentum, weight decay and projected (partition-restricted) updates

import logging
from collections import OrderedDict
import numpy
from .errors import ConfigError, ShapeError
from .tensor import DTYPE


logger = logging.getLogger(__name__)


class ParamGroup(object):
    """ Parameters sharing a learning-rate scale and weight decay

    update maps a parameter name to a boolean array of the positions this
    step may change; all other positions (and their momentum) stay
    bit-identical. decay maps a name to the positions receiving weight decay.
    """

    def __init__(self, params, lr_scale=1.0, weight_decay=None, update=None, decay=None, name='params'):
        self.params = list(params)
        self.lr_scale = lr_scale
        self.weight_decay = weight_decay
        self.update = update or {}
        self.decay = decay or {}
        self.name = name

    def __repr__(self):
        return '<ParamGroup %s (%s tensors)>' % (self.name, len(self.params))


class SGD(object):
    """ Momentum SGD with step decay at milestones """

    def __init__(self, cfg):
        self.cfg = cfg
        self.buffers = OrderedDict()
        self.steps = 0

    def lr(self, epoch, iteration):
        """ Learning rate at 1-indexed epoch and 0-indexed global iteration """
        if self.cfg.milestone_unit == 'epoch':
            passed = len([m for m in self.cfg.milestones if epoch > m])
        else:
            passed = len([m for m in self.cfg.milestones if iteration >= m])
        return self.cfg.lr * self.cfg.gamma ** passed

    def _buffer(self, p):
        if p.name is None:
            raise ConfigError('optimizer parameters must be named')
        buf = self.buffers.get(p.name)
        if buf is None:
            buf = numpy.zeros(p.shape, dtype=DTYPE)
            self.buffers[p.name] = buf
        return buf

    def step(self, groups, lr):
        """ Update every parameter of groups in place from its .grad """
        m = DTYPE(self.cfg.momentum)
        for group in groups:
            wd = self.cfg.weight_decay if group.weight_decay is None else group.weight_decay
            rate = DTYPE(lr * group.lr_scale)
            for p in group.params:
                g = p.grad
                if g is None:
                    continue
                if g.shape != p.shape:
                    raise ShapeError('sgd', g.shape, p.shape)
                if wd:
                    decay = DTYPE(wd) * p.data
                    where = group.decay.get(p.name)
                    if where is not None:
                        decay = numpy.where(where, decay, DTYPE(0))
                    g = g + decay
                buf = self._buffer(p)
                new_buf = m * buf + g
                new_data = p.data - rate * new_buf
                where = group.update.get(p.name)
                if where is not None:
                    new_buf = numpy.where(where, new_buf, buf)
                    new_data = numpy.where(where, new_data, p.data)
                self.buffers[p.name] = new_buf.astype(DTYPE, copy=False)
                p.data = new_data.astype(DTYPE, copy=False)
        self.steps += 1

    def state_dict(self):
        return OrderedDict([('steps', self.steps), ('buffers', self.buffers)])

    def load_state_dict(self, state):
        self.steps = int(state['steps'])
        self.buffers = OrderedDict((k, numpy.asarray(v, dtype=DTYPE)) for k, v in state['buffers'].items())
