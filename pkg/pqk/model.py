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

# Prunable/quantizable layers and the networks built from them
#
# Every weight tensor keeps its full-precision latent values. The student path
# reads fake_quantize(w) * M, the teacher path (phase 2 only) reads w itself.
# Batch-norm layers hold one parameter set per path.

import logging
import math
from collections import OrderedDict
from dataclasses import dataclass, asdict, field
from typing import List
import numpy
from .errors import ConfigError, PhaseError
from .pruner import apply_mask, sparsity
from .quantizer import QuantSpec, fake_quantize, init_step_size
from .tensor import (DTYPE, BatchNormParams, Parameter, Tensor, add, add_bias, avg_pool2d,
                     batchnorm, conv2d, flatten, global_avg_pool, matmul, relu)


logger = logging.getLogger(__name__)

STUDENT = 'student'
TEACHER = 'teacher'
PATHS = (STUDENT, TEACHER)

ARCHITECTURES = ('res8', 'mlp')


@dataclass
class ArchConfig:
    """ Network family and sizes; width and blocks apply to res8, hidden to mlp """
    arch: str = 'res8'
    width: int = 45
    blocks: int = 3
    hidden: int = 16
    pool: int = 2
    input_shape: List[int] = field(default_factory=lambda: [1, 32, 32])
    classes: int = 12
    seed: int = 0

    def __post_init__(self):
        if self.arch == 'res8-style':
            self.arch = 'res8'
        if self.arch not in ARCHITECTURES:
            raise ConfigError('unknown architecture %r (expected one of %s)' % (self.arch, ', '.join(ARCHITECTURES)))
        self.input_shape = [int(d) for d in self.input_shape]
        for name in ('width', 'blocks', 'hidden', 'pool'):
            if getattr(self, name) < 1:
                raise ConfigError('%s must be positive' % name)
        if not self.input_shape or min(self.input_shape) < 1:
            raise ConfigError('input_shape must be non-empty and positive')
        if self.arch == 'res8' and len(self.input_shape) != 3:
            raise ConfigError('res8 expects input_shape [channels, height, width]')
        if self.classes < 2:
            raise ConfigError('classes must be >= 2')

    def to_dict(self):
        return asdict(self)


class PqkLayer(object):
    """ Convolution or fully-connected layer with latent weights, mask and quantizer """

    def __init__(self, name, kind, shape, quant, bias=True, stride=1, padding=0):
        if kind not in ('conv2d', 'linear'):
            raise ConfigError('unknown layer kind %s' % kind)
        self.name = name
        self.kind = kind
        self.stride = stride
        self.padding = padding
        self.weight = Parameter(numpy.zeros(shape), name=name + '.weight')
        outputs = shape[0] if kind == 'conv2d' else shape[1]
        self.bias = Parameter(numpy.zeros(outputs), name=name + '.bias') if bias else None
        self.mask = numpy.ones(shape, dtype=bool)
        self.quant = quant

    def __repr__(self):
        return '<PqkLayer %s %s %s>' % (self.name, self.kind, self.shape)

    @property
    def shape(self):
        return self.weight.shape

    @property
    def fan_in(self):
        shape = self.shape
        return int(numpy.prod(shape[1:])) if self.kind == 'conv2d' else shape[0]

    @property
    def sparsity(self):
        return sparsity(self.mask)

    def reset(self, rng):
        """ Kaiming-uniform (fan-in, relu gain) weights, zero bias """
        bound = math.sqrt(6.0 / self.fan_in)
        self.weight.data = rng.uniform(-bound, bound, size=self.shape).astype(DTYPE)
        if self.bias is not None:
            self.bias.data = numpy.zeros(self.bias.shape, dtype=DTYPE)

    def student_weight(self):
        return apply_mask(fake_quantize(self.weight, self.quant), self.mask)

    def forward(self, x, path):
        w = self.student_weight() if path == STUDENT else self.weight
        if self.kind == 'conv2d':
            out = conv2d(x, w, stride=self.stride, padding=self.padding)
        else:
            out = matmul(x, w)
        if self.bias is not None:
            out = add_bias(out, self.bias)
        return out


class BatchNormState(object):
    """ Batch-norm parameter sets keyed by forward path """

    def __init__(self, name, channels, eps=1e-5, momentum=0.1):
        self.name = name
        self.sets = OrderedDict([(STUDENT, BatchNormParams(channels, eps, momentum, name='%s.%s' % (name, STUDENT)))])

    def get(self, path):
        if path not in self.sets:
            raise PhaseError('%s has no %s batch-norm set before phase 2' % (self.name, path))
        return self.sets[path]

    def clone_for_teacher(self):
        if TEACHER in self.sets:
            return False
        self.sets[TEACHER] = self.sets[STUDENT].copy(name='%s.%s' % (self.name, TEACHER))
        return True


class Model(object):
    """ A network of PqkLayers and BatchNormStates sharing one latent weight store """

    def __init__(self, arch):
        self.arch = arch
        self.layers = OrderedDict()
        self.bns = OrderedDict()
        self.phase = 1

    def add_layer(self, layer):
        self.layers[layer.name] = layer
        return layer

    def add_bn(self, name, channels, eps=1e-5, momentum=0.1):
        self.bns[name] = BatchNormState(name, channels, eps, momentum)
        return self.bns[name]

    def prunable_layers(self):
        return list(self.layers.values())

    # parameter bookkeeping

    def parameter_groups(self):
        """ Every parameter in exactly one of weights, biases, bn, step_sizes """
        layers = self.prunable_layers()
        bn = []
        for state in self.bns.values():
            for params in state.sets.values():
                bn.extend(params.parameters())
        return OrderedDict([
            ('weights', [layer.weight for layer in layers]),
            ('biases', [layer.bias for layer in layers if layer.bias is not None]),
            ('bn', bn),
            ('step_sizes', [layer.quant.step for layer in layers]),
        ])

    def num_parameters(self, groups=('weights', 'biases')):
        found = self.parameter_groups()
        return sum(p.size for g in groups for p in found[g])

    def bn_parameters(self, path):
        params = []
        for state in self.bns.values():
            if path in state.sets:
                params.extend(state.sets[path].parameters())
        return params

    def student_parameters(self, step_sizes=True):
        groups = self.parameter_groups()
        params = groups['weights'] + groups['biases'] + self.bn_parameters(STUDENT)
        if step_sizes:
            params += [layer.quant.step for layer in self.prunable_layers() if layer.quant.trainable]
        return params

    # quantization

    def init_step_sizes(self):
        """ Initialize step sizes from the current weights, once per layer """
        for layer in self.prunable_layers():
            if not layer.quant.initialized:
                layer.quant.step_size = init_step_size(layer.weight, layer.quant.bits)
                layer.quant.initialized = True

    def freeze_step_sizes(self):
        for layer in self.prunable_layers():
            layer.quant.trainable = False

    def set_quantization(self, enabled):
        """ Turn fake-quantization of the student path on or off (bypass for debugging) """
        for layer in self.prunable_layers():
            layer.quant.enabled = enabled

    # forward passes

    def forward(self, x, path, training=False, update_stats=True):
        if path not in PATHS:
            raise ConfigError('unknown forward path %r' % path)
        if path == TEACHER and self.phase != 2:
            raise PhaseError('the teacher path exists only in phase 2 (model is in phase %s)' % self.phase)
        x = x if isinstance(x, Tensor) else Tensor(x)
        if self.arch.arch == 'mlp':
            return self._forward_mlp(x, path)
        return self._forward_res8(x, path, training, update_stats)

    def _forward_mlp(self, x, path):
        h = flatten(x) if x.ndim > 2 else x
        h = relu(self.layers['fc1'].forward(h, path))
        h = relu(self.layers['fc2'].forward(h, path))
        return self.layers['fc3'].forward(h, path)

    def _forward_res8(self, x, path, training, update_stats):
        def conv(name, h):
            return self.layers[name].forward(h, path)

        def bn(name, h):
            return batchnorm(h, self.bns[name].get(path), training, update_stats)

        h = relu(conv('conv0', x))
        h = avg_pool2d(h, self.arch.pool)
        for b in range(self.arch.blocks):
            y = relu(bn('block%d.bn1' % b, conv('block%d.conv1' % b, h)))
            y = bn('block%d.bn2' % b, conv('block%d.conv2' % b, y))
            h = relu(add(y, h))
        return self.layers['fc'].forward(global_avg_pool(h), path)


def build_model(cfg, bits=8, lr_scale=1e-4, quantize=True, bn_eps=1e-5, bn_momentum=0.1):
    """ Build and initialize a res8-style or mlp network from an ArchConfig """
    model = Model(cfg)

    def layer(name, kind, shape, **kwargs):
        quant = QuantSpec(bits=bits, lr_scale=lr_scale, enabled=quantize, name=name + '.step_size')
        return model.add_layer(PqkLayer(name, kind, shape, quant, **kwargs))

    if cfg.arch == 'mlp':
        inputs = int(numpy.prod(cfg.input_shape))
        layer('fc1', 'linear', (inputs, cfg.hidden))
        layer('fc2', 'linear', (cfg.hidden, cfg.hidden))
        layer('fc3', 'linear', (cfg.hidden, cfg.classes))
    else:
        width = cfg.width
        # convolutions feed batch-norm (or the pooled stem), so they carry no bias
        layer('conv0', 'conv2d', (width, cfg.input_shape[0], 3, 3), bias=False, padding=1)
        for b in range(cfg.blocks):
            for i in (1, 2):
                layer('block%d.conv%d' % (b, i), 'conv2d', (width, width, 3, 3), bias=False, padding=1)
                model.add_bn('block%d.bn%d' % (b, i), width, bn_eps, bn_momentum)
        layer('fc', 'linear', (width, cfg.classes))

    rng = numpy.random.default_rng(cfg.seed)
    for item in model.prunable_layers():
        item.reset(rng)
    logger.debug('built %s with %s weights', cfg.arch, model.num_parameters())
    return model


def forward_student(model, x, training=False, update_stats=True):
    """ Logits of the pruned, quantized network """
    return model.forward(x, STUDENT, training=training, update_stats=update_stats)


def forward_teacher(model, x, training=False, update_stats=True):
    """ Logits of the full-precision network using every latent weight """
    return model.forward(x, TEACHER, training=training, update_stats=update_stats)


def clone_bn_for_teacher(model):
    """ Create the teacher batch-norm sets as copies of the student sets (idempotent) """
    created = [state.clone_for_teacher() for state in model.bns.values()]
    return any(created)


def build_from_config(cfg):
    """ build_model with the quantizer and batch-norm settings of a TrainConfig """
    return build_model(cfg.arch, bits=cfg.quant.bits, lr_scale=cfg.quant.lr_scale, quantize=cfg.quant.enabled,
                       bn_eps=cfg.bn_eps, bn_momentum=cfg.bn_momentum)
