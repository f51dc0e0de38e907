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

# Experiment configuration: nested dataclasses loaded from JSON files

import json
import logging
from dataclasses import dataclass, asdict, field, fields
from typing import List, Optional
from .distiller import KdConfig
from .errors import ConfigError
from .model import ArchConfig
from .pruner import PruneSchedule
from .utils import io_errors


logger = logging.getLogger(__name__)

MILESTONE_UNITS = ('epoch', 'iter')
UPDATE_ORDERS = ('sequential', 'simultaneous')


@dataclass
class OptimConfig:
    """ SGD with momentum and step decay of the learning rate """
    lr: float = 0.1
    momentum: float = 0.9
    weight_decay: float = 1e-5
    milestones: List[int] = field(default_factory=list)
    milestone_unit: str = 'epoch'
    gamma: float = 0.1

    def __post_init__(self):
        if not self.lr > 0:
            raise ConfigError('learning rate must be positive, got %s' % self.lr)
        if not 0 <= self.momentum < 1:
            raise ConfigError('momentum must be in [0, 1)')
        if self.weight_decay < 0:
            raise ConfigError('weight_decay must be >= 0')
        if self.milestone_unit not in MILESTONE_UNITS:
            raise ConfigError('milestone_unit must be one of %s' % ', '.join(MILESTONE_UNITS))
        if not 0 < self.gamma <= 1:
            raise ConfigError('gamma must be in (0, 1]')
        self.milestones = sorted(int(m) for m in self.milestones)

    def to_dict(self):
        return asdict(self)


@dataclass
class QuantConfig:
    bits: int = 8
    lr_scale: float = 1e-4
    enabled: bool = True

    def __post_init__(self):
        if not 2 <= self.bits <= 8:
            raise ConfigError('bitwidth must be in [2, 8], got %s' % self.bits)
        if not self.lr_scale > 0:
            raise ConfigError('step-size lr scale must be positive')

    def to_dict(self):
        return asdict(self)


@dataclass
class DataConfig:
    """ Dataset specs (see pqk.data.resolve_data) and batching """
    train: str = 'synthetic:two-spirals:1000:0'
    dev: str = 'synthetic:two-spirals:400:1'
    batch_size: int = 32

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigError('batch_size must be >= 1')

    def to_dict(self):
        return asdict(self)


@dataclass
class TrainConfig:
    """ Everything one run needs; echoed verbatim into every checkpoint """
    phase1_epochs: int = 10
    phase2_epochs: int = 10
    seed: int = 0
    arch: ArchConfig = field(default_factory=ArchConfig)
    optim: OptimConfig = field(default_factory=OptimConfig)
    phase2_optim: Optional[OptimConfig] = None
    prune: PruneSchedule = field(default_factory=PruneSchedule)
    quant: QuantConfig = field(default_factory=QuantConfig)
    kd: KdConfig = field(default_factory=KdConfig)
    data: DataConfig = field(default_factory=DataConfig)
    update_order: str = 'sequential'
    decay_masked: bool = False
    bn_eps: float = 1e-5
    bn_momentum: float = 0.1

    def __post_init__(self):
        if self.phase1_epochs < 1 or self.phase2_epochs < 1:
            raise ConfigError('phase lengths must be >= 1 epoch')
        if self.update_order not in UPDATE_ORDERS:
            raise ConfigError('update_order must be one of %s' % ', '.join(UPDATE_ORDERS))
        if not self.bn_eps > 0 or not 0 < self.bn_momentum <= 1:
            raise ConfigError('invalid batch-norm eps/momentum')
        if self.prune.ramp_epochs is None:
            self.prune.ramp_epochs = self.phase1_epochs
        if self.phase2_optim is None:
            self.phase2_optim = OptimConfig(**self.optim.to_dict())

    def to_dict(self):
        return asdict(self)

    def to_json(self):
        """ Canonical text: sorted keys, compact separators """
        return json.dumps(self.to_dict(), sort_keys=True, separators=(',', ':'))


NESTED = {
    TrainConfig: {'arch': ArchConfig, 'optim': OptimConfig, 'phase2_optim': OptimConfig,
                  'prune': PruneSchedule, 'quant': QuantConfig, 'kd': KdConfig, 'data': DataConfig},
}


def from_dict(cls, values, where='config'):
    """ Build dataclass cls from a dict, rejecting unknown keys """
    if not isinstance(values, dict):
        raise ConfigError('%s must be an object' % where)
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise ConfigError('unknown key(s) in %s: %s' % (where, ', '.join(unknown)))
    kwargs = {}
    for key, value in values.items():
        nested = NESTED.get(cls, {}).get(key)
        if nested is not None and value is not None:
            value = from_dict(nested, value, '%s.%s' % (where, key))
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as e:
        raise ConfigError('invalid %s: %s' % (where, e))


def load_config(filename):
    """ Read a TrainConfig from a JSON file """
    with io_errors(filename):
        with open(filename) as f:
            text = f.read()
    try:
        values = json.loads(text)
    except ValueError as e:
        raise ConfigError('%s is not valid JSON: %s' % (filename, e))
    cfg = from_dict(TrainConfig, values)
    logger.debug('loaded configuration %s', filename)
    return cfg


def config_from_json(text):
    return from_dict(TrainConfig, json.loads(text))


def override(cfg, seed=None, lr=None):
    """ Apply command-line overrides; returns a new validated config """
    values = cfg.to_dict()
    if seed is not None:
        values['seed'] = int(seed)
        values['arch']['seed'] = int(seed)
    if lr is not None:
        values['optim']['lr'] = float(lr)
    return from_dict(TrainConfig, values)
