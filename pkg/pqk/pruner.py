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

# Magnitude-based unstructured pruning under a cubic sparsity schedule

import logging
import math
from dataclasses import dataclass, asdict
from typing import Optional
import numpy
from .errors import ConfigError, PhaseError, ShapeError
from .tensor import DTYPE, Tensor, mul


logger = logging.getLogger(__name__)

SCOPES = ('layer', 'global')


@dataclass
class PruneSchedule:
    """ Ramp of the pruning ratio from initial_ratio to target_ratio

    ramp_epochs of None means "the whole of phase 1" and is resolved by the
    training configuration.
    """
    initial_ratio: float = 0.0
    target_ratio: float = 0.9
    initial_epoch: int = 0
    ramp_epochs: Optional[int] = None
    update_period: int = 32
    scope: str = 'layer'

    def __post_init__(self):
        if not 0 <= self.initial_ratio <= self.target_ratio < 1:
            raise ConfigError('pruning ratios must satisfy 0 <= initial <= target < 1 (got %s, %s)'
                              % (self.initial_ratio, self.target_ratio))
        if self.ramp_epochs is not None and self.ramp_epochs < 1:
            raise ConfigError('ramp_epochs must be >= 1')
        if self.update_period < 1:
            raise ConfigError('update_period must be >= 1')
        if self.scope not in SCOPES:
            raise ConfigError('pruning scope must be one of %s' % ', '.join(SCOPES))

    def to_dict(self):
        return asdict(self)


def current_ratio(sched, epoch):
    """ p_c = p_t + (p_i - p_t) (1 - (c - c0) / n)^3, clamped outside [c0, c0 + n] """
    if sched.ramp_epochs is None:
        raise ConfigError('pruning schedule has no ramp length')
    c0, n = sched.initial_epoch, sched.ramp_epochs
    if epoch <= c0:
        return sched.initial_ratio
    if epoch >= c0 + n:
        return sched.target_ratio
    frac = 1.0 - float(epoch - c0) / n
    return sched.target_ratio + (sched.initial_ratio - sched.target_ratio) * frac ** 3


def _magnitudes(w):
    values = w.data if isinstance(w, Tensor) else numpy.asarray(w, dtype=DTYPE)
    return numpy.abs(values)


def pruned_count(ratio, numel):
    return int(math.floor(ratio * numel))


def compute_mask(w, ratio):
    """ Boolean keep-mask zeroing the floor(ratio * numel) smallest |w|

    Ties go to the lower flat index first.
    """
    if not 0 <= ratio < 1:
        raise ConfigError('pruning ratio must be in [0, 1), got %s' % ratio)
    mags = _magnitudes(w)
    flat = mags.reshape(-1)
    order = numpy.argsort(flat, kind='stable')
    mask = numpy.ones(flat.size, dtype=bool)
    mask[order[:pruned_count(ratio, flat.size)]] = False
    return mask.reshape(mags.shape)


def compute_global_masks(weights, ratio):
    """ Masks for several tensors from a single magnitude ranking """
    if not 0 <= ratio < 1:
        raise ConfigError('pruning ratio must be in [0, 1), got %s' % ratio)
    mags = [_magnitudes(w) for w in weights]
    flat = numpy.concatenate([m.reshape(-1) for m in mags])
    order = numpy.argsort(flat, kind='stable')
    keep = numpy.ones(flat.size, dtype=bool)
    keep[order[:pruned_count(ratio, flat.size)]] = False
    masks, start = [], 0
    for m in mags:
        masks.append(keep[start:start + m.size].reshape(m.shape))
        start += m.size
    return masks


def apply_mask(w, mask):
    """ w * M as a graph op """
    mask = numpy.asarray(mask)
    if mask.shape != w.shape:
        raise ShapeError('apply_mask', w.shape, mask.shape)
    return mul(w, Tensor(mask.astype(DTYPE)))


def sparsity(mask):
    mask = numpy.asarray(mask, dtype=bool)
    return 1.0 - float(mask.sum()) / mask.size


def maybe_update_masks(model, sched, epoch, iteration):
    """ Recompute every prunable layer's mask from its latent weights when
    iteration is a multiple of the update period. Returns True on update. """
    if model.phase != 1:
        raise PhaseError('masks are only recomputed in phase 1 (model is in phase %s)' % model.phase)
    if iteration % sched.update_period != 0:
        return False
    ratio = current_ratio(sched, epoch)
    layers = model.prunable_layers()
    if sched.scope == 'global':
        masks = compute_global_masks([layer.weight for layer in layers], ratio)
    else:
        masks = [compute_mask(layer.weight, ratio) for layer in layers]
    # swap each layer's mask in one assignment
    for layer, mask in zip(layers, masks):
        layer.mask = mask
    logger.debug('epoch %s iteration %s: masks updated at ratio %.4f', epoch, iteration, ratio)
    return True
