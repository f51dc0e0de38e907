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

# Datasets: built-in synthetic generators and precomputed feature files

import logging
import math
import numpy
from .checkpoint import read_tensor_file, write_tensor_file
from .errors import ConfigError, DataError
from .tensor import DTYPE
from .utils import read_bytes, write_bytes


logger = logging.getLogger(__name__)

SPLITS = ('train', 'dev', 'test')
TASKS = ('two-spirals', 'gaussian-blobs', 'patch-textures')

# class layout of the generators, fixed so that train and dev draws share it
LAYOUT_SEED = 1129


class Dataset(object):
    """ Feature array [N, ...] with integer labels in [0, classes) """

    def __init__(self, features, labels, split='train', classes=None, name=''):
        features = numpy.ascontiguousarray(features, dtype=DTYPE)
        labels = numpy.asarray(labels, dtype=numpy.int64)
        if split not in SPLITS:
            raise ConfigError('unknown split %s' % split)
        if features.ndim < 2 or len(features) < 1:
            raise DataError('%s: dataset needs at least one example with features' % name)
        if labels.shape != (len(features),):
            raise DataError('%s: %s labels for %s examples' % (name, labels.size, len(features)))
        classes = int(labels.max()) + 1 if classes is None else int(classes)
        if labels.min() < 0 or labels.max() >= classes:
            raise DataError('%s: labels outside [0, %s)' % (name, classes))
        self.features = features
        self.labels = labels
        self.split = split
        self.classes = classes
        self.name = name

    def __len__(self):
        return len(self.labels)

    def __repr__(self):
        return '<Dataset %s %s n=%s shape=%s classes=%s>' % (
            self.name, self.split, len(self), self.example_shape, self.classes)

    @property
    def example_shape(self):
        return tuple(self.features.shape[1:])

    def num_batches(self, batch_size):
        return int(math.ceil(len(self) / float(batch_size)))

    def batches(self, batch_size, seed=None, epoch=None):
        """ (x, y) batches; shuffled as a pure function of (seed, epoch) when seed is given """
        if seed is None:
            order = numpy.arange(len(self))
        else:
            order = epoch_order(len(self), seed, epoch or 0)
        for start in range(0, len(self), batch_size):
            index = order[start:start + batch_size]
            yield self.features[index], self.labels[index]

    def class_counts(self):
        return numpy.bincount(self.labels, minlength=self.classes)


def epoch_order(n, seed, epoch):
    return numpy.random.default_rng([int(seed), int(epoch)]).permutation(n)


# Synthetic generators

def _two_spirals(n, rng):
    """ Two interleaved 2-D spirals, one class each """
    sizes = (n - n // 2, n // 2)
    points = []
    for c, size in enumerate(sizes):
        t = (0.25 + 2.25 * numpy.sqrt(rng.uniform(0, 1, size))) * math.pi
        r = t / (2.5 * math.pi)
        xy = numpy.stack([r * numpy.cos(t), r * numpy.sin(t)], axis=1)
        if c == 1:
            xy = -xy
        points.append(xy + rng.normal(0, 0.02, xy.shape))
    labels = numpy.concatenate([numpy.full(s, c) for c, s in enumerate(sizes)])
    return numpy.concatenate(points), labels


def _gaussian_blobs(n, rng, classes=3, dims=2, spread=1.0):
    """ Isotropic gaussian clusters around fixed random centers """
    centers = numpy.random.default_rng(LAYOUT_SEED).uniform(-4, 4, size=(classes, dims))
    labels = numpy.arange(n) % classes
    return centers[labels] + rng.normal(0, spread, (n, dims)), labels


def _patch_textures(n, rng, classes=8, size=16, noise=0.5):
    """ [1, size, size] oriented sinusoid patches; the class sets orientation and frequency """
    orientations = int(math.ceil(classes / 2.0))
    labels = numpy.arange(n) % classes
    theta = math.pi * (labels % orientations) / orientations
    freq = numpy.where(labels < orientations, 2.0, 4.0)
    yy, xx = numpy.mgrid[0:size, 0:size] / float(size)
    phase = rng.uniform(0, 2 * math.pi, n)
    arg = (xx[None] * numpy.cos(theta)[:, None, None] + yy[None] * numpy.sin(theta)[:, None, None])
    images = numpy.sin(2 * math.pi * freq[:, None, None] * arg + phase[:, None, None])
    images = images + rng.normal(0, noise, images.shape)
    return images[:, None, :, :], labels


GENERATORS = {
    'two-spirals': (_two_spirals, 2),
    'gaussian-blobs': (_gaussian_blobs, 3),
    'patch-textures': (_patch_textures, 8),
}


def make_synthetic(task, n, seed, split='train', **options):
    """ Deterministic synthetic dataset, a pure function of (task, n, seed, options) """
    if task not in GENERATORS:
        raise ConfigError('unknown synthetic task %s (expected one of %s)' % (task, ', '.join(TASKS)))
    func, classes = GENERATORS[task]
    if task == 'two-spirals':
        if options:
            raise ConfigError('two-spirals takes no options')
    else:
        classes = int(options.setdefault('classes', classes))
    if n < 2 * classes:
        raise ConfigError('%s needs n >= %s, got %s' % (task, 2 * classes, n))
    rng = numpy.random.default_rng(seed)
    try:
        features, labels = func(n, rng, **options)
    except TypeError as e:
        raise ConfigError('bad options for %s: %s' % (task, e))
    order = rng.permutation(n)
    name = 'synthetic:%s:%s:%s' % (task, n, seed)
    return Dataset(features[order], labels[order], split=split, classes=classes, name=name)


# Files

def read_labels(path):
    """ Raw little-endian u16 labels, one per example """
    raw = read_bytes(path)
    if len(raw) % 2:
        raise DataError('%s: label file has odd length %s' % (path, len(raw)))
    return numpy.frombuffer(raw, dtype='<u2').astype(numpy.int64)


def write_labels(path, labels):
    labels = numpy.asarray(labels)
    if labels.size and (labels.min() < 0 or labels.max() > 65535):
        raise DataError('%s: labels do not fit in u16' % path)
    write_bytes(path, labels.astype('<u2').tobytes())


def load_dataset(features_path, labels_path, split='train', classes=None):
    features = read_tensor_file(features_path)
    if features.dtype != DTYPE:
        raise DataError('%s: features must be f32, got %s' % (features_path, features.dtype))
    labels = read_labels(labels_path)
    return Dataset(features, labels, split=split, classes=classes, name=features_path)


def save_dataset(dataset, features_path, labels_path):
    write_tensor_file(features_path, dataset.features)
    write_labels(labels_path, dataset.labels)


def _parse_options(text):
    options = {}
    for item in text.split(','):
        key, _, value = item.partition('=')
        if not key or not value:
            raise ConfigError('bad synthetic option %r (expected key=value)' % item)
        options[key] = float(value) if '.' in value else int(value)
    return options


def resolve_data(spec, cfg=None, split=None, classes=None):
    """ Dataset from a spec string

    train | dev                          the splits named in cfg.data
    FEATURES,LABELS                      a PQKT f32 feature file and a u16 label file
    synthetic:TASK:N:SEED[:key=val,...]  a generated dataset
    """
    if spec in ('train', 'dev'):
        if cfg is None:
            raise ConfigError('data spec %s needs a configuration' % spec)
        return resolve_data(getattr(cfg.data, spec), split=spec, classes=cfg.arch.classes)
    split = split or 'test'
    if spec.startswith('synthetic:'):
        parts = spec.split(':')
        if len(parts) not in (4, 5):
            raise ConfigError('bad synthetic data spec %s (expected synthetic:TASK:N:SEED)' % spec)
        try:
            n, seed = int(parts[2]), int(parts[3])
        except ValueError:
            raise ConfigError('bad synthetic data spec %s (N and SEED must be integers)' % spec)
        options = _parse_options(parts[4]) if len(parts) == 5 else {}
        return make_synthetic(parts[1], n, seed, split=split, **options)
    if ',' in spec:
        features, labels = spec.split(',', 1)
        return load_dataset(features, labels, split=split, classes=classes)
    raise ConfigError('cannot interpret data spec %r' % spec)


def check_compatible(dataset, arch):
    """ Dataset shape and label range must match the architecture """
    if list(dataset.example_shape) != list(arch.input_shape):
        raise DataError('%s: examples have shape %s, model expects %s' % (
            dataset.name, list(dataset.example_shape), list(arch.input_shape)))
    if dataset.labels.max() >= arch.classes:
        raise DataError('%s: labels outside [0, %s)' % (dataset.name, arch.classes))
