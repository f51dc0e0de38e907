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

# Binary tensor files, checkpoints and quantized export artifacts
#
# Tensor record (PQKT):  magic | version u8 | dtype u8 | rank u8 | rank x u64 dims | payload
# Container (PQKC/PQKX): magic | version u8 | u32 manifest length | JSON manifest | PQKT records
#
# Everything on disk is little-endian. Manifests are canonical JSON (sorted keys,
# compact separators) so that load followed by save reproduces the same bytes.

import json
import logging
import struct
import zlib
from collections import OrderedDict
import numpy
from .config import OptimConfig, config_from_json, from_dict
from .errors import ConfigError, CorruptCheckpointError, DataError, FormatError, NumericError
from .model import (STUDENT, TEACHER, ArchConfig, build_from_config, build_model, clone_bn_for_teacher,
                    forward_student)
from .optim import SGD
from .quantizer import ROUND_MODE, QuantSpec, dequantize, quantize
from .tensor import DTYPE
from .utils import read_bytes, write_bytes


logger = logging.getLogger(__name__)

TENSOR_MAGIC = b'PQKT'
CHECKPOINT_MAGIC = b'PQKC'
EXPORT_MAGIC = b'PQKX'
VERSION = 1

F32, I8, BITS = 0, 1, 2
DTYPE_NAMES = {F32: 'f32', I8: 'i8', BITS: 'u8-bitpacked'}

STAGES = ('phase1', 'phase2', 'finetune', 'vanilla')


# Tensor records

def _dtype_code(arr):
    if arr.dtype == numpy.bool_:
        return BITS
    if arr.dtype == numpy.int8:
        return I8
    if arr.dtype == numpy.float32:
        return F32
    raise DataError('cannot store dtype %s (expected float32, int8 or bool)' % arr.dtype)


def _payload_size(code, count):
    if code == F32:
        return 4 * count
    if code == I8:
        return count
    return (count + 7) // 8


def encode_tensor(arr):
    """ One PQKT record as bytes """
    arr = numpy.asarray(arr)
    code = _dtype_code(arr)
    if arr.ndim > 255:
        raise DataError('rank %s does not fit the tensor format' % arr.ndim)
    flat = arr.reshape(-1)
    if code == BITS:
        payload = numpy.packbits(flat, bitorder='little').tobytes()
    elif code == I8:
        payload = flat.astype('i1').tobytes()
    else:
        payload = flat.astype('<f4').tobytes()
    header = TENSOR_MAGIC + struct.pack('<BBB', VERSION, code, arr.ndim)
    return header + numpy.asarray(arr.shape, dtype='<u8').tobytes() + payload


def decode_tensor(buf, offset=0, path=None):
    """ Decode the record starting at offset; returns (array, end offset) """
    def need(count, what):
        if offset + count > len(buf):
            raise FormatError('truncated %s' % what, offset, path)

    start = offset
    need(4, 'magic')
    if buf[offset:offset + 4] != TENSOR_MAGIC:
        raise FormatError('bad magic %r' % bytes(buf[offset:offset + 4]), offset, path)
    offset += 4
    need(3, 'header')
    version, code, rank = struct.unpack_from('<BBB', buf, offset)
    if version != VERSION:
        raise FormatError('unsupported tensor version %s' % version, offset, path)
    if code not in DTYPE_NAMES:
        raise FormatError('unknown dtype code %s' % code, offset + 1, path)
    offset += 3
    need(8 * rank, 'dims')
    shape = ()
    if rank:
        shape = tuple(int(d) for d in numpy.frombuffer(buf, dtype='<u8', count=rank, offset=offset))
    offset += 8 * rank
    count = int(numpy.prod(shape)) if rank else 1
    nbytes = _payload_size(code, count)
    need(nbytes, 'payload')
    raw = numpy.frombuffer(buf, dtype=numpy.uint8, count=nbytes, offset=offset)
    if code == BITS:
        arr = numpy.unpackbits(raw, count=count, bitorder='little').astype(bool)
    elif code == I8:
        arr = raw.view(numpy.int8).copy()
    else:
        arr = raw.view('<f4').astype(DTYPE)
    logger.debug('decoded %s %s at offset %s', DTYPE_NAMES[code], shape, start)
    return arr.reshape(shape), offset + nbytes


def write_tensor_file(path, arr):
    """ Write a float32, int8 or bool (bit-packed) array """
    data = encode_tensor(arr)
    write_bytes(path, data)
    return len(data)


def read_tensor_file(path):
    """ Read a tensor file as a numpy array (float32, int8 or bool) """
    buf = read_bytes(path)
    arr, end = decode_tensor(buf, 0, path)
    if end != len(buf):
        raise FormatError('%s trailing bytes' % (len(buf) - end), end, path)
    return arr


# Containers

def canonical_json(obj):
    return json.dumps(obj, sort_keys=True, separators=(',', ':'))


def pack_container(magic, manifest, blobs):
    """ Manifest plus named arrays; the manifest gains a blob table """
    records, entries, offset = [], [], 0
    for name, arr in blobs.items():
        rec = encode_tensor(arr)
        entries.append(OrderedDict([('name', name), ('offset', offset), ('nbytes', len(rec)),
                                    ('crc32', zlib.crc32(rec))]))
        records.append(rec)
        offset += len(rec)
    manifest = dict(manifest, blobs=entries)
    text = canonical_json(manifest).encode('utf-8')
    return magic + struct.pack('<BI', VERSION, len(text)) + text + b''.join(records)


def unpack_container(buf, magic, path=None):
    """ (manifest, OrderedDict of arrays) from container bytes """
    if len(buf) < 4:
        raise FormatError('truncated magic', 0, path)
    if buf[:4] != magic:
        raise FormatError('bad magic %r (expected %r)' % (bytes(buf[:4]), magic), 0, path)
    if len(buf) < 9:
        raise FormatError('truncated header', 4, path)
    version, length = struct.unpack_from('<BI', buf, 4)
    if version != VERSION:
        raise FormatError('unsupported container version %s' % version, 4, path)
    base = 9 + length
    if base > len(buf):
        raise FormatError('truncated manifest', 9, path)
    try:
        manifest = json.loads(buf[9:base].decode('utf-8'))
    except ValueError as e:
        raise CorruptCheckpointError('%s: unreadable manifest: %s' % (path, e))
    blobs, expected = OrderedDict(), base
    for entry in manifest.get('blobs', []):
        name = entry['name']
        start = base + entry['offset']
        end = start + entry['nbytes']
        if start != expected or end > len(buf):
            raise CorruptCheckpointError('%s: blob %s lies outside the file' % (path, name))
        record = buf[start:end]
        if zlib.crc32(record) != entry['crc32']:
            raise CorruptCheckpointError('%s: checksum mismatch in blob %s' % (path, name))
        try:
            arr, stop = decode_tensor(record, 0, path)
        except FormatError as e:
            raise CorruptCheckpointError('%s: blob %s: %s' % (path, name, e))
        if stop != len(record):
            raise CorruptCheckpointError('%s: blob %s size disagrees with manifest' % (path, name))
        blobs[name] = arr
        expected = end
    if expected != len(buf):
        raise CorruptCheckpointError('%s: %s unexpected trailing bytes' % (path, len(buf) - expected))
    return manifest, blobs


def _blob(blobs, name, path):
    if name not in blobs:
        raise CorruptCheckpointError('%s: missing blob %s' % (path, name))
    return blobs[name]


def _take(blobs, name, shape, path, dtype=None):
    arr = _blob(blobs, name, path)
    if tuple(arr.shape) != tuple(shape) or (dtype is not None and arr.dtype != dtype):
        raise CorruptCheckpointError('%s: blob %s has shape %s, manifest says %s' % (
            path, name, list(arr.shape), list(shape)))
    return arr


# Checkpoints

class Checkpoint(object):
    """ Model, optimizer and configuration of a run plus its position

    Iterating yields (model, optimizer, config).
    """

    def __init__(self, model, optimizer, config, stage='phase1', epoch=0, iteration=0):
        if stage not in STAGES:
            raise ConfigError('unknown stage %s' % stage)
        self.model = model
        self.optimizer = optimizer
        self.config = config
        self.stage = stage
        self.epoch = epoch
        self.iteration = iteration

    def __iter__(self):
        return iter((self.model, self.optimizer, self.config))

    def __repr__(self):
        return '<Checkpoint %s epoch=%s iteration=%s>' % (self.stage, self.epoch, self.iteration)


def _layer_entry(layer):
    q = layer.quant
    return OrderedDict([
        ('name', layer.name), ('kind', layer.kind), ('shape', list(layer.shape)),
        ('stride', layer.stride), ('padding', layer.padding), ('bias', layer.bias is not None),
        ('quant', OrderedDict([('bits', q.bits), ('step_size', q.step_size), ('trainable', q.trainable),
                               ('enabled', q.enabled), ('initialized', q.initialized)])),
        ('sparsity', layer.sparsity)])


def _model_blobs(model, paths=(STUDENT, TEACHER)):
    blobs = OrderedDict()
    for layer in model.prunable_layers():
        blobs[layer.name + '.weight'] = layer.weight.data
        if layer.bias is not None:
            blobs[layer.name + '.bias'] = layer.bias.data
        blobs[layer.name + '.mask'] = layer.mask
        blobs[layer.name + '.step_size'] = layer.quant.step.data
    for name, state in model.bns.items():
        for path, params in state.sets.items():
            if path in paths:
                for key, arr in zip(('gamma', 'beta', 'running_mean', 'running_var'), params.arrays()):
                    blobs['%s.%s.%s' % (name, path, key)] = arr
    return blobs


def save_checkpoint(model, opt, config, path, stage=None, epoch=0, iteration=0):
    """ Persist everything needed to resume or evaluate; returns bytes written """
    stage = stage or ('phase2' if model.phase == 2 else 'phase1')
    manifest = OrderedDict([
        ('format', 'pqk-checkpoint'), ('version', VERSION), ('stage', stage), ('phase', model.phase),
        ('round_mode', ROUND_MODE), ('config', config.to_dict()),
        ('progress', OrderedDict([('epoch', epoch), ('iteration', iteration)])),
        ('layers', [_layer_entry(layer) for layer in model.prunable_layers()]),
        ('bn', [OrderedDict([('name', name), ('channels', state.get(STUDENT).channels),
                             ('paths', list(state.sets))]) for name, state in model.bns.items()]),
        ('optimizer', None),
    ])
    blobs = _model_blobs(model)
    if opt is not None:
        manifest['optimizer'] = OrderedDict([('config', opt.cfg.to_dict()), ('steps', opt.steps),
                                             ('buffers', list(opt.buffers))])
        for name, buf in opt.buffers.items():
            blobs['optim.' + name] = buf
    data = pack_container(CHECKPOINT_MAGIC, manifest, blobs)
    write_bytes(path, data)
    logger.info('saved %s checkpoint %s (%s bytes)', stage, path, len(data))
    return len(data)


def _restore_layers(model, manifest, blobs, path):
    layers = model.prunable_layers()
    entries = manifest.get('layers', [])
    if [e['name'] for e in entries] != [layer.name for layer in layers]:
        raise CorruptCheckpointError('%s: layers %s do not match the configured architecture' % (
            path, [e['name'] for e in entries]))
    for layer, entry in zip(layers, entries):
        if list(entry['shape']) != list(layer.shape):
            raise CorruptCheckpointError('%s: layer %s has shape %s, architecture says %s' % (
                path, layer.name, entry['shape'], list(layer.shape)))
        layer.weight.data = _take(blobs, layer.name + '.weight', layer.shape, path, DTYPE).copy()
        if layer.bias is not None:
            layer.bias.data = _take(blobs, layer.name + '.bias', layer.bias.shape, path, DTYPE).copy()
        layer.mask = _take(blobs, layer.name + '.mask', layer.shape, path, numpy.bool_).copy()
        step = _take(blobs, layer.name + '.step_size', (), path, DTYPE)
        quant = entry['quant']
        if quant['bits'] != layer.quant.bits or not step > 0:
            raise CorruptCheckpointError('%s: bad quantizer state for layer %s' % (path, layer.name))
        layer.quant.step.data = step.copy()
        layer.quant.trainable = quant['trainable']
        layer.quant.enabled = quant['enabled']
        layer.quant.initialized = quant['initialized']


def _restore_bn(model, manifest, blobs, path):
    for entry in manifest.get('bn', []):
        state = model.bns.get(entry['name'])
        if state is None:
            raise CorruptCheckpointError('%s: unknown batch-norm layer %s' % (path, entry['name']))
        for p in entry['paths']:
            params = state.get(p)
            for key in ('gamma', 'beta', 'running_mean', 'running_var'):
                arr = _take(blobs, '%s.%s.%s' % (entry['name'], p, key), (params.channels,), path, DTYPE).copy()
                if key in ('gamma', 'beta'):
                    getattr(params, key).data = arr
                else:
                    setattr(params, key, arr)


def load_checkpoint(path):
    """ Rebuild the model, optimizer and configuration saved at path """
    manifest, blobs = unpack_container(read_bytes(path), CHECKPOINT_MAGIC, path)
    try:
        config = config_from_json(canonical_json(manifest['config']))
        stage = manifest['stage']
        phase = manifest['phase']
    except KeyError as e:
        raise CorruptCheckpointError('%s: manifest lacks %s' % (path, e))
    model = build_from_config(config)
    _restore_layers(model, manifest, blobs, path)
    if phase == 2:
        clone_bn_for_teacher(model)
        model.phase = 2
    _restore_bn(model, manifest, blobs, path)

    opt = None
    if manifest.get('optimizer') is not None:
        entry = manifest['optimizer']
        opt = SGD(from_dict(OptimConfig, entry['config'], 'optimizer'))
        buffers = OrderedDict((name, _blob(blobs, 'optim.' + name, path)) for name in entry['buffers'])
        opt.load_state_dict({'steps': entry['steps'], 'buffers': buffers})
    progress = manifest.get('progress', {})
    logger.debug('loaded %s checkpoint %s', stage, path)
    return Checkpoint(model, opt, config, stage, progress.get('epoch', 0), progress.get('iteration', 0))


# Deployment export

def export_quantized(model, path):
    """ Integer codes of kept weights, masks, step sizes, biases and student batch-norm """
    manifest_layers, blobs = [], OrderedDict()
    for layer in model.prunable_layers():
        if not layer.quant.enabled:
            raise ConfigError('layer %s is not quantized; nothing to export' % layer.name)
        codes = quantize(layer.weight, layer.quant)[layer.mask]
        entry = OrderedDict([('name', layer.name), ('kind', layer.kind), ('shape', list(layer.shape)),
                             ('bits', layer.quant.bits), ('step_size', layer.quant.step_size),
                             ('kept', int(layer.mask.sum())), ('bias', layer.bias is not None)])
        manifest_layers.append(entry)
        blobs[layer.name + '.codes'] = codes
        blobs[layer.name + '.mask'] = layer.mask
        blobs[layer.name + '.step_size'] = layer.quant.step.data
        if layer.bias is not None:
            blobs[layer.name + '.bias'] = layer.bias.data
    blobs.update(_model_blobs(model, paths=(STUDENT,)))
    for layer in model.prunable_layers():
        del blobs[layer.name + '.weight']
    manifest = OrderedDict([('format', 'pqk-export'), ('version', VERSION), ('round_mode', ROUND_MODE),
                            ('arch', model.arch.to_dict()), ('layers', manifest_layers),
                            ('bn', [OrderedDict([('name', name), ('eps', s.get(STUDENT).eps),
                                                 ('momentum', s.get(STUDENT).momentum)])
                                    for name, s in model.bns.items()])])
    data = pack_container(EXPORT_MAGIC, manifest, blobs)
    write_bytes(path, data)
    logger.info('exported %s layers to %s (%s bytes)', len(manifest_layers), path, len(data))
    return len(data)


def load_export(path):
    """ Student-only model rebuilt from an export artifact """
    manifest, blobs = unpack_container(read_bytes(path), EXPORT_MAGIC, path)
    entries = manifest['layers']
    bits = entries[0]['bits'] if entries else 8
    bn = manifest.get('bn', [])
    eps = bn[0]['eps'] if bn else 1e-5
    momentum = bn[0]['momentum'] if bn else 0.1
    model = build_model(from_dict(ArchConfig, manifest['arch'], 'arch'), bits=bits, bn_eps=eps, bn_momentum=momentum)
    layers = model.prunable_layers()
    if [e['name'] for e in entries] != [layer.name for layer in layers]:
        raise CorruptCheckpointError('%s: layers do not match the exported architecture' % path)
    for layer, entry in zip(layers, entries):
        mask = _take(blobs, layer.name + '.mask', layer.shape, path, numpy.bool_)
        kept = int(mask.sum())
        if kept != entry['kept']:
            raise CorruptCheckpointError('%s: layer %s mask keeps %s weights, manifest says %s' % (
                path, layer.name, kept, entry['kept']))
        step = _take(blobs, layer.name + '.step_size', (), path, DTYPE)
        layer.quant = QuantSpec(bits=entry['bits'], step_size=float(step), trainable=False,
                                name=layer.name + '.step_size')
        layer.quant.step.data = step.copy()
        layer.quant.initialized = True
        codes = _take(blobs, layer.name + '.codes', (kept,), path, numpy.int8)
        weight = numpy.zeros(layer.shape, dtype=DTYPE)
        weight[mask] = dequantize(codes, layer.quant).data
        layer.weight.data = weight
        layer.mask = mask.copy()
        if layer.bias is not None:
            layer.bias.data = _take(blobs, layer.name + '.bias', layer.bias.shape, path, DTYPE).copy()
    _restore_bn(model, {'bn': [{'name': name, 'paths': [STUDENT]} for name in model.bns]}, blobs, path)
    return model


def verify_export(model, path, x, tol=1e-5):
    """ Reload the artifact and compare eval-mode student logits; returns the max difference """
    reloaded = load_export(path)
    expected = forward_student(model, x).data
    actual = forward_student(reloaded, x).data
    diff = float(numpy.abs(expected - actual).max()) if expected.size else 0.0
    if not diff <= tol:
        raise NumericError('%s: exported logits differ by %.3g (tolerance %.1g)' % (path, diff, tol))
    logger.info('verified %s: max logit difference %.3g', path, diff)
    return diff
