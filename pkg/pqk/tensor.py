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

# Dense float32 tensors and reverse-mode automatic differentiation
#
# Ops run eagerly on numpy arrays. While a Tape is active every op whose inputs
# require gradients is recorded on it together with a closure computing the
# gradients of its parents; creation order is a valid topological order.

import threading
import numpy
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import log_softmax as _log_softmax
from .errors import ShapeError


DTYPE = numpy.float32

_local = threading.local()


def _tapes():
    if not hasattr(_local, 'tapes'):
        _local.tapes = []
    return _local.tapes


def active_tape():
    """ Innermost tape of the calling thread, None when not recording """
    tapes = _tapes()
    return tapes[-1] if tapes else None


class Tape(object):
    """ Computation graph recorded by one training step """

    def __init__(self):
        self.nodes = []
        self.visits = 0

    def __enter__(self):
        _tapes().append(self)
        return self

    def __exit__(self, *exc):
        _tapes().pop()
        return False

    def __len__(self):
        return len(self.nodes)

    def record(self, node):
        node.tape = self
        self.nodes.append(node)

    def backward(self, loss, params=()):
        return backward(self, loss, params)


class Tensor(object):
    """ Dense n-dimensional array of 32-bit reals """

    # make numpy scalars defer to the operators below
    __array_priority__ = 100

    def __init__(self, data, requires_grad=False, name=None):
        self.data = numpy.asarray(data, dtype=DTYPE)
        self.requires_grad = requires_grad
        self.name = name
        self.grad = None
        self.parents = ()
        self.grad_fn = None
        self.tape = None

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    def numpy(self):
        return self.data

    def item(self):
        if self.size != 1:
            raise ShapeError('item', self.shape)
        return float(self.data.reshape(-1)[0])

    def __repr__(self):
        name = '' if self.name is None else ' %s' % self.name
        return '<Tensor%s shape=%s>' % (name, self.shape)

    def __add__(self, other):
        return add(self, other)

    def __radd__(self, other):
        return add(other, self)

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        if isinstance(other, Tensor):
            return mul(self, other)
        return scalar_mul(self, other)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __truediv__(self, other):
        return scalar_mul(self, 1.0 / other)

    def __neg__(self):
        return scalar_mul(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)


class Parameter(Tensor):
    """ Trainable leaf tensor, updated in place by an optimizer """

    def __init__(self, data, name=None):
        super(Parameter, self).__init__(numpy.array(data, dtype=DTYPE), requires_grad=True, name=name)


def detach(x):
    """ Same values, cut from the graph """
    return Tensor(x.data, name=x.name)


def _operand(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def record_op(data, parents, grad_fn):
    out = Tensor(data)
    tape = active_tape()
    if tape is not None and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out.parents = parents
        out.grad_fn = grad_fn
        tape.record(out)
    return out


def _check_broadcast(op, a, b):
    if a.shape != b.shape and a.ndim != 0 and b.ndim != 0:
        raise ShapeError(op, a.shape, b.shape)


def _reduce_to(g, shape):
    """ Sum a broadcast gradient back down to a scalar operand """
    if g.shape == shape:
        return g
    return numpy.asarray(g.sum(), dtype=DTYPE).reshape(shape)


# Elementwise


def add(a, b):
    a, b = _operand(a), _operand(b)
    _check_broadcast('add', a, b)

    def grad_fn(g):
        return _reduce_to(g, a.shape), _reduce_to(g, b.shape)
    return record_op(a.data + b.data, (a, b), grad_fn)


def sub(a, b):
    a, b = _operand(a), _operand(b)
    _check_broadcast('sub', a, b)

    def grad_fn(g):
        return _reduce_to(g, a.shape), _reduce_to(-g, b.shape)
    return record_op(a.data - b.data, (a, b), grad_fn)


def mul(a, b):
    """ Elementwise product """
    a, b = _operand(a), _operand(b)
    _check_broadcast('mul', a, b)

    def grad_fn(g):
        return _reduce_to(g * b.data, a.shape), _reduce_to(g * a.data, b.shape)
    return record_op(a.data * b.data, (a, b), grad_fn)


mul_elementwise = mul


def scalar_mul(a, c):
    """ Product with a constant real """
    a = _operand(a)
    c = DTYPE(c)

    def grad_fn(g):
        return (g * c,)
    return record_op(a.data * c, (a,), grad_fn)


def exp(x):
    out = numpy.exp(x.data)

    def grad_fn(g):
        return (g * out,)
    return record_op(out, (x,), grad_fn)


def relu(x):
    """ max(x, 0), NaN propagates; the subgradient at 0 is 0 """
    positive = x.data > 0

    def grad_fn(g):
        return (g * positive,)
    return record_op(numpy.maximum(x.data, DTYPE(0)), (x,), grad_fn)


# Shapes and reductions


def reshape(x, shape):
    def grad_fn(g):
        return (g.reshape(x.shape),)
    return record_op(x.data.reshape(shape), (x,), grad_fn)


def flatten(x):
    """ Collapse all but the leading (batch) dimension """
    return reshape(x, (x.shape[0], -1))


def sum(x):
    """ Sum of all elements, as a scalar """
    def grad_fn(g):
        return (numpy.full(x.shape, g, dtype=DTYPE),)
    return record_op(numpy.asarray(x.data.sum(), dtype=DTYPE), (x,), grad_fn)


def mean(x):
    n = DTYPE(x.size)

    def grad_fn(g):
        return (numpy.full(x.shape, g / n, dtype=DTYPE),)
    return record_op(numpy.asarray(x.data.sum() / n, dtype=DTYPE), (x,), grad_fn)


def row_sum(x):
    """ [N, m] -> [N] """
    def grad_fn(g):
        return (numpy.repeat(g[:, None], x.shape[1], axis=1),)
    return record_op(x.data.sum(axis=1), (x,), grad_fn)


def pick(x, index):
    """ x[n, index[n]] for every row n of a [N, m] tensor """
    rows = numpy.arange(x.shape[0])
    index = numpy.asarray(index)
    if x.ndim != 2 or index.shape != (x.shape[0],):
        raise ShapeError('pick', x.shape, index.shape)

    def grad_fn(g):
        gx = numpy.zeros(x.shape, dtype=DTYPE)
        gx[rows, index] = g
        return (gx,)
    return record_op(x.data[rows, index], (x,), grad_fn)


def add_bias(x, b):
    """ Add a per-channel bias along axis 1 of [N, C] or [N, C, H, W] """
    if b.ndim != 1 or x.ndim < 2 or x.shape[1] != b.shape[0]:
        raise ShapeError('add_bias', x.shape, b.shape)
    shape = (1, -1) + (1,) * (x.ndim - 2)
    axes = (0,) + tuple(range(2, x.ndim))

    def grad_fn(g):
        return g, g.sum(axis=axes)
    return record_op(x.data + b.data.reshape(shape), (x, b), grad_fn)


# Linear algebra and convolution


def matmul(a, b):
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError('matmul', a.shape, b.shape)

    def grad_fn(g):
        ga = g.dot(b.data.T) if a.requires_grad else None
        gb = a.data.T.dot(g) if b.requires_grad else None
        return ga, gb
    return record_op(a.data.dot(b.data), (a, b), grad_fn)


def _pair(v):
    return (v, v) if numpy.isscalar(v) else tuple(v)


def _pad(arr, padding):
    if padding == 0:
        return arr
    p = padding
    return numpy.pad(arr, ((0, 0), (0, 0), (p, p), (p, p)))


def _windows(xp, kh, kw, stride):
    """ Strided view of all kh x kw windows: [N, C, Ho, Wo, kh, kw] """
    return sliding_window_view(xp, (kh, kw), axis=(2, 3))[:, :, ::stride, ::stride]


def _scatter_windows(g, shape, kh, kw, stride):
    """ Adjoint of _windows: accumulate [N, C, Ho, Wo, kh, kw] back into shape """
    ho, wo = g.shape[2], g.shape[3]
    out = numpy.zeros(shape, dtype=DTYPE)
    for i in range(kh):
        for j in range(kw):
            out[:, :, i:i + stride * ho:stride, j:j + stride * wo:stride] += g[:, :, :, :, i, j]
    return out


def _unpad(arr, padding):
    if padding == 0:
        return arr
    p = padding
    return arr[:, :, p:-p, p:-p]


def conv2d(x, w, stride=1, padding=0):
    """ 2-D cross-correlation with zero padding, computed through im2col """
    if x.ndim != 4 or w.ndim != 4 or x.shape[1] != w.shape[1]:
        raise ShapeError('conv2d', x.shape, w.shape)
    n, cin, h, wd = x.shape
    cout, _, kh, kw = w.shape
    if kh > h + 2 * padding or kw > wd + 2 * padding:
        raise ShapeError('conv2d (kernel larger than padded input)', x.shape, w.shape)
    xp = _pad(x.data, padding)
    windows = _windows(xp, kh, kw, stride)
    ho, wo = windows.shape[2], windows.shape[3]
    cols = windows.transpose(0, 2, 3, 1, 4, 5).reshape(n * ho * wo, cin * kh * kw)
    wmat = w.data.reshape(cout, -1)
    out = cols.dot(wmat.T).reshape(n, ho, wo, cout).transpose(0, 3, 1, 2)

    def grad_fn(g):
        gmat = g.transpose(0, 2, 3, 1).reshape(-1, cout)
        gw = gmat.T.dot(cols).reshape(w.shape) if w.requires_grad else None
        gx = None
        if x.requires_grad:
            gcols = gmat.dot(wmat).reshape(n, ho, wo, cin, kh, kw).transpose(0, 3, 1, 2, 4, 5)
            gx = _unpad(_scatter_windows(gcols, xp.shape, kh, kw, stride), padding)
        return gx, gw
    return record_op(numpy.ascontiguousarray(out), (x, w), grad_fn)


def avg_pool2d(x, kernel, stride=None, padding=0):
    """ Average pooling; the divisor counts only cells inside the unpadded input """
    kh, kw = _pair(kernel)
    stride = kh if stride is None else stride
    if x.ndim != 4 or kh > x.shape[2] + 2 * padding or kw > x.shape[3] + 2 * padding:
        raise ShapeError('avg_pool2d', x.shape, (kh, kw))
    xp = _pad(x.data, padding)
    valid = _pad(numpy.ones((1, 1) + x.shape[2:], dtype=DTYPE), padding)
    counts = _windows(valid, kh, kw, stride).sum(axis=(4, 5))
    out = _windows(xp, kh, kw, stride).sum(axis=(4, 5)) / counts

    def grad_fn(g):
        share = (g / counts)[:, :, :, :, None, None]
        spread = numpy.broadcast_to(share, g.shape + (kh, kw))
        return (_unpad(_scatter_windows(spread, xp.shape, kh, kw, stride), padding),)
    return record_op(out.astype(DTYPE, copy=False), (x,), grad_fn)


def global_avg_pool(x):
    """ [N, C, H, W] -> [N, C] """
    if x.ndim != 4:
        raise ShapeError('global_avg_pool', x.shape)
    cells = DTYPE(x.shape[2] * x.shape[3])

    def grad_fn(g):
        return (numpy.broadcast_to((g / cells)[:, :, None, None], x.shape).astype(DTYPE),)
    return record_op(x.data.sum(axis=(2, 3)) / cells, (x,), grad_fn)


# Normalization


class BatchNormParams(object):
    """ Affine parameters and running statistics of one batch-norm set """

    def __init__(self, channels, eps=1e-5, momentum=0.1, name='bn'):
        self.name = name
        self.eps = eps
        self.momentum = momentum
        self.gamma = Parameter(numpy.ones(channels), name=name + '.gamma')
        self.beta = Parameter(numpy.zeros(channels), name=name + '.beta')
        self.running_mean = numpy.zeros(channels, dtype=DTYPE)
        self.running_var = numpy.ones(channels, dtype=DTYPE)

    @property
    def channels(self):
        return self.gamma.shape[0]

    def parameters(self):
        return [self.gamma, self.beta]

    def copy(self, name=None):
        """ Deep copy, optionally renamed """
        name = self.name if name is None else name
        other = BatchNormParams(self.channels, self.eps, self.momentum, name=name)
        other.gamma.data = self.gamma.data.copy()
        other.beta.data = self.beta.data.copy()
        other.running_mean = self.running_mean.copy()
        other.running_var = self.running_var.copy()
        return other

    def equals(self, other):
        return all(numpy.array_equal(a, b) for a, b in zip(self.arrays(), other.arrays()))

    def arrays(self):
        return [self.gamma.data, self.beta.data, self.running_mean, self.running_var]


def batchnorm(x, params, training, update_stats=True):
    """ Batch normalization over (N, H, W) per channel, or over N for [N, C] """
    if x.ndim not in (2, 4) or x.shape[1] != params.channels:
        raise ShapeError('batchnorm', x.shape, (params.channels,))
    axes = (0,) if x.ndim == 2 else (0, 2, 3)
    shape = (1, -1) + (1,) * (x.ndim - 2)
    count = x.size // params.channels
    if training:
        mu = x.data.mean(axis=axes)
        var = x.data.var(axis=axes)
        if update_stats:
            m = DTYPE(params.momentum)
            unbiased = var * DTYPE(count / (count - 1.0)) if count > 1 else var
            params.running_mean = ((1 - m) * params.running_mean + m * mu).astype(DTYPE)
            params.running_var = ((1 - m) * params.running_var + m * unbiased).astype(DTYPE)
    else:
        mu, var = params.running_mean, params.running_var
    invstd = (1.0 / numpy.sqrt(var + DTYPE(params.eps))).astype(DTYPE)
    xhat = (x.data - mu.reshape(shape)) * invstd.reshape(shape)
    gamma, beta = params.gamma, params.beta
    out = xhat * gamma.data.reshape(shape) + beta.data.reshape(shape)

    def grad_fn(g):
        gbeta = g.sum(axis=axes)
        ggamma = (g * xhat).sum(axis=axes)
        gxhat = g * gamma.data.reshape(shape)
        if training:
            # statistics depend on x as well
            s1 = gxhat.sum(axis=axes, keepdims=True)
            s2 = (gxhat * xhat).sum(axis=axes, keepdims=True)
            gx = (invstd.reshape(shape) / DTYPE(count)) * (DTYPE(count) * gxhat - s1 - xhat * s2)
        else:
            gx = gxhat * invstd.reshape(shape)
        return gx, ggamma, gbeta
    return record_op(out, (x, gamma, beta), grad_fn)


# Softmax family


def log_softmax(z):
    """ Row-wise log-softmax of [N, m] logits, stabilized by max subtraction """
    if z.ndim != 2 or z.shape[1] < 2:
        raise ShapeError('log_softmax', z.shape)
    out = _log_softmax(z.data, axis=1).astype(DTYPE, copy=False)

    def grad_fn(g):
        return (g - numpy.exp(out) * g.sum(axis=1, keepdims=True),)
    return record_op(out, (z,), grad_fn)


# Reverse pass


def backward(tape, loss, params=()):
    """ Accumulate d loss / d node over the tape in reverse creation order

    Leaves reached from loss get their .grad replaced; every tensor in params
    that is not reached gets a zero gradient. Returns the gradients of params.
    """
    if loss.size != 1:
        raise ShapeError('backward (loss must be scalar)', loss.shape)
    for p in params:
        p.grad = numpy.zeros(p.shape, dtype=DTYPE)
    tape.visits = 0
    if not loss.requires_grad:
        return [p.grad for p in params]
    if loss.grad_fn is None:
        loss.grad = numpy.ones(loss.shape, dtype=DTYPE)
        return [p.grad for p in params]

    pending = {id(loss): numpy.ones(loss.shape, dtype=DTYPE)}
    touched = set()
    for node in reversed(tape.nodes):
        g = pending.pop(id(node), None)
        if g is None:
            continue
        tape.visits += 1
        for parent, pg in zip(node.parents, node.grad_fn(g)):
            if pg is None or not parent.requires_grad:
                continue
            pg = numpy.asarray(pg, dtype=DTYPE)
            if pg.shape != parent.shape:
                raise ShapeError('backward', pg.shape, parent.shape)
            if parent.grad_fn is None:
                if id(parent) in touched:
                    parent.grad = parent.grad + pg
                else:
                    touched.add(id(parent))
                    parent.grad = pg
            else:
                slot = pending.get(id(parent))
                pending[id(parent)] = pg if slot is None else slot + pg
    return [p.grad for p in params]
