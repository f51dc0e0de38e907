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

# Finite-difference verification of analytic gradients

import numpy
from .tensor import DTYPE, Parameter, Tape, Tensor, backward, mul, sum as tsum


def relative_error(a, b):
    """ Norm-wise relative error ||a - b|| / max(||a||, ||b||) """
    a = numpy.asarray(a, dtype=numpy.float64)
    b = numpy.asarray(b, dtype=numpy.float64)
    scale = max(numpy.linalg.norm(a), numpy.linalg.norm(b))
    if scale == 0:
        return 0.0
    return float(numpy.linalg.norm(a - b) / scale)


def numeric_gradient(fn, arr, step=1e-3):
    """ Central differences of scalar fn() w.r.t. float32 array arr

    arr is perturbed in place and restored; the actual perturbation after
    rounding to float32 is used as the divisor.
    """
    flat = arr.reshape(-1)
    grad = numpy.zeros(flat.size, dtype=numpy.float64)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + DTYPE(step)
        hi, fhi = float(flat[i]), fn()
        flat[i] = orig - DTYPE(step)
        lo, flo = float(flat[i]), fn()
        flat[i] = orig
        grad[i] = (fhi - flo) / (hi - lo)
    return grad.reshape(arr.shape)


def check_gradient(build, inputs, step=1e-3, seed=0, wrt=None):
    """ Worst relative error between analytic and numeric gradients

    build(*tensors) -> Tensor is evaluated on Parameters made from inputs.
    Non-scalar outputs are reduced by a fixed random projection so that every
    output element contributes. wrt limits the check to some input positions.
    """
    rng = numpy.random.default_rng(seed)
    params = [Parameter(numpy.array(a, dtype=DTYPE)) for a in inputs]
    wrt = range(len(params)) if wrt is None else wrt

    with Tape() as tape:
        out = build(*params)
        projection = rng.standard_normal(out.shape).astype(DTYPE)
        loss = tsum(mul(out, Tensor(projection)))
    analytic = backward(tape, loss, params)

    weights = projection.astype(numpy.float64).ravel()

    def projected():
        return float(numpy.dot(build(*params).data.astype(numpy.float64).ravel(), weights))

    errors = []
    for i in wrt:
        numeric = numeric_gradient(projected, params[i].data, step)
        errors.append(relative_error(analytic[i], numeric))
    return max(errors)
